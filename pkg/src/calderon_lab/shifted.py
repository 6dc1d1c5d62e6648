"""Shifted dyadic maximal and square functions, bi-parameter hybrids and the CZ decomposition.

Grid conventions: a dyadic interval of ``2^p`` cells is a block of the tree
rooted at the origin cell, so on a torus of ``N`` cells level ``p`` has
``N / 2^p`` blocks and shifts act modulo that count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dyadic import DyadicInterval, GridFunction1D, GridFunction2D, ShiftPair, bracket
from .littlewood_paley import BumpFamily, BumpProfile

MM, SS, MS, SM = "MM", "SS", "MS", "SM"
HYBRID_KINDS = (MM, SS, MS, SM)


class ConfigurationError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


# -- dyadic blocks on the torus -------------------------------------------

def origin_index(f: GridFunction1D) -> int:
    q = -f.x0 / f.spacing
    if abs(q - round(q)) > 1e-9:
        raise ValueError("the origin must be a grid point")
    return int(round(q)) % f.n


def levels(n_cells: int, scales: tuple[int, int] | None = None) -> range:
    top = int(math.log2(n_cells))
    lo, hi = (0, top) if scales is None else scales
    if not 0 <= lo <= hi <= top:
        raise ValueError(f"scale range {scales} outside 0..{top} for {n_cells} cells")
    return range(lo, hi + 1)


def block_index(n_cells: int, p: int, origin: int) -> np.ndarray:
    """Block of every cell at level ``p``, counted from the block starting at the origin."""
    nb = n_cells >> p
    return ((np.arange(n_cells) - origin) >> p) % nb


def block_means(values: np.ndarray, p: int, origin: int) -> np.ndarray:
    """Means over the level-``p`` blocks, indexed as ``block_index``."""
    size = 1 << p
    rolled = np.roll(values, -origin, axis=-1)
    return rolled.reshape(values.shape[:-1] + (-1, size)).mean(axis=-1)


def block_interval(f: GridFunction1D, p: int, b: int) -> DyadicInterval:
    """The dyadic interval of level-``p`` block ``b`` (positions centered on the origin)."""
    nb = f.n >> p
    pos = b if b < nb - nb // 2 else b - nb
    length = f.spacing * 2**p
    scale = -int(round(math.log2(length)))
    return DyadicInterval(scale, pos)


def _block_cells(n_cells: int, p: int, origin: int, b: int) -> np.ndarray:
    return (origin + (b << p) + np.arange(1 << p)) % n_cells


# -- shifted maximal function ---------------------------------------------

@dataclass(frozen=True)
class MaximalReport:
    input_id: str
    shift: int
    output: GridFunction1D
    norms: dict = field(default_factory=dict)
    families: tuple = ()


def _tree(vals: np.ndarray, n: int, origin: int, scales):
    """Coarse-to-fine sweep in origin-rolled coordinates.

    Returns per-level block sups ``V``, winning levels ``arg`` and the level list;
    level ``p`` arrays have ``N / 2^p`` entries.
    """
    n_cells = vals.shape[-1]
    lv = list(levels(n_cells, scales))
    rolled = np.roll(vals, -origin, axis=-1)
    V, arg = {}, {}
    prev_v = prev_a = None
    for p in reversed(lv):
        means = rolled.reshape(vals.shape[:-1] + (-1, 1 << p)).mean(axis=-1)
        cand = np.roll(means, -n, axis=-1)
        if prev_v is None:
            v, a = cand, np.full(cand.shape, p)
        else:
            up_v = np.repeat(prev_v, 1 << (prev_p - p), axis=-1)
            up_a = np.repeat(prev_a, 1 << (prev_p - p), axis=-1)
            better = cand > up_v
            v, a = np.where(better, cand, up_v), np.where(better, p, up_a)
        V[p], arg[p] = v, a
        prev_v, prev_a, prev_p = v, a, p
    return V, arg, lv


def _cell_values(vals, n, origin, scales):
    V, arg, lv = _tree(vals, n, origin, scales)
    p0 = lv[0]
    best = np.repeat(V[p0], 1 << p0, axis=-1)
    win = np.repeat(arg[p0], 1 << p0, axis=-1)
    return np.roll(best, origin, axis=-1), np.roll(win, origin, axis=-1)


def shifted_maximal(f: GridFunction1D, n: int, scales: tuple[int, int] | None = None) -> GridFunction1D:
    """``M_n f(x) = sup_{J dyadic, x in J} avg_{J + n|J|} |f|`` over the grid-resolvable levels."""
    best, _ = _cell_values(np.abs(f.samples), int(n), origin_index(f), scales)
    return f.with_samples(best)


def shifted_maximal_levels(f: GridFunction1D, n: int, scales=None) -> np.ndarray:
    """Winning level ``p`` (block of ``2^p`` cells) at every cell."""
    return _cell_values(np.abs(f.samples), int(n), origin_index(f), scales)[1]


def shifted_maximal_adjoint(f: GridFunction1D, g: np.ndarray, n: int, scales=None) -> np.ndarray:
    """Adjoint of ``M_n`` linearized at ``f`` (each point keeps its winning block) applied to ``g``.

    Mass of cells decided at level ``p`` is collected bottom-up (cells that
    inherited a coarser decision share it with their block), moved ``n``
    blocks, and spread back top-down.
    """
    origin = origin_index(f)
    n = int(n)
    _, arg, lv = _tree(np.abs(f.samples), n, origin, scales)
    p0 = lv[0]
    w = np.roll(np.asarray(g, dtype=float), -origin).reshape(-1, 1 << p0).sum(axis=1)
    spread = {}
    for p in lv:
        if p > p0:
            w = w.reshape(-1, 2).sum(axis=1)
        decided = arg[p] == p
        spread[p] = np.roll(np.where(decided, w, 0.0), n) / 2**p
        w = np.where(decided, 0.0, w)
    out = spread[lv[-1]]
    for p in reversed(lv[:-1]):
        out = spread[p] + np.repeat(out, 2)
    return np.roll(np.repeat(out, 1 << p0), origin)


def maximal_report(f: GridFunction1D, n: int, ps=(2.0,), input_id: str = "input", scales=None) -> MaximalReport:
    out = shifted_maximal(f, n, scales)
    norms = {float(p): out.norm(p) / f.norm(p) for p in ps}
    return MaximalReport(input_id, int(n), out, norms)


def curly_Mn(f: GridFunction1D, n: int, scales=None) -> GridFunction1D:
    """``sum_{k=0}^{[log2 n]} M_{-2^k} f``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    total = sum(shifted_maximal(f, -(2**k), scales).samples for k in range(int(math.floor(math.log2(n))) + 1))
    return f.with_samples(total)


def weak_type_ratio(f: GridFunction1D, weight: GridFunction1D, n: int, alpha: float, scales=None) -> float:
    """``alpha int_{M_n f > alpha} |w|`` over ``int |f| curly_M_n w``."""
    lhs = alpha * np.sum(np.abs(weight.samples)[shifted_maximal(f, n, scales).samples > alpha]) * f.spacing
    rhs = np.sum(np.abs(f.samples) * curly_Mn(weight, n, scales).samples) * f.spacing
    if rhs == 0:
        raise DegenerateInputError("right-hand side vanishes")
    return float(lhs / rhs)


# -- shifted square function ----------------------------------------------

def shifted_square(f: GridFunction1D, n: int, K: int, profile: BumpProfile = BumpProfile()) -> GridFunction1D:
    """``(sum_{|k| <= K} |f * Psi_k^{n/2^k}|^2)^(1/2)``."""
    family = BumpFamily(profile, psi_type=True, shift=float(n))
    spec = np.fft.fft(f.samples)
    xi = f.frequencies()
    total = np.zeros(f.n)
    for k in range(-K, K + 1):
        total += np.abs(np.fft.ifft(spec * family.hat(k, xi))) ** 2
    return f.with_samples(np.sqrt(total))


# -- bi-parameter hybrids -------------------------------------------------

def _required_psi(kind: str) -> tuple[bool, bool]:
    return kind[0] == "S", kind[1] == "S"


def hybrid(f: GridFunction2D, kind: str, shifts: ShiftPair = ShiftPair(0, 0), K: int = 6,
           profile: BumpProfile = BumpProfile(), psi_types: tuple[bool, bool] | None = None,
           ks=None) -> GridFunction2D:
    """``MM``, ``SS``, ``MS`` (sup in ``k1`` of the l2 sum in ``k2``) or ``SM`` (l2 in ``k1`` of the sup in ``k2``)."""
    if kind not in HYBRID_KINDS:
        raise ConfigurationError(f"unknown hybrid kind {kind!r}; expected one of {HYBRID_KINDS}")
    need = _required_psi(kind)
    types = need if psi_types is None else tuple(psi_types)
    for axis, (req, have) in enumerate(zip(need, types)):
        if req and not have:
            raise ConfigurationError(f"{kind} needs a Psi-type family on axis {axis + 1}")
    return f.with_samples(_hybrid_values(f, kind, types, shifts, K, profile, ks))


def _hybrid_values(f, kind, types, shifts, K, profile, ks) -> np.ndarray:
    fam1 = BumpFamily(profile, psi_type=types[0], shift=float(shifts.n1))
    fam2 = BumpFamily(profile, psi_type=types[1], shift=float(shifts.n2))
    xi1, xi2 = f.frequencies()
    spec = np.fft.fft2(f.samples)
    ks = list(range(-K, K + 1)) if ks is None else list(ks)
    h2 = np.stack([fam2.hat(k, xi2) for k in ks])
    outer = np.zeros(f.shape)
    for k1 in ks:
        part = spec * fam1.hat(k1, xi1)[:, None]
        vals = np.abs(np.fft.ifft2(part[None, :, :] * h2[:, None, :], axes=(1, 2)))
        inner = np.sqrt(np.sum(vals**2, axis=0)) if kind[1] == "S" else np.max(vals, axis=0)
        if kind[0] == "S":
            outer += inner**2
        else:
            outer = np.maximum(outer, inner)
    if kind[0] == "S":
        outer = np.sqrt(outer)
    return outer


def hybrid_l2_envelope(f: GridFunction2D, shifts: ShiftPair = ShiftPair(0, 0), K: int = 6,
                       profile: BumpProfile = BumpProfile()) -> GridFunction2D:
    """``MS`` with the outer sup replaced by an l2 sum over the same families."""
    return f.with_samples(_hybrid_values(f, SS, (False, True), shifts, K, profile, None))


# -- Fefferman-Stein ------------------------------------------------------

def vector_norm(fs, p: float) -> float:
    F = np.sqrt(sum(np.abs(g.samples) ** 2 for g in fs))
    return float((fs[0].spacing * np.sum(F**p)) ** (1.0 / p))


def fefferman_stein_ratio(fs, n: int, p: float, scales=None) -> float:
    """``||(sum |M_n f_j|^2)^(1/2)||_p / ||(sum |f_j|^2)^(1/2)||_p``."""
    if not 1 < p < math.inf:
        raise ValueError("need 1 < p < infinity")
    if len(fs) < 1:
        raise ValueError("need at least one function")
    den = vector_norm(fs, p)
    if den == 0:
        raise DegenerateInputError("the input vector vanishes")
    return vector_norm([shifted_maximal(g, n, scales) for g in fs], p) / den


def log_bracket(n: int) -> float:
    return math.log(bracket(n))


# -- randomized norm estimation -------------------------------------------

def random_inputs(rng: np.random.Generator, template: GridFunction1D, kind: str, max_log_len: int | None = None) -> np.ndarray:
    n = template.n
    if kind == "noise":
        band = int(rng.integers(1, max(2, n // 8)))
        c = np.zeros(n, complex)
        m = np.arange(-band, band + 1)
        c[m % n] = rng.normal(size=m.size) + 1j * rng.normal(size=m.size)
        return np.fft.ifft(c).real * n
    if kind == "spikes":
        out = np.zeros(n)
        count = int(rng.integers(1, 9))
        out[rng.integers(0, n, size=count)] = rng.exponential(size=count)
        return out
    if kind == "comb":
        top = int(math.log2(n)) - 1 if max_log_len is None else min(max_log_len, int(math.log2(n)) - 1)
        width = 2 ** int(rng.integers(0, top + 1))
        teeth = int(rng.integers(1, 4))
        out = np.zeros(n)
        for _ in range(teeth):
            start = int(rng.integers(0, n // width)) * width
            out[start:start + width] = rng.exponential()
        return out
    raise ValueError(f"unknown input kind {kind!r}")


INPUT_KINDS = ("noise", "spikes", "comb")


def estimate_opnorm(operator: Callable, p: float, trials: int, seed: int, template: GridFunction1D,
                    refine: Callable | None = None, steps: int = 0, kinds=INPUT_KINDS,
                    max_log_len: int | None = None) -> float:
    """Largest ``||T f||_p / ||f||_p`` over seeded random inputs; a lower bound on the norm.

    ``refine(f_samples, Tf_samples)`` proposes a better input (a power step);
    it is applied ``steps`` times per trial and every iterate counts.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    children = np.random.SeedSequence(seed).spawn(trials)
    best = 0.0

    def ratio(vals):
        g = template.with_samples(vals)
        den = g.norm(p)
        if den == 0:
            return 0.0, None
        out = operator(g)
        out = out.samples if hasattr(out, "samples") else np.asarray(out)
        return float(template.with_samples(out).norm(p) / den), out

    for t, child in enumerate(children):
        rng = np.random.default_rng(child)
        vals = random_inputs(rng, template, kinds[t % len(kinds)], max_log_len)
        r, out = ratio(vals)
        best = max(best, r)
        for _ in range(steps if refine is not None else 0):
            if out is None:
                break
            vals = np.asarray(refine(vals, out))
            r, out = ratio(vals)
            best = max(best, r)
    return best


def linear_power_step(adjoint: Callable) -> Callable:
    """``f -> T* (T f)`` for a linear operator with known adjoint."""
    def step(vals, out):
        return np.asarray(adjoint(out))
    return step


def maximal_power_step(template: GridFunction1D, n: int, scales=None) -> Callable:
    def step(vals, out):
        return shifted_maximal_adjoint(template.with_samples(np.abs(vals)), out, n, scales)
    return step


# -- Calderon-Zygmund decomposition ---------------------------------------

def companion_offsets(n: int) -> tuple[int, ...]:
    """Left offsets ``j`` (in units of ``|I_n|``) whose blocks can contain a ``J`` with ``J_n`` inside ``I_n``.

    ``J`` of length ``|I_n|/2^m`` sits ``n/2^m`` steps left of a subinterval of
    ``I_n``, inside the blocks ``floor`` and ``ceil`` of that many steps.
    """
    n = abs(int(n))
    offs = {0, 1} if n else {0}
    m = 0
    while n >> m:
        offs.add(n >> m)
        offs.add(-(-n // 2**m))
        m += 1
    return tuple(sorted(offs))


@dataclass(frozen=True)
class CZDecomposition:
    alpha: float
    shift: int
    intervals: tuple[DyadicInterval, ...]
    blocks: tuple[tuple[int, int], ...]  # (level p, block b)
    omega: np.ndarray
    omega_tilde: np.ndarray
    coverage: np.ndarray
    f_prime: tuple[GridFunction1D, ...]
    f_dprime: tuple[GridFunction1D, ...]
    g: tuple[GridFunction1D, ...]
    G: np.ndarray
    checks: dict

    @property
    def all_hold(self) -> bool:
        return all(self.checks.values())


def _select_maximal(F: np.ndarray, alpha: float, origin: int) -> list[tuple[int, int]]:
    """Blocks with mean above ``alpha`` whose ancestors all have mean ``<= alpha``."""
    n_cells = F.size
    top = int(math.log2(n_cells))
    chosen = []
    candidates = [(top, 0)]
    means = {p: block_means(F, p, origin) for p in range(top + 1)}
    while candidates:
        p, b = candidates.pop()
        if means[p][b] > alpha:
            chosen.append((p, b))
        elif p > 0:
            candidates.extend([(p - 1, 2 * b), (p - 1, 2 * b + 1)])
    return sorted(chosen)


def cz_decompose(fs, n: int, alpha: float, rtol: float = 1e-12) -> CZDecomposition:
    """Select maximal dyadic intervals of ``F = (sum |f_j|^2)^(1/2)`` above ``alpha`` and split each ``f_j``."""
    fs = list(fs)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g0 = fs[0]
    origin = origin_index(g0)
    N, h = g0.n, g0.spacing
    F = np.sqrt(sum(np.abs(f.samples) ** 2 for f in fs))
    if alpha < F.mean():
        raise ValueError("alpha below the torus mean of F selects the whole torus; no maximal intervals exist")
    blocks = _select_maximal(F, alpha, origin)
    omega = np.zeros(N, bool)
    omega_tilde = np.zeros(N, bool)
    coverage = np.zeros(N, bool)
    offs = companion_offsets(n)
    step = 1 if n >= 0 else -1
    for p, b in blocks:
        nb = N >> p
        omega[_block_cells(N, p, origin, b)] = True
        for j in offs:
            c = (b - step * j) % nb
            coverage[_block_cells(N, p, origin, c)] = True
            for nbhd in (-1, 0, 1):
                omega_tilde[_block_cells(N, p, origin, (c + nbhd) % nb)] = True
    f_prime = tuple(f.with_samples(np.where(omega, 0, f.samples)) for f in fs)
    f_dprime = tuple(f.with_samples(np.where(omega, f.samples, 0)) for f in fs)
    gs = []
    for f in fs:
        vals = np.zeros(N)
        a = np.abs(f.samples)
        for p, b in blocks:
            cells = _block_cells(N, p, origin, b)
            vals[cells] = a[cells].mean()
        gs.append(f.with_samples(vals))
    G = np.sqrt(sum(g.samples**2 for g in gs))

    checks = {}
    avgs = [F[_block_cells(N, p, origin, b)].mean() for p, b in blocks]
    checks["disjoint"] = int(sum(2**p for p, _ in blocks)) == int(omega.sum())
    checks["average_window"] = all(alpha < a <= 2 * alpha for a in avgs)
    checks["measure_bound"] = omega.sum() * h <= np.sum(F) * h / alpha * (1 + rtol)
    checks["small_off_omega"] = bool(np.all(F[~omega] <= alpha))
    checks["G_bound"] = bool(np.all(G <= 2 * alpha * (1 + rtol)))
    checks["parents_below"] = all(
        p == int(math.log2(N)) or block_means(F, p + 1, origin)[b >> 1] <= alpha for p, b in blocks)
    MnF = shifted_maximal(g0.with_samples(F), n).samples
    checks["coverage"] = bool(np.all(coverage[MnF > alpha]))
    checks["enlargement"] = omega_tilde.sum() <= 3 * len(offs) * omega.sum()
    if n and (abs(n) & (abs(n) - 1)) == 0:
        checks["enlargement_log"] = omega_tilde.sum() <= (2 + int(math.log2(abs(n)))) * 3 * omega.sum()
    point = True
    for fd, g in zip(f_dprime, gs):
        lhs = shifted_maximal(fd, n).samples[~omega_tilde]
        rhs = shifted_maximal(g, n).samples[~omega_tilde]
        point &= bool(np.all(lhs <= rhs * (1 + rtol) + 1e-300))
    checks["pointwise_domination"] = point
    intervals = tuple(block_interval(g0, p, b) for p, b in blocks)
    return CZDecomposition(alpha, int(n), intervals, tuple(blocks), omega, omega_tilde, coverage,
                           f_prime, f_dprime, tuple(gs), G, {k: bool(v) for k, v in checks.items()})
