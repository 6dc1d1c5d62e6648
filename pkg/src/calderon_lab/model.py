"""Discrete bi-parameter model operators, the exceptional-set stopping time and paraproduct forms.

A rectangle system lives on a doubly periodic grid.  Every bump is a tensor
of one-dimensional adapted bumps, normalized in discrete ``L^2``, so inner
products reduce to ``phi1^T F phi2`` and the operator to ``Phi1^T diag(w) Phi2``.

Exceptional sets use a dilated dyadic strong maximal function: the sup of
averages over the centered dilates ``2^a I' x 2^b J'`` of dyadic rectangles,
taken over the dilates that contain the point.  With that choice a rectangle inside ``Omega~`` has its
``2^k``-dilate inside ``Omega~~ = {MM_k chi_Omega~ >= 2^-|k|}`` by construction.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import (AlignmentError, DyadicInterval, DyadicRectangle, GridFunction1D, GridFunction2D, ShiftPair,
                     interval_cells)
from .littlewood_paley import BumpFamily, BumpProfile, adapted_bump, bump_tail_split, dilate_cells
from .shifted import ConfigurationError, hybrid

ZERO_SHIFT = ShiftPair(0, 0)


class ResolutionError(ValueError):
    """A rectangle or its dilate is not resolved by the grid."""


def _psi_counts(types) -> tuple[int, int]:
    return sum(1 for t in types if t[0]), sum(1 for t in types if t[1])


def _check_two_psi(types):
    cx, cy = _psi_counts(types)
    if cx < 2 or cy < 2:
        raise ConfigurationError(f"need at least two Psi-type families per axis, got {cx} and {cy}")


def hybrid_kind(psi: tuple[bool, bool]) -> str:
    """Psi on an axis means a square function there, Phi a maximal function."""
    return ("S" if psi[0] else "M") + ("S" if psi[1] else "M")


@dataclass(frozen=True)
class RectangleSystem:
    rectangles: tuple[DyadicRectangle, ...]
    l: int
    shifts: tuple[ShiftPair, ...]
    psi_types: tuple[tuple[bool, bool], ...]
    shape: tuple[int, int] = (32, 32)
    periods: tuple[float, float] = (4.0, 4.0)
    profile: BumpProfile = field(default_factory=BumpProfile)

    def __post_init__(self):
        object.__setattr__(self, "rectangles", tuple(self.rectangles))
        object.__setattr__(self, "shifts", tuple(self.shifts))
        object.__setattr__(self, "psi_types", tuple(tuple(bool(v) for v in t) for t in self.psi_types))
        if self.l < 1:
            raise ValueError("arity l must be at least 1")
        if len(self.shifts) != self.l:
            raise ValueError("need one shift pair per input function")
        if len(self.psi_types) != self.l + 1:
            raise ValueError("need bump types for all l + 1 positions")
        _check_two_psi(self.psi_types)
        t = self.template
        for R in self.rectangles:
            interval_cells(R.x_interval, t.shape[0], t.periods[0], t.x0[0])
            interval_cells(R.y_interval, t.shape[1], t.periods[1], t.x0[1])

    @property
    def template(self) -> GridFunction2D:
        return GridFunction2D(np.zeros(self.shape), self.periods)

    def axis_grid(self, axis: int) -> GridFunction1D:
        return GridFunction1D(np.zeros(self.shape[axis]), self.periods[axis])

    @property
    def all_shifts(self) -> tuple[ShiftPair, ...]:
        return self.shifts + (ZERO_SHIFT,)

    @functools.cached_property
    def _factor_cache(self) -> dict:
        return {}

    def factor(self, j: int, axis: int, interval: DyadicInterval) -> np.ndarray:
        """Discretely ``L^2``-normalized bump for position ``j`` (0-based) on one axis."""
        key = (j, axis, interval)
        cache = self._factor_cache
        if key not in cache:
            shift = self.all_shifts[j]
            n = shift.n1 if axis == 0 else shift.n2
            fam = BumpFamily(self.profile, psi_type=self.psi_types[j][axis], shift=float(n))
            g = adapted_bump(interval, fam, 2.0, self.axis_grid(axis))
            v = np.asarray(g.samples, dtype=float)
            cache[key] = v / np.sqrt(np.sum(v**2) * g.spacing)
        return cache[key]

    def factor_stack(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        p1 = np.array([self.factor(j, 0, R.x_interval) for R in self.rectangles]).reshape(-1, self.shape[0])
        p2 = np.array([self.factor(j, 1, R.y_interval) for R in self.rectangles]).reshape(-1, self.shape[1])
        return p1, p2

    def bump(self, j: int, R: DyadicRectangle) -> GridFunction2D:
        return GridFunction2D(np.outer(self.factor(j, 0, R.x_interval), self.factor(j, 1, R.y_interval)), self.periods)

    def areas(self) -> np.ndarray:
        return np.array([float(R.area) for R in self.rectangles])

    def cells(self, R: DyadicRectangle) -> tuple[np.ndarray, np.ndarray]:
        t = self.template
        return (interval_cells(R.x_interval, t.shape[0], t.periods[0], t.x0[0]),
                interval_cells(R.y_interval, t.shape[1], t.periods[1], t.x0[1]))

    def mask(self, R: DyadicRectangle) -> np.ndarray:
        ix, iy = self.cells(R)
        m = np.zeros(self.shape, bool)
        m[np.ix_(ix, iy)] = True
        return m


def pairings(system: RectangleSystem, j: int, f: GridFunction2D) -> np.ndarray:
    """``<f, Phi^j_{R_{n_j}}>`` for every rectangle."""
    p1, p2 = system.factor_stack(j)
    return f.cell_area * np.einsum("ra,ab,rb->r", p1, f.samples, p2)


def _weights(system, fs, absolute: bool) -> np.ndarray:
    if len(fs) != system.l:
        raise ValueError(f"need {system.l} input functions")
    w = system.areas() ** (-(system.l - 1) / 2.0)
    for j, f in enumerate(fs):
        c = pairings(system, j, f)
        w = w * (np.abs(c) if absolute else c)
    return w


def model_apply(system: RectangleSystem, fs) -> GridFunction2D:
    """``sum_R |R|^(-(l-1)/2) prod_j <f_j, Phi^j_{R_{n_j}}> Phi^{l+1}_R``."""
    w = _weights(system, fs, absolute=False)
    p1, p2 = system.factor_stack(system.l)
    return GridFunction2D(np.einsum("r,ra,rb->ab", w, p1, p2), system.periods)


def model_form(system: RectangleSystem, fs, f_last: GridFunction2D, absolute: bool = True) -> float | complex:
    """``sum_R |R|^(-(l-1)/2) prod_j |<f_j, Phi^j>| |<f_{l+1}, Phi^{l+1}_R>|`` (signed when ``absolute`` is off)."""
    w = _weights(system, fs, absolute)
    c = pairings(system, system.l, f_last)
    c = np.abs(c) if absolute else np.conj(c)
    total = np.sum(w * c)
    return float(total.real) if absolute else complex(total)


def shift_weight(system: RectangleSystem) -> float:
    """``prod_j log^2<n_j^1> log^2<n_j^2>`` over the inputs."""
    return float(np.prod([s.log2_weight() for s in system.shifts]))


# -- paraproduct forms ----------------------------------------------------

def _check_families(families):
    types = [(fx.psi_type, fy.psi_type) for fx, fy in families]
    _check_two_psi(types)
    return types


def paraproduct_form(families, fs, ks) -> complex:
    """``int sum_{k1, k2} prod_j f_j * (Phi^j_{k1} (x) Phi^j_{k2})`` over the scale pairs in ``ks x ks``."""
    _check_families(families)
    if len(fs) != len(families):
        raise ValueError("need one function per family")
    ks1, ks2 = (ks, ks) if not isinstance(ks, tuple) else ks
    g = fs[0]
    xi1, xi2 = g.frequencies()
    specs = [np.fft.fft2(f.samples) for f in fs]
    total = 0.0
    for k1 in ks1:
        for k2 in ks2:
            prod = np.ones(g.shape, dtype=complex)
            for (fx, fy), spec in zip(families, specs):
                prod *= np.fft.ifft2(spec * np.outer(fx.hat(k1, xi1), fy.hat(k2, xi2)))
            total += np.sum(prod) * g.cell_area
    return complex(total)


def paraproduct_envelopes(families, fs, ks) -> list[GridFunction2D]:
    """The hybrid operator attached to each position: ``S`` on Psi axes, ``M`` on Phi axes."""
    out = []
    ks1 = ks if not isinstance(ks, tuple) else ks[0]
    for (fx, fy), f in zip(families, fs):
        kind = hybrid_kind((fx.psi_type, fy.psi_type))
        out.append(hybrid(f, kind, ShiftPair(int(fx.shift), int(fy.shift)), ks=ks1, profile=fx.profile,
                          psi_types=(fx.psi_type, fy.psi_type)))
    return out


def paraproduct_bound(families, fs, ks) -> float:
    """``int prod_j H_j(f_j)``; dominates the form when each axis has two Psi positions."""
    _check_families(families)
    env = paraproduct_envelopes(families, fs, ks)
    prod = np.prod([e.samples for e in env], axis=0)
    return float(np.sum(prod) * fs[0].cell_area)


def holder_bound(families, fs, ks, ps=None) -> float:
    """``prod_j ||H_j(f_j)||_{p_j}`` with ``sum 1/p_j = 1`` (default ``p_j = l + 1``)."""
    env = paraproduct_envelopes(families, fs, ks)
    ps = [float(len(fs))] * len(fs) if ps is None else ps
    if abs(sum(1.0 / p for p in ps) - 1.0) > 1e-12:
        raise ValueError("exponents must satisfy sum 1/p_j = 1")
    return float(np.prod([e.norm(p) for e, p in zip(env, ps)]))


# -- dilated dyadic strong maximal function -------------------------------

def _windows(n_cells: int, p: int, a: int) -> tuple[np.ndarray, int]:
    """Membership ``M[i, b]`` of cells in the ``2^a``-dilate of level-``p`` blocks (origin-rolled)."""
    length = 1 << (p + a)
    nb = n_cells >> p
    if length >= n_cells:
        return np.ones((n_cells, nb), bool), n_cells
    if a and p == 0:
        raise ResolutionError("dilates of single cells are not grid aligned")
    start = (np.arange(nb) << p) + ((1 << p) - length) // 2
    i = np.arange(n_cells)[:, None]
    return ((i - start[None, :]) % n_cells) < length, length


def dilated_strong_maximal(chi: np.ndarray, origin: tuple[int, int], dil: tuple[int, int] = (0, 0)) -> np.ndarray:
    """``sup`` of the average of ``chi >= 0`` over the centered ``2^dil`` dilates of dyadic rectangles that hold each cell."""
    n1, n2 = chi.shape
    rolled = np.roll(chi.astype(float), (-origin[0], -origin[1]), axis=(0, 1))
    best = np.zeros_like(rolled)
    lv1 = range(1 if dil[0] else 0, int(math.log2(n1)) + 1)
    lv2 = range(1 if dil[1] else 0, int(math.log2(n2)) + 1)
    w1 = {p: _windows(n1, p, dil[0]) for p in lv1}
    w2 = {p: _windows(n2, p, dil[1]) for p in lv2}
    for p1, (m1, len1) in w1.items():
        f1 = m1.astype(float)
        for p2, (m2, len2) in w2.items():
            f2 = m2.astype(float)
            avg = f1.T @ rolled @ f2 / (len1 * len2)
            inner = np.max(m2[None, :, :] * avg[:, None, :], axis=2)
            best = np.maximum(best, np.max(m1[:, :, None] * inner[None, :, :], axis=1))
    return np.roll(best, origin, axis=(0, 1))


def grid_origin(g: GridFunction2D) -> tuple[int, int]:
    h1, h2 = g.spacings
    return int(round(-g.x0[0] / h1)) % g.shape[0], int(round(-g.x0[1] / h2)) % g.shape[1]


# -- stopping time --------------------------------------------------------

def density_threshold(l: int) -> float:
    """Per-function density for level selection; ``l + 1`` of them leave more than half of each ``R``."""
    return 1.0 / (2 * l + 3)


@dataclass
class StoppingSetup:
    """Hybrid envelopes and thresholds shared by every run on one input set."""

    system: RectangleSystem
    V: list  # envelopes of f_1..f_l
    tau: list  # log^2 weights
    E: np.ndarray
    kinds: list
    ks: range

    @property
    def delta(self) -> float:
        return density_threshold(self.system.l)


def _levels_from(V, tau, C, m):
    thr = [C * t * 2.0 ** (5 * m) for t in tau]
    return np.logical_or.reduce([v > t for v, t in zip(V, thr)])


def exceptional_sets(setup: StoppingSetup, C: float, k: tuple[int, int], max_k: int = 12) -> dict:
    """``Omega_{-5|k|}``, ``Omega~``, ``Omega~~`` for ``k`` and ``Omega`` (union over all ``k``)."""
    t = setup.system.template
    origin = grid_origin(t)
    delta = setup.delta
    cache = {}

    def level(m):
        if m not in cache:
            om = _levels_from(setup.V, setup.tau, C, m)
            ot = dilated_strong_maximal(om, origin) > delta if om.any() else np.zeros_like(om)
            cache[m] = (om, ot)
        return cache[m]

    def double_tilde(kk):
        _, ot = level(kk[0] + kk[1])
        if not ot.any():
            return np.zeros_like(ot)
        return dilated_strong_maximal(ot, origin, kk) >= 2.0 ** -(kk[0] + kk[1])

    omega = np.zeros(t.shape, bool)
    for m in range(max_k + 1):
        om, _ = level(m)
        if not om.any():
            break
        for k1 in range(m + 1):
            omega |= double_tilde((k1, m - k1))
    else:
        raise ResolutionError("exceptional sets did not empty out; raise max_k or the constant")
    om, ot = level(k[0] + k[1])
    return {"omega_k": om, "omega_tilde": ot, "omega_tt": double_tilde(k), "omega": omega}


def calibrate_constant(setup: StoppingSetup, E_area: float = 1.0, octaves=(-40, 40), per_octave: int = 16) -> float:
    """Smallest ``C = 2^(c / per_octave)`` with ``|Omega| < |E| / 2`` (the exceptional set shrinks as ``C`` grows)."""
    area = setup.system.template.cell_area

    def ok(c):
        return exceptional_sets(setup, 2.0 ** (c / per_octave), (0, 0))["omega"].sum() * area < E_area / 2

    lo, hi = octaves[0] * per_octave, octaves[1] * per_octave
    if not ok(hi):
        raise ResolutionError("no constant in range makes the exceptional set small")
    if ok(lo):
        return 2.0 ** (lo / per_octave)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return 2.0 ** (hi / per_octave)


def prepare(system: RectangleSystem, fs, E: np.ndarray, ks: range, ps=None, norm_tol: float = 1e-6) -> StoppingSetup:
    if len(fs) != system.l:
        raise ValueError(f"need {system.l} functions")
    ps = [float(system.l + 1)] * system.l if ps is None else list(ps)
    for f, p in zip(fs, ps):
        if abs(f.norm(p) - 1.0) > norm_tol:
            raise ValueError(f"inputs must be normalized in L^{p}; got {f.norm(p)}")
    area = system.template.cell_area * np.sum(E)
    if abs(area - 1.0) > system.template.cell_area / 2:
        raise ValueError(f"|E| must be 1, got {area}")
    kinds = [hybrid_kind(t) for t in system.psi_types]
    V = [hybrid(f, kinds[j], system.shifts[j], ks=ks, profile=system.profile, psi_types=system.psi_types[j]).samples
         for j, f in enumerate(fs)]
    tau = [s.log2_weight() for s in system.shifts]
    return StoppingSetup(system, V, tau, np.asarray(E, bool), kinds, ks)


def _record(name, lhs, rhs, ok):
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs), "pass": bool(ok)}


def _select_level(vals: np.ndarray, T: float, delta: float, s0: int) -> int:
    """First ``s >= s0`` with ``#{v > T 2^-s} > delta * #R``."""
    need = int(math.floor(delta * vals.size)) + 1
    q = np.sort(vals)[::-1][need - 1]
    if not q > 0:
        raise ResolutionError("envelope vanishes on a rectangle; no selection level exists")

    def passes(s):
        return np.count_nonzero(vals > math.ldexp(T, -s)) >= need

    s = max(s0, int(math.floor(math.log2(T / q))) + 1)
    while s - 1 >= s0 and passes(s - 1):
        s -= 1
    while not passes(s):
        s += 1
    return s


@dataclass
class DecompositionCertificate:
    k: tuple[int, int]
    C: float
    delta: float
    N: int
    sets: dict
    level_sets: dict
    classes: dict
    parts: list
    levels: list
    checks: list
    class_bounds: list

    @property
    def verified(self) -> bool:
        return all(c["pass"] for c in self.checks) and all(c["pass"] for c in self.class_bounds)

    def failed(self) -> list:
        return [c for c in self.checks + self.class_bounds if not c["pass"]]

    def to_json(self) -> str:
        return json.dumps({
            "k": list(self.k), "C": self.C, "delta": self.delta, "N": self.N,
            "sets": self.sets, "level_sets": self.level_sets,
            "classes": {",".join(map(str, key)): v for key, v in self.classes.items()},
            "parts": self.parts, "levels": self.levels,
            "checks": self.checks, "class_bounds": self.class_bounds,
        }, sort_keys=True)


def _cells(mask: np.ndarray) -> list[int]:
    return [int(i) for i in np.flatnonzero(mask)]


def tail_piece(system: RectangleSystem, R: DyadicRectangle, k: tuple[int, int], kappa: float = 10.0) -> np.ndarray:
    """``Phi^{l+1,k}_R``: tensor of the ``k``-th tail pieces, supported in ``2^k R``."""
    out = []
    for axis, (interval, kk) in enumerate(zip((R.x_interval, R.y_interval), k)):
        grid = system.axis_grid(axis)
        phi = grid.with_samples(system.factor(system.l, axis, interval))
        split = bump_tail_split(phi, interval, kappa=kappa, K=max(kk, 1) + 1)
        out.append(np.asarray(split.pieces[kk].samples) * 2.0 ** (-kappa * kk))
    return np.outer(out[0], out[1])


def stopping_time_decompose(system: RectangleSystem, fs, E: np.ndarray, k: tuple[int, int], ks: range = range(-3, 4),
                            C: float | None = None, ps=None, class_constant: float = math.inf,
                            alphas: tuple[float, float] = (1.01, 4.0), setup: StoppingSetup | None = None
                            ) -> DecompositionCertificate:
    """Run the exceptional-set construction and the level/class selection loops; record every checked inequality."""
    setup = prepare(system, fs, E, ks, ps) if setup is None else setup
    l = system.l
    ps = [float(l + 1)] * l if ps is None else list(ps)
    t = system.template
    area = t.cell_area
    delta = setup.delta
    k = (int(k[0]), int(k[1]))
    if any(kk > 0 for kk in k):
        for R in system.rectangles:
            for axis, (interval, kk) in enumerate(zip((R.x_interval, R.y_interval), k)):
                if kk and float(interval.length) < 2 * t.spacings[axis]:
                    raise ResolutionError("a rectangle side is too short for its dilate to be grid aligned")
    C = calibrate_constant(setup) if C is None else float(C)
    S = exceptional_sets(setup, C, k)
    E_prime = setup.E & ~S["omega"]
    chi = t.with_samples(E_prime.astype(float))
    last_kind = setup.kinds[l]
    V_last = hybrid(chi, last_kind, ZERO_SHIFT, ks=ks, profile=system.profile, psi_types=system.psi_types[l]).samples
    V = setup.V + [V_last]
    T = [C * tau for tau in setup.tau]
    s0 = [-5 * (k[0] + k[1]) + 1] * l
    masks = [system.mask(R) for R in system.rectangles]
    # the last loop starts where every rectangle is sparse in the top level set
    N = 1
    while any(np.count_nonzero(V_last[m] > C * 2.0**N) > delta * m.sum() for m in masks):
        N += 1
    T.append(C)
    s0.append(-N + 1)

    levels, parts = [], []
    for R, m in zip(system.rectangles, masks):
        part = "II" if not np.any(m & ~S["omega_tilde"]) else "I"
        parts.append(part)
        levels.append([_select_level(V[j][m], T[j], delta, s0[j]) for j in range(l + 1)])

    def level_set(j, s):
        """``Omega^j_s = {V_j > T_j 2^-s}``; ``s0 - 1`` is the starting level."""
        return V[j] > math.ldexp(T[j], -s)

    level_sets = {}
    for j in range(l + 1):
        top = max([lv[j] for lv in levels], default=s0[j])
        for s in range(s0[j] - 1, top + 1):
            level_sets[f"{j + 1}:{s}"] = _cells(level_set(j, s))

    classes: dict = {}
    for idx, lv in enumerate(levels):
        classes.setdefault(tuple(lv), []).append(idx)

    checks = []
    assigned = sorted(i for members in classes.values() for i in members)
    checks.append(_record("class_partition", len(assigned), len(system.rectangles),
                          assigned == list(range(len(system.rectangles)))))
    replay = True
    for idx, (m, lv) in enumerate(zip(masks, levels)):
        for j in range(l + 1):
            need = delta * m.sum()
            for s in range(s0[j], lv[j]):
                replay &= np.count_nonzero(level_set(j, s) & m) <= need
            replay &= np.count_nonzero(level_set(j, lv[j]) & m) > need
    checks.append(_record("selection_replay", float(replay), 1.0, replay))
    dense_ok, dense_min = True, math.inf
    for idx, (m, lv, part) in enumerate(zip(masks, levels, parts)):
        if part != "I":
            continue
        good = m.copy()
        for j in range(l + 1):
            good &= ~level_set(j, lv[j] - 1)
        ratio = good.sum() / m.sum()
        dense_min = min(dense_min, ratio)
        dense_ok &= ratio > 0.5
    checks.append(_record("majority_density", dense_min if math.isfinite(dense_min) else 1.0, 0.5, dense_ok))
    part2_max = 0.0
    cover_ok = True
    for R, part in zip(system.rectangles, parts):
        if part != "II":
            continue
        piece = tail_piece(system, R, k)
        part2_max = max(part2_max, abs(float(np.sum(E_prime * piece) * area)))
        cover_ok &= not np.any((piece != 0) & ~S["omega_tt"])
    checks.append(_record("part_two_vanishes", part2_max, 0.0, part2_max == 0.0))
    checks.append(_record("part_two_support", float(cover_ok), 1.0, cover_ok))
    checks.append(_record("retained_set", E_prime.sum() * area, setup.E.sum() * area / 2,
                          E_prime.sum() >= setup.E.sum() / 2))
    class_bounds = []
    for key, members in sorted(classes.items()):
        if all(parts[i] == "II" for i in members):
            continue
        union = np.logical_or.reduce([masks[i] for i in members if parts[i] == "I"])
        alpha = alphas[0] if key[l] > 0 else alphas[1]
        bounds = [(2.0 ** key[j] / C) ** ps[j] for j in range(l)] + [(2.0 ** key[l] / C) ** alpha]
        lhs = union.sum() * area
        rhs = class_constant * min(bounds)
        class_bounds.append({"name": "class_measure", "class": list(key), "lhs": float(lhs),
                             "rhs": float(rhs), "min_bound": float(min(bounds)), "pass": bool(lhs <= rhs)})
    sets = {name: _cells(v) for name, v in S.items()}
    sets["E"] = _cells(setup.E)
    sets["E_prime"] = _cells(E_prime)
    return DecompositionCertificate(k, C, delta, N, sets, level_sets, classes, parts, levels, checks, class_bounds)


# -- seeded random instances ----------------------------------------------

def random_system(rng: np.random.Generator, l: int, n_rect: int, shape=(32, 32), periods=(4.0, 4.0),
                  max_shift: int = 64, min_cells: int = 2, max_scale_cells: int | None = None) -> RectangleSystem:
    """Random distinct rectangles (sides of at least ``min_cells`` cells), shifts and admissible bump types."""
    spans = []
    for n_cells, period in zip(shape, periods):
        h = period / n_cells
        top = n_cells // 2 if max_scale_cells is None else max_scale_cells
        spans.append([c for c in (1 << p for p in range(int(math.log2(n_cells)) + 1)) if min_cells <= c <= top])
    rects = set()
    while len(rects) < n_rect:
        sides = []
        for axis in range(2):
            c = int(rng.choice(spans[axis]))
            length = c * periods[axis] / shape[axis]
            scale = -int(round(math.log2(length)))
            count = int(round(periods[axis] / length))
            pos = int(rng.integers(0, count)) - count // 2
            sides.append(DyadicInterval(scale, pos))
        rects.add(DyadicRectangle(*sides))
    shifts = tuple(ShiftPair(int(rng.integers(0, max_shift + 1)), int(rng.integers(0, max_shift + 1)))
                   for _ in range(l))
    types = [[bool(rng.random() < 0.5), bool(rng.random() < 0.5)] for _ in range(l + 1)]
    for axis in range(2):
        for j in rng.choice(l + 1, size=2, replace=False):
            types[j][axis] = True
    order = sorted(rects, key=lambda R: (R.x_interval.scale, R.x_interval.position, R.y_interval.scale,
                                         R.y_interval.position))
    return RectangleSystem(tuple(order), l, shifts, tuple(map(tuple, types)), shape, periods)


def random_inputs(rng: np.random.Generator, system: RectangleSystem, ps=None) -> list[GridFunction2D]:
    """Nonnegative noise normalized in ``L^{p_j}``."""
    ps = [float(system.l + 1)] * system.l if ps is None else ps
    out = []
    for p in ps:
        g = system.template.with_samples(rng.random(system.shape) ** 3)
        out.append(g.with_samples(g.samples / g.norm(p)))
    return out


def random_set(rng: np.random.Generator, system: RectangleSystem, area: float = 1.0) -> np.ndarray:
    """A random union of cells of total measure ``area``."""
    t = system.template
    count = int(round(area / t.cell_area))
    mask = np.zeros(t.shape[0] * t.shape[1], bool)
    mask[rng.choice(mask.size, size=count, replace=False)] = True
    return mask.reshape(t.shape)


def rectangles_inside(system: RectangleSystem, mask: np.ndarray, min_cells: tuple[int, int] = (1, 1)) -> list:
    """Every dyadic rectangle of the grid whose cells all lie in ``mask``."""
    t = system.template
    origin = grid_origin(t)
    rolled = np.roll(mask, (-origin[0], -origin[1]), axis=(0, 1))
    n1, n2 = t.shape
    out = []
    for p1 in range(int(math.log2(min_cells[0])), int(math.log2(n1))):
        for p2 in range(int(math.log2(min_cells[1])), int(math.log2(n2))):
            nb1, nb2 = n1 >> p1, n2 >> p2
            full = rolled.reshape(nb1, 1 << p1, nb2, 1 << p2).all(axis=(1, 3))
            for b1, b2 in zip(*np.nonzero(full)):
                sides = []
                for b, nb, p, h in ((b1, nb1, p1, t.spacings[0]), (b2, nb2, p2, t.spacings[1])):
                    scale = -int(round(math.log2((1 << p) * h)))
                    sides.append(DyadicInterval(scale, int(b) if b < nb // 2 else int(b) - nb))
                out.append(DyadicRectangle(*sides))
    return out
