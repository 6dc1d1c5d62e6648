"""Calderon commutators by time-side quadrature and by the frequency-side multiplier.

Potentials are ``A = c x + A_per`` (one parameter) or ``A = c x1 x2 + A_per``
(two parameters) with ``A_per`` periodic, so ``a = A'`` (or ``d1 d2 A``) is
periodic with mean ``c``.

Time side.  With integer scales ``a`` the difference ``A_per(x + a t) - A_per(x)``
is ``L``-periodic in ``t``, so the integral over the line folds onto one period
against the periodized kernels ``K_s(t) = sum_m (t + m L)^(-s)``.  Expanding
``(c a + P/t)^d`` binomially, term ``j`` integrates ``f(x + t) P(t)^j / t^j``
against ``W_j(t) = t^j K_(j+1)(t)``, an odd weight equal to ``1/t`` plus a smooth
correction.  Pairing ``t`` with ``-t`` removes the singularity, and Gauss-Legendre
panels on dyadic shells do the rest.  Off-grid values come from local Lagrange
interpolation of the samples (or the trigonometric interpolant).

Frequency side.  ``C f = kappa^n a^d sum m(xi, a xi_1, ...) fhat prod ahat e(x . sum)``
with ``kappa = i pi`` per axis for ``fhat(xi) = int f e^(-2 pi i x xi)``.  The
routine here returns the sum without ``kappa^n``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import binom, zeta

from .dyadic import GridFunction1D, GridFunction2D, shift_samples
from .symbols import m1d_array

KAPPA = 1j * np.pi
DEFAULT_BUDGET = 2e9


class BudgetExceeded(RuntimeError):
    """The predicted operation count is above the ceiling."""

    def __init__(self, estimate: float, ceiling: float):
        super().__init__(f"predicted {estimate:.3g} operations exceeds the ceiling {ceiling:.3g}")
        self.estimate = estimate
        self.ceiling = ceiling


class DivergenceRiskError(ValueError):
    """The potential is too large for the coefficient series to converge."""


class GridMismatchError(ValueError):
    pass


# -- potentials -----------------------------------------------------------

@dataclass(frozen=True)
class Potential1D:
    """``A(x) = linear * x + periodic(x)``."""

    periodic: GridFunction1D
    linear: float = 0.0

    def __call__(self, x) -> np.ndarray:
        g = self.periodic
        c = g.coefficients()
        vals = np.exp(2j * np.pi * np.multiply.outer(np.asarray(x, dtype=float), g.frequencies())) @ c
        vals = vals.real if np.isrealobj(g.samples) else vals
        return self.linear * np.asarray(x, dtype=float) + vals

    def derivative(self) -> GridFunction1D:
        g = self.periodic
        d = np.fft.ifft(np.fft.fft(g.samples) * 2j * np.pi * g.frequencies())
        d = d.real if np.isrealobj(g.samples) else d
        return g.with_samples(self.linear + d)

    def scaled(self, lam: float) -> "Potential1D":
        return Potential1D(self.periodic.with_samples(lam * self.periodic.samples), lam * self.linear)


@dataclass(frozen=True)
class Potential2D:
    """``A(x1, x2) = linear * x1 * x2 + periodic(x1, x2)``."""

    periodic: GridFunction2D
    linear: float = 0.0

    @classmethod
    def from_tensor(cls, a1: Potential1D, a2: Potential1D) -> "Potential2D":
        """``A1(x1) A2(x2)``; only representable when at most one factor has a linear part paired with none."""
        if a1.linear or a2.linear:
            if not (a1.linear and a2.linear and not np.any(a1.periodic.samples) and not np.any(a2.periodic.samples)):
                raise ValueError("tensor potentials must be fully periodic or purely bilinear")
            return cls(GridFunction2D.from_tensor(a1.periodic, a2.periodic), a1.linear * a2.linear)
        return cls(GridFunction2D.from_tensor(a1.periodic, a2.periodic), 0.0)

    def __call__(self, x1, x2) -> np.ndarray:
        g = self.periodic
        f1, f2 = g.frequencies()
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        e1 = np.exp(2j * np.pi * np.multiply.outer(x1, f1))
        e2 = np.exp(2j * np.pi * np.multiply.outer(x2, f2))
        vals = np.einsum("...a,ab,...b->...", e1, g.coefficients(), e2)
        vals = vals.real if np.isrealobj(g.samples) else vals
        return self.linear * x1 * x2 + vals

    def mixed_derivative(self) -> GridFunction2D:
        g = self.periodic
        f1, f2 = g.frequencies()
        d = np.fft.ifft2(np.fft.fft2(g.samples) * np.outer(2j * np.pi * f1, 2j * np.pi * f2))
        d = d.real if np.isrealobj(g.samples) else d
        return g.with_samples(self.linear + d)

    def scaled(self, lam: float) -> "Potential2D":
        return Potential2D(self.periodic.with_samples(lam * self.periodic.samples), lam * self.linear)


# -- specs and quadrature -------------------------------------------------

@dataclass(frozen=True)
class CommutatorSpec:
    n: int = 1
    d: int = 1
    scales: tuple[float, ...] | None = None
    coefficients: tuple[complex, ...] = ()
    law: Callable[[int], complex] | None = None
    radius: float = math.inf

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("only n = 1 and n = 2 are supported")
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        scales = (1.0,) * self.n if self.scales is None else tuple(float(s) for s in self.scales)
        if len(scales) != self.n:
            raise ValueError("need one scale per parameter")
        if any(s == 0 for s in scales):
            raise ValueError("scales must be nonzero")
        object.__setattr__(self, "scales", scales)

    def coefficient(self, d: int) -> complex:
        if self.law is not None:
            return complex(self.law(d))
        return complex(self.coefficients[d]) if d < len(self.coefficients) else 0.0

    def with_degree(self, d: int) -> "CommutatorSpec":
        return CommutatorSpec(self.n, d, self.scales, self.coefficients, self.law, self.radius)


def cauchy_spec(n: int = 1, scales=None) -> CommutatorSpec:
    """Coefficients of ``F(z) = 1/(1 + i z) = sum (-i)^d z^d``, radius 1."""
    return CommutatorSpec(n, 0, scales, law=lambda d: (-1j) ** d, radius=1.0)


@dataclass(frozen=True)
class PVQuadrature:
    """Symmetric principal-value nodes on ``[0, outer]``.

    The first shell is ``[0, eps]``; after it come dyadic shells ``[eps 2^m, eps 2^(m+1)]``
    cut into panels no wider than ``panel_cells`` grid spacings, each carrying
    ``nodes_per_shell`` Gauss-Legendre nodes.  ``None`` defaults are the grid
    spacing and half the period.  ``interpolation`` is the number of Lagrange
    points for off-grid samples, or ``"spectral"``.
    """

    eps: float | None = None
    outer: float | None = None
    nodes_per_shell: int = 8
    panel_cells: float = 4.0
    interpolation: int | str = 6
    symmetric: bool = True

    def __post_init__(self):
        if not self.symmetric:
            raise ValueError("only symmetric node sets are supported")
        if self.eps is not None and self.outer is not None and not 0 < self.eps < self.outer:
            raise ValueError("need 0 < eps < outer")
        if self.nodes_per_shell < 1 or self.panel_cells <= 0:
            raise ValueError("invalid node counts")
        if self.interpolation != "spectral" and (int(self.interpolation) < 2 or int(self.interpolation) % 2):
            raise ValueError("interpolation order must be an even integer >= 2 or 'spectral'")

    def nodes(self, spacing: float, period: float) -> tuple[np.ndarray, np.ndarray]:
        eps = spacing if self.eps is None else self.eps
        outer = period / 2 if self.outer is None else self.outer
        if outer > period / 2 + 1e-12:
            raise ValueError("outer cutoff beyond half a period double counts the periodized kernel")
        if not 0 < eps < outer:
            raise ValueError("need 0 < eps < outer")
        edges = [0.0, eps]
        while edges[-1] < outer:
            edges.append(min(2 * edges[-1], outer))
        gx, gw = np.polynomial.legendre.leggauss(self.nodes_per_shell)
        ts, ws = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            panels = max(1, int(math.ceil((hi - lo) / (self.panel_cells * spacing) - 1e-12)))
            cuts = np.linspace(lo, hi, panels + 1)
            for a, b in zip(cuts[:-1], cuts[1:]):
                ts.append(0.5 * (b - a) * gx + 0.5 * (a + b))
                ws.append(0.5 * (b - a) * gw)
        return np.concatenate(ts), np.concatenate(ws)


def periodized_weight(j: int, t: np.ndarray, period: float) -> np.ndarray:
    """``W_j(t) = t^j sum_m (t + m L)^(-j-1)`` for ``0 < |t| <= L/2`` (symmetric sum when ``j = 0``)."""
    t = np.asarray(t, dtype=float)
    if j == 0:
        return (np.pi / period) / np.tan(np.pi * t / period)
    s = j + 1
    u = t / period
    corr = (zeta(s, 1 + u) + (-1) ** s * zeta(s, 1 - u)) / period**s
    return 1.0 / t + t**j * corr


# -- interpolation --------------------------------------------------------

def _lagrange_weights(u: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    offs = np.arange(-order // 2 + 1, order // 2 + 1)
    w = np.ones(order)
    for i, k in enumerate(offs):
        for m in offs:
            if m != k:
                w[i] *= (u - m) / (k - m)
    return offs, w


def shifted_along(samples: np.ndarray, shifts, spacing: float, axis: int, method: int | str) -> np.ndarray:
    """Values at ``x + t`` along ``axis`` for every ``t`` in ``shifts``; the new leading axis indexes ``shifts``."""
    samples = np.asarray(samples)
    shifts = np.asarray(shifts, dtype=float)
    moved = np.moveaxis(samples, axis, -1)
    if method == "spectral":
        out = shift_samples(moved, shifts, spacing)
        if np.isrealobj(samples):
            out = out.real
    else:
        order = int(method)
        out = np.empty((shifts.size,) + moved.shape, dtype=np.result_type(samples, float))
        for i, t in enumerate(shifts):
            sigma = t / spacing
            base = int(np.floor(sigma))
            offs, w = _lagrange_weights(sigma - base, order)
            acc = np.zeros(moved.shape, dtype=out.dtype)
            for k, wk in zip(offs, w):
                acc += wk * np.roll(moved, -(base + k), axis=-1)
            out[i] = acc
    return np.moveaxis(out, -1, axis + 1 if axis >= 0 else axis)


def _check_scales_integer(spec: CommutatorSpec):
    if any(abs(s - round(s)) > 1e-12 for s in spec.scales):
        raise ValueError("the time-side route needs integer scales so differences stay periodic in t")


# -- finite differences ---------------------------------------------------

def finite_diff_avg(A: Callable, x, t, scales=(1.0, 1.0)) -> complex:
    """``(A(x + a t) - A(x1 + a1 t1, x2) - A(x1, x2 + a2 t2) + A(x)) / (t1 t2)``."""
    (x1, x2), (t1, t2), (a1, a2) = x, t, scales
    if t1 == 0 or t2 == 0:
        raise ZeroDivisionError("finite_diff_avg needs nonzero t components")
    val = A(x1 + a1 * t1, x2 + a2 * t2) - A(x1 + a1 * t1, x2) - A(x1, x2 + a2 * t2) + A(x1, x2)
    return complex(np.asarray(val)) / (t1 * t2)


# -- time side ------------------------------------------------------------

def _as_potential(A, f):
    if isinstance(f, GridFunction1D):
        A = A if isinstance(A, Potential1D) else Potential1D(A)
        g = A.periodic
        if g.n != f.n or g.period != f.period or g.x0 != f.x0:
            raise GridMismatchError("f and A live on different grids")
    else:
        A = A if isinstance(A, Potential2D) else Potential2D(A)
        g = A.periodic
        if g.shape != f.shape or g.periods != f.periods or g.x0 != f.x0:
            raise GridMismatchError("f and A live on different grids")
    return A


def commutator_time(f, A, spec: CommutatorSpec, pv: PVQuadrature | None = None):
    """Principal-value evaluation of ``C_{n,d,A} f`` on the grid of ``f``."""
    pv = PVQuadrature() if pv is None else pv
    A = _as_potential(A, f)
    _check_scales_integer(spec)
    if spec.n == 1:
        if not isinstance(f, GridFunction1D):
            raise ValueError("n = 1 needs one-dimensional inputs")
        return f.with_samples(_time_1d(f, A, spec, pv))
    if not isinstance(f, GridFunction2D):
        raise ValueError("n = 2 needs two-dimensional inputs")
    return f.with_samples(_time_2d(f, A, spec, pv))


def _time_1d(f: GridFunction1D, A: Potential1D, spec: CommutatorSpec, pv: PVQuadrature) -> np.ndarray:
    h, L, d = f.spacing, f.period, spec.d
    (a,) = spec.scales
    t, w = pv.nodes(h, L)
    shifts = np.concatenate([t, -t])
    fs = shifted_along(f.samples, shifts, h, 0, pv.interpolation)
    m = t.size
    out = 0.0
    if d:
        ap = A.periodic.samples
        P = (shifted_along(ap, a * shifts, h, 0, pv.interpolation) - ap[None, :]) / shifts[:, None]
    for j in range(d + 1):
        wj = (w * periodized_weight(j, t, L))[:, None]
        g = fs * P**j if j else fs
        term = np.sum(wj * (g[:m] - g[m:]), axis=0)
        out = out + binom(d, j) * (A.linear * a) ** (d - j) * term
    return np.asarray(out) * np.ones(f.n)


def _time_2d(f: GridFunction2D, A: Potential2D, spec: CommutatorSpec, pv: PVQuadrature) -> np.ndarray:
    (h1, h2), (L1, L2), d = f.spacings, f.periods, spec.d
    a1, a2 = spec.scales
    meth = pv.interpolation
    t1, w1 = pv.nodes(h1, L1)
    t2, w2 = pv.nodes(h2, L2)
    s2 = np.concatenate([t2, -t2])
    m2 = t2.size
    ap = A.periodic.samples
    lin = A.linear * a1 * a2
    A2 = shifted_along(ap, a2 * s2, h2, 1, meth) if d else None
    weights2 = [np.concatenate([v, -v])[:, None, None] for v in (w2 * periodized_weight(j, t2, L2) for j in range(d + 1))]
    acc = [np.zeros(f.shape, dtype=np.result_type(f.samples, ap, float)) for _ in range(d + 1)]
    for i, tau in enumerate(t1):
        for sign in (1.0, -1.0):
            f1 = shifted_along(f.samples, [sign * tau], h1, 0, meth)[0]
            f12 = shifted_along(f1, s2, h2, 1, meth)
            if d:
                a_1 = shifted_along(ap, [a1 * sign * tau], h1, 0, meth)[0]
                a_12 = shifted_along(a_1, a2 * s2, h2, 1, meth)
                P = (a_12 - a_1[None] - A2 + ap[None]) / (sign * tau * s2[:, None, None])
            for j in range(d + 1):
                g = f12 * P**j if j else f12
                wj1 = sign * w1[i] * periodized_weight(j, tau, L1)
                acc[j] += wj1 * np.sum(weights2[j] * g, axis=0)
    out = sum(binom(d, j) * lin ** (d - j) * acc[j] for j in range(d + 1))
    return np.asarray(out)


# -- frequency side -------------------------------------------------------

def _active(coeffs: np.ndarray, tol: float) -> np.ndarray:
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    return np.flatnonzero(np.abs(coeffs) > tol * max(scale, 1e-300))


def _tuples(modes_f, modes_a, d):
    grids = np.meshgrid(modes_f, *([modes_a] * d), indexing="ij")
    return [g.ravel() for g in grids]


def estimate_freq_cost(sizes_f, sizes_a, d, outputs) -> float:
    per_axis = [sf * sa**d for sf, sa in zip(sizes_f, sizes_a)]
    return float(np.prod(per_axis)) * (1 + outputs / max(per_axis[-1], 1)) * max(1, d) if len(per_axis) > 1 \
        else float(per_axis[0]) * outputs * max(1, d)


def commutator_freq(f, a, spec: CommutatorSpec, budget: float = DEFAULT_BUDGET, tol: float = 1e-13):
    """Frequency-side sum of ``C_{n,d,A} f`` over the active lattice modes, without ``kappa^n``.

    ``a`` is the derivative ``A'`` (``n = 1``) or the mixed derivative (``n = 2``).
    """
    if spec.d < 1:
        raise ValueError("commutator_freq needs d >= 1")
    if spec.n == 1:
        return f.with_samples(_freq_1d(f, a, spec, budget, tol))
    return f.with_samples(_freq_2d(f, a, spec, budget, tol))


def _freq_1d(f: GridFunction1D, a: GridFunction1D, spec, budget, tol) -> np.ndarray:
    if a.n != f.n or a.period != f.period:
        raise GridMismatchError("f and a live on different grids")
    d, (s,) = spec.d, spec.scales
    cf, ca = f.coefficients(), a.coefficients()
    freqs = f.frequencies()
    mf, ma = _active(cf, tol), _active(ca, tol)
    cost = estimate_freq_cost([mf.size], [ma.size], d, f.n)
    if cost > budget:
        raise BudgetExceeded(cost, budget)
    idx = _tuples(mf, ma, d)
    xi = freqs[idx[0]]
    xis = np.stack([s * freqs[i] for i in idx[1:]])
    val = m1d_array(xi, xis) * cf[idx[0]]
    for i in idx[1:]:
        val = val * ca[i]
    total = xi + xis.sum(axis=0) / s
    uniq, inv = np.unique(np.round(total * f.period).astype(np.int64), return_inverse=True)
    grouped = np.zeros(uniq.size, dtype=complex)
    np.add.at(grouped, inv, val)
    out = np.exp(2j * np.pi * np.multiply.outer(f.x, uniq / f.period)) @ grouped
    return s**d * out


def _axis_factor(freqs, modes_f, modes_a, d, s, x, period):
    """Rows ``U = (m, m_1..m_d)``: symbol times the output exponential along one axis."""
    idx = _tuples(modes_f, modes_a, d)
    xi = freqs[idx[0]]
    xis = np.stack([s * freqs[i] for i in idx[1:]])
    total = xi + xis.sum(axis=0) / s
    sym = m1d_array(xi, xis)
    return idx, sym[:, None] * np.exp(2j * np.pi * np.multiply.outer(total, x))


def _freq_2d(f: GridFunction2D, a: GridFunction2D, spec, budget, tol) -> np.ndarray:
    if a.shape != f.shape or a.periods != f.periods:
        raise GridMismatchError("f and a live on different grids")
    d, (s1, s2) = spec.d, spec.scales
    cf, ca = f.coefficients(), a.coefficients()
    fr1, fr2 = f.frequencies()
    act = lambda c, ax: _active(np.max(np.abs(c), axis=ax), tol)
    mf1, mf2, ma1, ma2 = act(cf, 1), act(cf, 0), act(ca, 1), act(ca, 0)
    size1, size2 = mf1.size * ma1.size**d, mf2.size * ma2.size**d
    cost = float(size1) * size2 * (d + 1) + float(size1) * size2 * f.shape[1] + float(size1) * f.shape[0] * f.shape[1]
    if cost > budget:
        raise BudgetExceeded(cost, budget)
    idx1, P1 = _axis_factor(fr1, mf1, ma1, d, s1, f.axis(0), f.periods[0])
    idx2, P2 = _axis_factor(fr2, mf2, ma2, d, s2, f.axis(1), f.periods[1])
    C = cf[np.ix_(idx1[0], idx2[0])]
    for i1, i2 in zip(idx1[1:], idx2[1:]):
        C = C * ca[np.ix_(i1, i2)]
    return (s1 * s2) ** d * (P1.T @ (C @ P2))


def calibrate_kappa(time_out, freq_out, n: int = 1) -> complex:
    """Least-squares scalar ``k`` with ``time ~ k^n freq``; returns ``k`` (principal ``n``-th root)."""
    t = np.ravel(time_out.samples if hasattr(time_out, "samples") else time_out)
    q = np.ravel(freq_out.samples if hasattr(freq_out, "samples") else freq_out)
    c = np.vdot(q, t) / np.vdot(q, q)
    return complex(c ** (1.0 / n)) if n > 1 else complex(c)


# -- bi-parameter identity with fractional derivatives --------------------

def double_commutator_freq(f: GridFunction2D, A: Potential2D, tol: float = 1e-13) -> GridFunction2D:
    """``[|D2|, [|D1|, A]] f`` with ``|D|`` the multiplier ``2 pi |xi|``.

    Periodic part: coefficient ``fhat(r) Ahat(p)`` lands on ``p + r`` weighted by
    ``(2 pi)^2 (|xi_(p+r)| - |xi_r|)(|eta_(p+r)| - |eta_r|)``, evaluated exactly
    at the grid points.  Bilinear part: ``[|D|, x] = -i sgn`` per axis.
    """
    if not isinstance(A, Potential2D):
        A = Potential2D(A)
    g = A.periodic
    if g.shape != f.shape or g.periods != f.periods or g.x0 != f.x0:
        raise GridMismatchError("f and A live on different grids")
    fr1, fr2 = f.frequencies()
    cf, cA = f.coefficients(), g.coefficients()
    out = np.zeros(f.shape, dtype=complex)
    if A.linear:
        sgn = np.outer(np.sign(fr1), np.sign(fr2))
        out -= A.linear * GridFunction2D.from_coefficients(cf * sgn, f.periods, f.x0).samples
    p1, p2 = np.nonzero(np.abs(cA) > tol * max(np.max(np.abs(cA)), 1e-300))
    r1, r2 = np.nonzero(np.abs(cf) > tol * max(np.max(np.abs(cf)), 1e-300))
    if p1.size and r1.size:
        xa, ya = fr1[p1][:, None], fr2[p2][:, None]
        xr, yr = fr1[r1][None, :], fr2[r2][None, :]
        weight = (2 * np.pi) ** 2 * (np.abs(xa + xr) - np.abs(xr)) * (np.abs(ya + yr) - np.abs(yr))
        val = (cA[p1, p2][:, None] * cf[r1, r2][None, :] * weight).ravel()
        tx = (xa + xr).ravel()
        ty = (ya + yr).ravel()
        e1 = np.exp(2j * np.pi * np.multiply.outer(f.axis(0), tx))
        e2 = np.exp(2j * np.pi * np.multiply.outer(f.axis(1), ty))
        out += (e1 * val[None, :]) @ e2.T
    if np.isrealobj(f.samples) and np.isrealobj(g.samples):
        out = out.real
    return f.with_samples(out)


# -- analytic series ------------------------------------------------------

def potential_sup(A) -> float:
    """``||a||_inf`` for the derivative (mixed derivative) of the potential."""
    if isinstance(A, Potential1D):
        return float(np.max(np.abs(A.derivative().samples)))
    return float(np.max(np.abs(A.mixed_derivative().samples)))


def extrapolate_norms(measured, degree: int | None = None) -> Callable[[int], float]:
    """Polynomial fit of measured per-degree norms, never below the largest measurement."""
    measured = np.asarray(measured, dtype=float)
    ds = np.arange(measured.size)
    deg = min(measured.size - 1, 3) if degree is None else degree
    coef = np.polyfit(ds, measured, deg) if deg > 0 else np.array([measured[0]])
    top = float(np.max(measured))

    def norm(d: int) -> float:
        if d < measured.size:
            return float(measured[d])
        return max(top, float(np.polyval(coef, d)))

    return norm


@dataclass(frozen=True)
class SeriesResult:
    output: object
    terms: tuple
    tail_bound: float
    sup_a: float


def analytic_series(f, A, spec: CommutatorSpec, D_max: int, norms: Callable[[int], float] | None = None,
                    pv: PVQuadrature | None = None, margin: float = 1.0, tail_terms: int = 400) -> SeriesResult:
    """``sum_{d <= D_max} c_d C_{n,d,A} f`` with the tail bound ``sum_{d > D_max} |c_d| C(d) ||a||^d``."""
    A = _as_potential(A, f)
    sup_a = potential_sup(A)
    if not sup_a * margin < spec.radius:
        raise DivergenceRiskError(f"||a||_inf = {sup_a:.4g} is not below the radius {spec.radius:.4g}")
    terms = []
    total = np.zeros(f.samples.shape, dtype=complex)
    for d in range(D_max + 1):
        c = spec.coefficient(d)
        if c == 0:
            terms.append(None)
            continue
        out = commutator_time(f, A, spec.with_degree(d), pv)
        terms.append(out)
        total = total + c * out.samples
    tail = math.inf
    if norms is not None:
        tail = float(sum(abs(spec.coefficient(d)) * norms(d) * sup_a**d
                         for d in range(D_max + 1, D_max + 1 + tail_terms)))
    return SeriesResult(f.with_samples(total), tuple(terms), tail, sup_a)
