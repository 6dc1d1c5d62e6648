"""Symbols of the Calderon commutators and the windowed double Fourier series.

The one-parameter symbol is the average of ``sgn(xi + a_1 xi_1 + ... + a_d xi_d)``
over the unit cube.  Integrating ``sgn`` once along ``a_d`` gives a divided
difference of ``|t|``; after ``d`` integrations the symbol is the ``d``-fold
divided difference of ``G_d(t) = t^(d-1) |t| / d!`` at the points
``xi + sum_{i in S} xi_i``.  Each ``|.|`` kink is a breakpoint of the piecewise
polynomial; evaluated in rational arithmetic this is exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .littlewood_paley import COMPACT, BumpProfile

EXACT = "exact-piecewise"
MONTE_CARLO = "monte-carlo"
MAX_EXACT_DEGREE = 3


class UnsupportedExactError(ValueError):
    """Exact evaluation was requested beyond the supported degree."""


class ResolutionError(ValueError):
    """The requested lattice exceeds what the sampling grid resolves."""


@dataclass(frozen=True)
class SymbolQuery:
    xi: float
    xis: tuple[float, ...]
    eta: float | None = None
    etas: tuple[float, ...] | None = None
    method: str = EXACT
    samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "xis", tuple(float(v) for v in self.xis))
        if self.etas is not None:
            object.__setattr__(self, "etas", tuple(float(v) for v in self.etas))
        if len(self.xis) < 1:
            raise ValueError("d must be at least 1")
        if self.etas is not None and len(self.etas) != len(self.xis):
            raise ValueError("both parameters need the same d")
        if self.method not in (EXACT, MONTE_CARLO):
            raise ValueError(f"unknown method {self.method!r}")
        if self.samples < 1:
            raise ValueError("monte-carlo needs at least one sample")

    @property
    def d(self) -> int:
        return len(self.xis)

    @property
    def biparameter(self) -> bool:
        return self.eta is not None


def _g(t: Fraction, d: int) -> Fraction:
    return t ** (d - 1) * abs(t) / math.factorial(d)


def m1d_exact(xi: float, xis) -> float:
    live = [Fraction(v) for v in xis if v != 0]
    x = Fraction(xi)
    d = len(live)
    if d == 0:
        return float((x > 0) - (x < 0))
    if d > MAX_EXACT_DEGREE:
        raise UnsupportedExactError(f"exact evaluation supports d <= {MAX_EXACT_DEGREE}, got d = {d}; use monte-carlo")
    total = Fraction(0)
    for subset in itertools.product((0, 1), repeat=d):
        point = x + sum((v for v, on in zip(live, subset) if on), Fraction(0))
        total += (-1) ** (d - sum(subset)) * _g(point, d)
    return float(total / math.prod(live))


def m1d_monte_carlo(xi: float, xis, samples: int = 1_000_000, seed: int = 0,
                    batch: int = 250_000) -> tuple[float, float]:
    """Sample mean of ``sgn(xi + alpha . xis)`` and its standard error."""
    rng = np.random.default_rng(seed)
    coeffs = np.asarray(xis, dtype=float)
    s1 = 0.0
    s2 = 0.0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        vals = np.sign(xi + rng.random((m, coeffs.size)) @ coeffs)
        s1 += vals.sum()
        s2 += (vals**2).sum()
        done += m
    mean = s1 / samples
    var = max(s2 / samples - mean**2, 0.0)
    return float(mean), float(np.sqrt(var / samples))


def m1d(query: SymbolQuery) -> float:
    """``m_{1,d}(xi, xi_1, ..., xi_d)``."""
    if query.method == EXACT:
        return m1d_exact(query.xi, query.xis)
    return m1d_monte_carlo(query.xi, query.xis, query.samples, query.seed)[0]


def m2d(query: SymbolQuery) -> float:
    """``m_{2,d} = m_{1,d}(xi, xis) * m_{1,d}(eta, etas)``."""
    if not query.biparameter:
        raise ValueError("m2d needs a bi-parameter query (eta, etas)")
    second = SymbolQuery(query.eta, query.etas, method=query.method, samples=query.samples, seed=query.seed + 1)
    return m1d(query) * m1d(second)


def m1d_array(xi: np.ndarray, xis: np.ndarray) -> np.ndarray:
    """Vectorized float evaluation; ``xis`` has shape ``(d,) + xi.shape``.

    Zero entries are removed pattern by pattern, so each evaluation is the
    divided difference over the nonzero directions only.
    """
    xi = np.asarray(xi, dtype=float)
    xis = np.asarray(xis, dtype=float).reshape((-1,) + xi.shape)
    d = xis.shape[0]
    out = np.empty(xi.shape)
    if d == 0:
        return np.sign(xi)
    nonzero = xis != 0
    codes = np.zeros(xi.shape, dtype=np.int64)
    for i in range(d):
        codes |= nonzero[i].astype(np.int64) << i
    for code in np.unique(codes):
        mask = codes == code
        dirs = [i for i in range(d) if (code >> i) & 1]
        x = xi[mask]
        if not dirs:
            out[mask] = np.sign(x)
            continue
        v = xis[dirs][:, mask]
        dd = len(dirs)
        total = np.zeros_like(x)
        for subset in itertools.product((0, 1), repeat=dd):
            p = x + sum((v[i] for i in range(dd) if subset[i]), np.zeros_like(x))
            total += (-1) ** (dd - sum(subset)) * p ** (dd - 1) * np.abs(p)
        out[mask] = total / math.factorial(dd) / np.prod(v, axis=0)
    return out


# -- windowed symbol and its double Fourier series ------------------------

def default_windows(r1: int, profile: BumpProfile = BumpProfile(COMPACT)):
    """Compactly supported windows: ``|xi~| < 2^r1 / 4`` and ``xi_1`` in the annulus ``2^r1/4 < |xi_1| < 2^r1``.

    On their joint support ``|xi~| < |xi_1|``, so the only kink of the
    symbol is the line ``xi~ = 0``.
    """
    s = 2.0**r1
    return (lambda t: profile.phi_hat(4.0 * t / s), lambda t: profile.psi_hat(t / s))


@dataclass(frozen=True)
class CoeffTable:
    r1: int
    bound: int
    half_box: float
    coeffs: np.ndarray  # indexed [n + bound, n1 + bound]
    decay_constant: float
    grid_size: int

    @property
    def period(self) -> float:
        return 2 * self.half_box

    def coefficient(self, n: int, n1: int) -> complex:
        return complex(self.coeffs[n + self.bound, n1 + self.bound])

    def evaluate(self, xt, x1, bound: int | None = None) -> np.ndarray:
        """Truncated series ``sum C exp(2 pi i (n xt + n1 x1) / P)``."""
        b = self.bound if bound is None else bound
        idx = np.arange(-b, b + 1)
        sub = self.coeffs[self.bound - b:self.bound + b + 1, self.bound - b:self.bound + b + 1]
        e1 = np.exp(2j * np.pi * np.multiply.outer(np.asarray(xt, dtype=float), idx) / self.period)
        e2 = np.exp(2j * np.pi * np.multiply.outer(np.asarray(x1, dtype=float), idx) / self.period)
        return np.einsum("...a,ab,...b->...", e1, sub, e2)


def windowed_symbol(xt, x1, windows) -> np.ndarray:
    wa, wb = windows
    xt = np.asarray(xt, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    return m1d_array(xt, x1[None, ...]) * wa(xt) * wb(x1)


def symbol_fourier_coeffs(r1: int, windows=None, lattice_bound: int = 64, grid_size: int | None = None,
                          exponent: float = 3.0) -> CoeffTable:
    """Fourier coefficients of the windowed one-commutator symbol on ``[-2^(r1+1), 2^(r1+1)]^2``.

    The decay constant recorded is ``max |C| <n>^2 <n1>^exponent`` over the table.
    """
    windows = default_windows(r1) if windows is None else windows
    ng = grid_size or max(4 * lattice_bound, 256)
    if lattice_bound > ng // 2 - 1:
        raise ResolutionError(f"lattice bound {lattice_bound} exceeds the Nyquist index of a {ng}-point grid")
    half = 2.0 ** (r1 + 1)
    period = 2 * half
    axis = -half + period * np.arange(ng) / ng
    xt, x1 = np.meshgrid(axis, axis, indexing="ij")
    sigma = windowed_symbol(xt, x1, windows)
    raw = np.fft.fft2(sigma) / ng**2
    freq = np.fft.fftfreq(ng, d=1.0 / ng)
    phase = np.exp(2j * np.pi * freq * half / period)
    raw = raw * np.outer(phase, phase)
    idx = np.arange(-lattice_bound, lattice_bound + 1)
    table = raw[np.ix_(idx % ng, idx % ng)]
    weight = np.outer((2 + np.abs(idx)) ** 2.0, (2 + np.abs(idx)) ** float(exponent))
    return CoeffTable(r1, lattice_bound, half, table, float(np.max(np.abs(table) * weight)), ng)
