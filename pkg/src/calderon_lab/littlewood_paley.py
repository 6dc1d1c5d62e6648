"""Mother bumps, dyadic dilates, adapted bumps and the tail splitting of a bump.

Fourier convention: ``fhat(xi) = int f(x) exp(-2 pi i x xi) dx``.  Every bump is
sampled spectrally: the Fourier-series coefficients of its ``L``-periodization
are ``hat(m/L)/L``, so sampling is exact up to the tail of ``hat`` beyond the
Nyquist frequency.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .dyadic import DyadicInterval, GridFunction1D, interval_cells

NONCOMPACT = "noncompact"
COMPACT = "compact-frequency"


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    a = np.exp(-1.0 / ti)
    b = np.exp(-1.0 / (1.0 - ti))
    out[inside] = a / (a + b)
    out[t >= 1] = 1.0
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(256)


@dataclass(frozen=True)
class BumpProfile:
    """A mother ``Phi`` together with ``Psi(x) = Phi(x) - Phi(x/2)/2``.

    ``noncompact``: the normalized Gaussian ``exp(-pi x^2)`` (even, positive,
    unit mass).  ``compact-frequency``: ``Phi-hat`` is a smoothed indicator,
    equal to 1 on ``[-1/2, 1/2]`` and vanishing outside ``[-1, 1]``.
    """

    kind: str = NONCOMPACT

    def __post_init__(self):
        if self.kind not in (NONCOMPACT, COMPACT):
            raise ValueError(f"unknown bump kind {self.kind!r}")

    def phi_hat(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.kind == NONCOMPACT:
            return np.exp(-np.pi * xi**2)
        return smooth_step(2.0 * (1.0 - np.abs(xi)))

    def psi_hat(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.phi_hat(xi) - self.phi_hat(2.0 * xi)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == NONCOMPACT:
            return np.exp(-np.pi * x**2)
        # even real transform of a function supported in [-1, 1]; the fixed rule aliases beyond |x| ~ 40
        return np.einsum("n,...n->...", _GL_W * self.phi_hat(_GL_X),
                         np.cos(2 * np.pi * np.multiply.outer(x, _GL_X)))

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return self.phi(x) - 0.5 * self.phi(x / 2.0)

    def mother(self, psi_type: bool):
        return (self.psi, self.psi_hat) if psi_type else (self.phi, self.phi_hat)

    def dilate(self, k: int, x, psi_type: bool = False):
        """``2^k Phi(2^k x)`` (or the same for ``Psi``)."""
        f, _ = self.mother(psi_type)
        s = 2.0**k
        return s * f(s * np.asarray(x, dtype=float))

    @functools.lru_cache(maxsize=None)
    def lq_norm(self, q: float, psi_type: bool = False) -> float:
        """``||Phi||_q`` on the line (or ``||Psi||_q``)."""
        f, fh = self.mother(psi_type)
        if q == 2:
            val, _ = integrate.quad(lambda t: fh(t) ** 2, -np.inf, np.inf, limit=200)
            return float(np.sqrt(val))
        if np.isinf(q):
            xs = np.linspace(-8, 8, 20001)
            return float(np.max(np.abs(f(xs))))
        val, _ = integrate.quad(lambda t: abs(float(f(t))) ** q, -np.inf, np.inf, limit=400)
        return float(val ** (1.0 / q))


def make_mother_pair(kind: str = NONCOMPACT, n: int = 4096, period: float = 32.0):
    """Return the profile and its ``Psi`` table sampled on a fine periodic grid."""
    profile = BumpProfile(kind)
    probe = GridFunction1D(np.zeros(n), period)
    return profile, sample_hat(lambda xi: profile.psi_hat(xi), probe, real=True)


def resolvable_scales(grid: GridFunction1D, profile: BumpProfile = BumpProfile(), tol: float = 1e-15):
    """Scales ``k`` whose dilate is resolved on ``grid`` and fits inside one period."""
    nyq = 0.5 / grid.spacing
    k_min = -int(np.floor(np.log2(grid.period)))
    k_max = k_min
    while np.max(np.abs(profile.phi_hat(nyq * 2.0 ** -(k_max + 1)))) <= tol and k_max < 60:
        k_max += 1
    return k_min, k_max


def sample_hat(hat, grid: GridFunction1D, real: bool = False) -> GridFunction1D:
    """Samples of the periodization of the function whose transform is ``hat``."""
    xi = grid.frequencies()
    coeffs = np.asarray(hat(xi), dtype=complex) / grid.period
    return GridFunction1D.from_coefficients(coeffs, grid.period, grid.x0, real=real)


def lp_partition_residual(profile: BumpProfile, K: int, xi) -> float:
    """``sup |sum_{|k|<=K} Psi_k-hat(xi) - 1|`` over the frequencies ``xi``."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise ValueError("the partition of unity fails at the origin; drop xi = 0")
    total = np.zeros_like(xi)
    for k in range(-K, K + 1):
        total += profile.psi_hat(xi * 2.0**-k)
    return float(np.max(np.abs(total - 1.0)))


@dataclass(frozen=True)
class BumpFamily:
    """Dilates of a mother with shift law ``a(k) = shift / 2^k``.

    Member ``k`` is ``2^(k/q) Phi(2^k (x - a(k)))``; ``q = 1`` gives the
    L1-normalized family ``Phi_k`` used in convolutions.
    """

    profile: BumpProfile = field(default_factory=BumpProfile)
    psi_type: bool = False
    shift: float = 0.0
    q: float = 1.0

    def hat(self, k: int, xi):
        _, fh = self.profile.mother(self.psi_type)
        xi = np.asarray(xi, dtype=float)
        s = 2.0**k
        amp = s ** (1.0 / self.q - 1.0) if np.isfinite(self.q) else 1.0 / s
        return amp * fh(xi / s) * np.exp(-2j * np.pi * (self.shift / s) * xi)

    def sample(self, k: int, grid: GridFunction1D) -> GridFunction1D:
        return sample_hat(lambda xi: self.hat(k, xi), grid, real=self.shift == 0)

    def convolve(self, f: GridFunction1D, k: int) -> np.ndarray:
        """Samples of ``f * member_k`` on the torus."""
        spec = np.fft.fft(f.samples)
        return np.fft.ifft(spec * self.hat(k, f.frequencies()))

    def convolve_all(self, spec: np.ndarray, xi: np.ndarray, ks, axis: int = -1) -> np.ndarray:
        """Multiply a spectrum by every member's transform; leading axis indexes ``ks``."""
        shape = [1] * spec.ndim
        shape[axis] = -1
        mult = np.stack([self.hat(k, xi).reshape(shape) for k in ks])
        return mult * spec[None, ...]


def smooth_average(f: GridFunction1D, k: int, profile: BumpProfile = BumpProfile()) -> np.ndarray:
    """``f * Phi_k``."""
    return BumpFamily(profile).convolve(f, k)


def adapted_bump(interval: DyadicInterval, family: BumpFamily, q: float, grid: GridFunction1D) -> GridFunction1D:
    """``|I|^(-1/q) Phi((x - c)/|I|) / ||Phi||_q`` centered on ``I_n`` (``n = family.shift``).

    The normalization makes the output have unit ``L^q`` norm on the line.
    """
    interval_cells(interval, grid.n, grid.period, grid.x0)
    _, fh = family.profile.mother(family.psi_type)
    length = float(interval.length)
    center = float(interval.center) + family.shift * length
    norm = family.profile.lq_norm(q, family.psi_type)
    amp = length ** (1.0 - 1.0 / q) / norm if np.isfinite(q) else length / norm

    def hat(xi):
        return amp * fh(length * xi) * np.exp(-2j * np.pi * center * xi)

    return sample_hat(hat, grid, real=True)


def spectral_derivative(f: GridFunction1D, order: int) -> np.ndarray:
    xi = f.frequencies()
    return np.fft.ifft(np.fft.fft(f.samples) * (2j * np.pi * xi) ** order)


def periodic_distance_to_interval(x: np.ndarray, left: float, right: float, period: float) -> np.ndarray:
    c = 0.5 * (left + right)
    r = 0.5 * (right - left)
    d = np.abs((x - c + period / 2) % period - period / 2)
    return np.maximum(d - r, 0.0)


def decay_constant(bump: GridFunction1D, interval: DyadicInterval, q: float, M: float, max_order: int) -> float:
    """Smallest constant in ``|d^a b(x)| <= C |I|^(-a-1/q) (1 + dist(x, I)/|I|)^(-M)``, ``a <= max_order``."""
    length = float(interval.length)
    dist = periodic_distance_to_interval(bump.x, float(interval.left), float(interval.right), bump.period)
    weight = (1.0 + dist / length) ** M
    best = 0.0
    for a in range(max_order + 1):
        deriv = np.abs(spectral_derivative(bump, a)) if a else np.abs(bump.samples)
        best = max(best, float(np.max(deriv * weight)) * length ** (a + 1.0 / q))
    return best


@dataclass(frozen=True)
class TailSplit:
    """``phi = sum_k 2^(-kappa k) pieces[k] + dropped`` with ``supp pieces[k]`` inside ``2^k J``."""

    interval: DyadicInterval
    kappa: float
    pieces: tuple[GridFunction1D, ...]
    supports: tuple[np.ndarray, ...]
    dropped: float

    def resum(self) -> np.ndarray:
        return sum(2.0 ** (-self.kappa * k) * p.samples for k, p in enumerate(self.pieces))


def dilate_cells(interval: DyadicInterval, factor: int, grid: GridFunction1D) -> np.ndarray:
    """Cells of ``factor * J`` (same center); the whole torus when it wraps."""
    length = float(interval.length) * factor
    if length >= grid.period:
        return np.arange(grid.n)
    left = float(interval.center) - length / 2
    start = int(round((left - grid.x0) / grid.spacing))
    count = int(round(length / grid.spacing))
    return (start + np.arange(count)) % grid.n


def _cutoff(x, center, half_length, period):
    if half_length / 2 >= period / 2:
        return np.ones_like(x)
    d = np.abs((x - center + period / 2) % period - period / 2)
    return smooth_step((half_length - d) / (half_length / 2))


def bump_tail_split(phi: GridFunction1D, interval: DyadicInterval, kappa: float = 10.0, K: int = 12,
                    zero_mean: bool | None = None) -> TailSplit:
    """Split a bump adapted to ``J`` into pieces supported in the dilates ``2^k J``.

    Pieces come from smooth annular cutoffs; for mean-zero input each piece is
    re-centered by a multiple of a fixed unit-mass corrector supported in ``J``.
    """
    x = phi.x + phi.spacing / 2  # cell centers, so cutoffs follow the cell supports
    c = float(interval.center)
    length = float(interval.length)
    etas = [_cutoff(x, c, 2.0 ** (k - 1) * length, phi.period) for k in range(K + 1)]
    if 2.0**K * length >= phi.period:
        etas[-1] = np.ones_like(x)
    vals = np.asarray(phi.samples)
    raw = [etas[0] * vals] + [(etas[k] - etas[k - 1]) * vals for k in range(1, K + 1)]
    dropped = float(np.max(np.abs((1.0 - etas[-1]) * vals)))
    if zero_mean is None:
        zero_mean = abs(np.sum(vals)) <= 1e-12 * max(np.sum(np.abs(vals)), 1e-300)
    if zero_mean:
        corrector = etas[0] / np.sum(etas[0])
        raw = [r - np.sum(r) * corrector for r in raw]
    pieces = tuple(phi.with_samples(2.0 ** (kappa * k) * r) for k, r in enumerate(raw))
    supports = tuple(dilate_cells(interval, 2**k, phi) for k in range(K + 1))
    return TailSplit(interval, kappa, pieces, supports, dropped)
