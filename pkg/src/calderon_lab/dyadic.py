"""Dyadic geometry and periodic grid functions.

Every continuous object in the package lives on a periodic torus
``[x0, x0 + L)`` sampled at ``N`` equispaced points ``x_i = x0 + i*h``.
Dyadic intervals ``[j 2^-k, (j+1) 2^-k)`` are anchored at the origin, so with
``L`` and ``N`` powers of two every interval with ``h <= |I| <= L`` is a union
of whole grid cells.  Cell ``i`` is ``[x_i, x_i + h)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from fractions import Fraction
from typing import Callable

import numpy as np


class AlignmentError(ValueError):
    """A dyadic interval does not fall on whole grid cells."""


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def bracket(m: int) -> int:
    """``<m> = 2 + |m|``, keeps logarithms away from zero."""
    return 2 + abs(int(m))


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """``[j 2^-k, (j+1) 2^-k)`` with integer scale ``k`` and position ``j``."""

    scale: int
    position: int

    @property
    def length(self) -> Fraction:
        return Fraction(1, 2**self.scale) if self.scale >= 0 else Fraction(2 ** (-self.scale))

    @property
    def left(self) -> Fraction:
        return self.position * self.length

    @property
    def right(self) -> Fraction:
        return (self.position + 1) * self.length

    @property
    def center(self) -> Fraction:
        return self.left + self.length / 2

    @classmethod
    def containing(cls, x: float, scale: int) -> "DyadicInterval":
        return cls(scale, math.floor(Fraction(x) * Fraction(2) ** scale))

    def contains(self, other: "DyadicInterval") -> bool:
        """True when ``other`` is a subset of ``self``."""
        if other.scale < self.scale:
            return False
        return other.position >> (other.scale - self.scale) == self.position

    def disjoint(self, other: "DyadicInterval") -> bool:
        return not (self.contains(other) or other.contains(self))

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.scale - 1, self.position >> 1)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (DyadicInterval(self.scale + 1, 2 * self.position),
                DyadicInterval(self.scale + 1, 2 * self.position + 1))

    def shift(self, n: int) -> "DyadicInterval":
        return shift_interval(self, n)


def shift_interval(interval: DyadicInterval, n: int) -> DyadicInterval:
    """``I_n = I + n|I|``: same scale, position moved by ``n``."""
    return DyadicInterval(interval.scale, interval.position + int(n))


@dataclass(frozen=True)
class DyadicRectangle:
    x_interval: DyadicInterval
    y_interval: DyadicInterval

    @property
    def area(self) -> Fraction:
        return self.x_interval.length * self.y_interval.length

    def shift(self, n1: int, n2: int) -> "DyadicRectangle":
        return DyadicRectangle(shift_interval(self.x_interval, n1), shift_interval(self.y_interval, n2))

    def contains(self, other: "DyadicRectangle") -> bool:
        return self.x_interval.contains(other.x_interval) and self.y_interval.contains(other.y_interval)


@dataclass(frozen=True)
class ShiftPair:
    n1: int
    n2: int

    def brackets(self) -> tuple[int, int]:
        return bracket(self.n1), bracket(self.n2)

    def log2_weight(self) -> float:
        """``log^2<n1> log^2<n2>``, the per-slot factor in the model-operator bounds."""
        b1, b2 = self.brackets()
        return float(np.log(b1) ** 2 * np.log(b2) ** 2)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridFunction1D:
    """Samples of an ``L``-periodic function on ``N`` equispaced points."""

    samples: np.ndarray
    period: float = 32.0
    origin: float | None = None
    _x0: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = _readonly(self.samples)
        if s.ndim != 1 or not is_power_of_two(s.size):
            raise ValueError(f"need a 1-D sample array with power-of-two length, got shape {s.shape}")
        if self.period <= 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "_x0", -self.period / 2 if self.origin is None else float(self.origin))

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], n: int, period: float = 32.0):
        g = cls(np.zeros(n), period)
        return cls(np.asarray(func(g.x)), period)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def x0(self) -> float:
        return self._x0

    @property
    def x(self) -> np.ndarray:
        return self._x0 + self.spacing * np.arange(self.n)

    def with_samples(self, samples) -> "GridFunction1D":
        return GridFunction1D(np.asarray(samples), self.period, self._x0)

    def norm(self, p: float = 2.0) -> float:
        a = np.abs(self.samples)
        if np.isinf(p):
            return float(a.max())
        return float((self.spacing * np.sum(a**p)) ** (1.0 / p))

    def integral(self) -> complex:
        return self.spacing * np.sum(self.samples)

    def frequencies(self) -> np.ndarray:
        """Lattice frequencies ``m/L`` in FFT order."""
        return np.fft.fftfreq(self.n, d=self.spacing)

    def coefficients(self) -> np.ndarray:
        """Fourier-series coefficients ``c_m`` with ``f(x) = sum c_m exp(2 pi i m x / L)``."""
        phase = np.exp(-2j * np.pi * self.frequencies() * self._x0)
        return np.fft.fft(self.samples) / self.n * phase

    @classmethod
    def from_coefficients(cls, coeffs: np.ndarray, period: float = 32.0, origin: float | None = None,
                          real: bool = False) -> "GridFunction1D":
        n = coeffs.size
        x0 = -period / 2 if origin is None else origin
        xi = np.fft.fftfreq(n, d=period / n)
        vals = np.fft.ifft(coeffs * np.exp(2j * np.pi * xi * x0)) * n
        return cls(vals.real if real else vals, period, x0)


@dataclass(frozen=True)
class GridFunction2D:
    """Samples of a doubly periodic function on an ``N1 x N2`` grid."""

    samples: np.ndarray
    periods: tuple[float, float] = (32.0, 32.0)
    origins: tuple[float, float] | None = None
    _x0: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = _readonly(self.samples)
        if s.ndim != 2 or not all(is_power_of_two(m) for m in s.shape):
            raise ValueError(f"need a 2-D sample array with power-of-two sides, got shape {s.shape}")
        periods = tuple(float(p) for p in self.periods)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "periods", periods)
        x0 = tuple(-p / 2 for p in periods) if self.origins is None else tuple(float(o) for o in self.origins)
        object.__setattr__(self, "_x0", x0)

    @classmethod
    def from_tensor(cls, f1: GridFunction1D, f2: GridFunction1D) -> "GridFunction2D":
        return cls(np.outer(f1.samples, f2.samples), (f1.period, f2.period), (f1.x0, f2.x0))

    @classmethod
    def from_callable(cls, func, shape: tuple[int, int], periods=(32.0, 32.0)):
        g = cls(np.zeros(shape), periods)
        x1, x2 = g.mesh()
        return cls(np.asarray(func(x1, x2)), periods)

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape

    @property
    def spacings(self) -> tuple[float, float]:
        return self.periods[0] / self.shape[0], self.periods[1] / self.shape[1]

    @property
    def x0(self) -> tuple[float, float]:
        return self._x0

    @property
    def cell_area(self) -> float:
        h1, h2 = self.spacings
        return h1 * h2

    def axis(self, i: int) -> np.ndarray:
        return self._x0[i] + self.spacings[i] * np.arange(self.shape[i])

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis(0), self.axis(1), indexing="ij")

    def with_samples(self, samples) -> "GridFunction2D":
        return GridFunction2D(np.asarray(samples), self.periods, self._x0)

    def norm(self, p: float = 2.0) -> float:
        a = np.abs(self.samples)
        if np.isinf(p):
            return float(a.max())
        return float((self.cell_area * np.sum(a**p)) ** (1.0 / p))

    def integral(self) -> complex:
        return self.cell_area * np.sum(self.samples)

    def frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        h1, h2 = self.spacings
        return np.fft.fftfreq(self.shape[0], d=h1), np.fft.fftfreq(self.shape[1], d=h2)

    def coefficients(self) -> np.ndarray:
        f1, f2 = self.frequencies()
        phase = np.outer(np.exp(-2j * np.pi * f1 * self._x0[0]), np.exp(-2j * np.pi * f2 * self._x0[1]))
        return np.fft.fft2(self.samples) / self.samples.size * phase

    @classmethod
    def from_coefficients(cls, coeffs: np.ndarray, periods=(32.0, 32.0), origins=None, real: bool = False):
        x0 = tuple(-p / 2 for p in periods) if origins is None else origins
        f1 = np.fft.fftfreq(coeffs.shape[0], d=periods[0] / coeffs.shape[0])
        f2 = np.fft.fftfreq(coeffs.shape[1], d=periods[1] / coeffs.shape[1])
        phase = np.outer(np.exp(2j * np.pi * f1 * x0[0]), np.exp(2j * np.pi * f2 * x0[1]))
        vals = np.fft.ifft2(coeffs * phase) * coeffs.size
        return cls(vals.real if real else vals, periods, x0)


# -- grid alignment ---------------------------------------------------------

def cell_offset(x: Fraction | float, x0: float, h: float) -> int:
    """Index of the grid point at ``x``; raises if ``x`` is off-grid."""
    q = (Fraction(x) - Fraction(x0)) / Fraction(h)
    if q.denominator != 1:
        raise AlignmentError(f"point {float(x)} is not on the grid (spacing {h}, origin {x0})")
    return int(q)


def interval_cells(interval: DyadicInterval, n: int, period: float, x0: float) -> np.ndarray:
    """Cell indices (mod ``n``) covered by ``interval`` on a periodic grid."""
    h = period / n
    length = interval.length
    if length < Fraction(h):
        raise AlignmentError(f"|I| = {float(length)} is finer than the grid spacing {h}")
    if length > Fraction(period):
        raise AlignmentError(f"|I| = {float(length)} exceeds the period {period}")
    start = cell_offset(interval.left, x0, h)
    count = int(length / Fraction(h))
    return (start + np.arange(count)) % n


def average_over(f: GridFunction1D, interval: DyadicInterval, absolute: bool = True) -> float | complex:
    """Discrete average of ``|f|`` (or ``f``) over a grid-aligned dyadic interval."""
    idx = interval_cells(interval, f.n, f.period, f.x0)
    vals = f.samples[idx]
    if absolute:
        return float(np.mean(np.abs(vals)))
    return complex(np.mean(vals))


def translate(f: GridFunction1D, a: float) -> GridFunction1D:
    """``f^a(x) = f(x - a)``.

    Grid-aligned shifts are index rotations; anything else goes through the
    trigonometric interpolant (phase ``exp(-2 pi i a xi)`` per mode).
    """
    q = a / f.spacing
    if abs(q - round(q)) < 1e-12:
        return f.with_samples(np.roll(f.samples, int(round(q))))
    out = np.fft.ifft(np.fft.fft(f.samples) * np.exp(-2j * np.pi * f.frequencies() * a))
    if np.isrealobj(f.samples):
        out = out.real
    return f.with_samples(out)


def shift_samples(samples: np.ndarray, shifts: np.ndarray, spacing: float) -> np.ndarray:
    """Trigonometric interpolant of ``samples`` (last axis) evaluated at ``x_i + t``.

    Returns shape ``(len(shifts),) + samples.shape``.
    """
    samples = np.asarray(samples)
    n = samples.shape[-1]
    xi = np.fft.fftfreq(n, d=spacing)
    spec = np.fft.fft(samples, axis=-1)
    phase = np.exp(2j * np.pi * np.multiply.outer(np.asarray(shifts, dtype=float), xi))
    phase = phase.reshape((phase.shape[0],) + (1,) * (samples.ndim - 1) + (n,))
    return np.fft.ifft(spec[None, ...] * phase, axis=-1)
