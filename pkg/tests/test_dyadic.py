import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from calderon_lab.dyadic import (AlignmentError, DyadicInterval, DyadicRectangle, GridFunction1D, GridFunction2D,
                                 ShiftPair, average_over, bracket, interval_cells, shift_interval, translate)

intervals = st.builds(DyadicInterval, st.integers(-4, 8), st.integers(-64, 64))


def test_shift_interval_examples():
    unit = DyadicInterval(0, 0)
    assert shift_interval(unit, 0) == unit
    assert shift_interval(unit, 3) == DyadicInterval(0, 3)
    quarter = DyadicInterval(2, 2)  # [0.5, 0.75)
    assert (quarter.left, quarter.right) == (Fraction(1, 2), Fraction(3, 4))
    moved = shift_interval(quarter, -2)
    assert (moved.left, moved.right) == (0, Fraction(1, 4))


def test_lengths_are_exact():
    assert DyadicInterval(3, 5).length == Fraction(1, 8)
    assert DyadicInterval(-2, 1).length == 4
    R = DyadicRectangle(DyadicInterval(1, 0), DyadicInterval(3, 1))
    assert R.area == Fraction(1, 16)


def _as_set(I):
    return (I.left, I.right)


def test_nesting_trichotomy_exhaustive():
    pool = [DyadicInterval(k, j) for k in range(0, 5) for j in range(-3, 2**k + 1)]
    for a, b in itertools.product(pool, repeat=2):
        la, ra = _as_set(a)
        lb, rb = _as_set(b)
        disjoint = ra <= lb or rb <= la
        a_in_b = lb <= la and ra <= rb
        b_in_a = la <= lb and rb <= ra
        assert a.contains(b) == b_in_a
        assert b.contains(a) == a_in_b
        assert disjoint or a_in_b or b_in_a
        if a != b:
            assert sum([disjoint, a_in_b, b_in_a]) == 1


@given(intervals, st.integers(-100, 100))
def test_shift_roundtrip(I, n):
    assert shift_interval(shift_interval(I, n), -n) == I
    assert I.shift(n).left == I.left + n * I.length


@given(intervals)
def test_parent_children(I):
    for c in I.children():
        assert I.contains(c) and c.parent() == I


def test_bracket_and_shift_pair():
    assert bracket(0) == 2 and bracket(-5) == 7
    s = ShiftPair(3, -1)
    assert s.brackets() == (5, 3)
    assert s.log2_weight() == pytest.approx(np.log(5) ** 2 * np.log(3) ** 2)


def test_average_over_examples():
    g = GridFunction1D.from_callable(lambda x: ((x >= 0) & (x < 1)).astype(float), 256, 32.0)
    assert average_over(g, DyadicInterval(-1, 0)) == pytest.approx(0.5, abs=1e-15)
    c = GridFunction1D(np.full(256, -3.0), 32.0)
    assert average_over(c, DyadicInterval(1, 3)) == 3.0


def test_average_over_matches_direct_sum(rng):
    g = GridFunction1D(rng.normal(size=512) + 1j * rng.normal(size=512), 32.0)
    h = g.spacing
    for I in [DyadicInterval(0, 2), DyadicInterval(-2, -3), DyadicInterval(4, 17)]:
        x = g.x
        inside = (x >= float(I.left) - 1e-12) & (x < float(I.right) - 1e-12)
        oracle = h * np.sum(np.abs(g.samples[inside])) / float(I.length)
        assert abs(average_over(g, I) - oracle) <= 1e-12


def test_average_over_homogeneous(rng):
    g = GridFunction1D(rng.random(256), 32.0)
    I = DyadicInterval(1, 4)
    assert average_over(g.with_samples(-2.5 * g.samples), I) == pytest.approx(2.5 * average_over(g, I), rel=1e-14)
    assert average_over(g, I) == pytest.approx(float(average_over(g, I, absolute=False).real), rel=1e-14)


def test_alignment_errors():
    g = GridFunction1D(np.zeros(64), 32.0)  # h = 0.5
    with pytest.raises(AlignmentError):
        average_over(g, DyadicInterval(2, 0))
    with pytest.raises(AlignmentError):
        interval_cells(DyadicInterval(-6, 0), 64, 32.0, -16.0)


def test_grid_must_be_power_of_two():
    with pytest.raises(ValueError):
        GridFunction1D(np.zeros(48), 32.0)


def test_discrete_norms(rng):
    v = rng.normal(size=128)
    g = GridFunction1D(v, 16.0)
    assert g.norm(3) == pytest.approx((g.spacing * np.sum(np.abs(v) ** 3)) ** (1 / 3), rel=1e-14)
    assert g.norm(np.inf) == np.max(np.abs(v))


def test_translate(rng):
    g = GridFunction1D(rng.normal(size=64), 32.0)
    assert np.array_equal(translate(g, 0.0).samples, g.samples)
    assert np.array_equal(translate(g, g.spacing).samples, np.roll(g.samples, 1))
    a = 0.3
    lhs = np.fft.fft(translate(g, a).samples)
    # G^a(x) = G(x - a) carries the phase exp(-2 pi i a xi)
    rhs = np.exp(-2j * np.pi * a * g.frequencies()) * np.fft.fft(g.samples)
    keep = np.abs(g.frequencies()) < 0.5 / g.spacing  # the Nyquist mode is real-projected
    assert np.max(np.abs(lhs - rhs)[keep]) <= 1e-10 * np.max(np.abs(rhs))


def test_coefficients_roundtrip(rng):
    g = GridFunction1D(rng.normal(size=64), 8.0)
    back = GridFunction1D.from_coefficients(g.coefficients(), g.period, g.x0, real=True)
    assert np.allclose(back.samples, g.samples, atol=1e-13)
    x = g.x
    direct = np.exp(2j * np.pi * np.outer(x, g.frequencies())) @ g.coefficients()
    assert np.allclose(direct.real, g.samples, atol=1e-12)


def test_tensor_product_is_lossless(rng):
    a = GridFunction1D(rng.normal(size=32), 8.0)
    b = GridFunction1D(rng.normal(size=16), 4.0)
    t = GridFunction2D.from_tensor(a, b)
    assert t.shape == (32, 16) and t.periods == (8.0, 4.0)
    assert np.array_equal(t.samples, np.outer(a.samples, b.samples))
