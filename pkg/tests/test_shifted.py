import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from calderon_lab.constants import REGRESSION_SLACK, WEAK_TYPE_C0
from calderon_lab.dyadic import GridFunction1D, GridFunction2D, ShiftPair
from calderon_lab.littlewood_paley import BumpFamily, BumpProfile
from calderon_lab.shifted import (MM, MS, SS, ConfigurationError, DegenerateInputError, companion_offsets, curly_Mn,
                                  cz_decompose, estimate_opnorm, fefferman_stein_ratio, hybrid, hybrid_l2_envelope,
                                  maximal_report, shifted_maximal, shifted_maximal_adjoint, shifted_maximal_levels,
                                  shifted_square, weak_type_ratio)
from calderon_lab.suites import weak_type_suite


def grid(samples, period=None):
    samples = np.asarray(samples, dtype=float)
    return GridFunction1D(samples, float(samples.size) if period is None else period)


def block_cells(f, p, left):
    """Cells whose left endpoints lie in ``[left, left + 2^p h)`` on the torus."""
    start = int(round((left - f.x0) / f.spacing))
    return (start + np.arange(2**p)) % f.n


def brute_Mn(f, n):
    a = np.abs(f.samples)
    out = np.zeros(f.n)
    for i in range(f.n):
        x = f.x0 + i * f.spacing
        for p in range(int(math.log2(f.n)) + 1):
            length = 2**p * f.spacing
            left = math.floor(x / length + 1e-12) * length
            out[i] = max(out[i], a[block_cells(f, p, left + n * length)].mean())
    return out


def brute_linearized(f, n, u):
    """Average of ``u`` over the winning shifted block of every cell."""
    win = shifted_maximal_levels(f, n)
    out = np.zeros(f.n)
    for i in range(f.n):
        p = int(win[i])
        length = 2**p * f.spacing
        left = math.floor((f.x0 + i * f.spacing) / length + 1e-12) * length
        out[i] = u[block_cells(f, p, left + n * length)].mean()
    return out


@pytest.mark.parametrize("n", [0, 1, -1, 3, 5, -7, 16])
def test_maximal_against_brute_force(rng, n):
    f = grid(rng.normal(size=64), period=8.0)
    assert np.max(np.abs(shifted_maximal(f, n).samples - brute_Mn(f, n))) <= 1e-12


def test_shift_one_of_unit_indicator():
    f = GridFunction1D(np.zeros(128), 16.0)
    f = f.with_samples(((f.x >= 0) & (f.x < 1)).astype(float))
    out = shifted_maximal(f, 1).samples
    assert np.all(out[(f.x >= -1) & (f.x < 0)] == 1.0)
    assert np.max(out) == 1.0


def test_monotone_in_input(rng):
    a = np.abs(rng.normal(size=64))
    b = a + np.abs(rng.normal(size=64))
    assert np.all(shifted_maximal(grid(a), 3).samples <= shifted_maximal(grid(b), 3).samples + 1e-15)


@pytest.mark.parametrize("n", [0, 2, -5, 9])
def test_adjoint_identity(rng, n):
    f = grid(rng.normal(size=64), period=16.0)
    u, g = rng.normal(size=64), rng.normal(size=64)
    lhs = np.dot(brute_linearized(f, n, u), g)
    rhs = np.dot(u, shifted_maximal_adjoint(f, g, n))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_square_function_basics(rng):
    const = grid(np.full(128, 2.0), period=16.0)
    assert np.max(shifted_square(const, 3, 5).samples) <= 1e-12
    f = GridFunction1D(np.zeros(256), 32.0)
    f = f.with_samples(np.exp(-f.x**2) * np.cos(3 * f.x))
    f = f.with_samples(f.samples - f.samples.mean())
    r = shifted_square(f, 0, 8).norm(2) / f.norm(2)
    assert 0.5 <= r <= 2.0
    moved = f.with_samples(np.roll(f.samples, 5))
    assert np.allclose(shifted_square(moved, 2, 6).samples, np.roll(shifted_square(f, 2, 6).samples, 5), atol=1e-12)


def _tensor(rng, n=32, period=8.0):
    g = GridFunction1D(np.zeros(n), period)
    f1 = g.with_samples(rng.normal(size=n))
    f2 = g.with_samples(rng.normal(size=n))
    return f1, f2, GridFunction2D(np.outer(f1.samples, f2.samples), (period, period))


def test_hybrid_square_separates(rng):
    f1, f2, f = _tensor(rng)
    out = hybrid(f, SS, ShiftPair(2, -3), K=4).samples
    ref = np.outer(shifted_square(f1, 2, 4).samples, shifted_square(f2, -3, 4).samples)
    assert np.max(np.abs(out - ref)) <= 1e-10 * np.max(ref)


def test_hybrid_maximal_separates(rng):
    f1, f2, f = _tensor(rng)
    fam = BumpFamily(BumpProfile(), psi_type=False, shift=1.0)
    sup = lambda g: np.max([np.abs(np.fft.ifft(np.fft.fft(g.samples) * fam.hat(k, g.frequencies())))
                            for k in range(-3, 4)], axis=0)
    out = hybrid(f, MM, ShiftPair(1, 1), K=3).samples
    assert np.max(np.abs(out - np.outer(sup(f1), sup(f2)))) <= 1e-10 * np.max(out)


def test_sup_below_square_sum(rng):
    f = GridFunction2D(rng.normal(size=(32, 32)), (8.0, 8.0))
    ms = hybrid(f, MS, K=4, psi_types=(True, True)).samples
    ss = hybrid(f, SS, K=4).samples
    assert np.all(ms <= ss + 1e-12)
    assert np.all(hybrid(f, MS, K=4).samples <= hybrid_l2_envelope(f, K=4).samples + 1e-12)


def test_hybrid_configuration_errors(rng):
    f = GridFunction2D(rng.normal(size=(16, 16)), (4.0, 4.0))
    with pytest.raises(ConfigurationError):
        hybrid(f, "XY")
    with pytest.raises(ConfigurationError):
        hybrid(f, SS, psi_types=(True, False))
    with pytest.raises(ConfigurationError):
        hybrid(f, MS, psi_types=(False, False))


def test_curly_maximal(rng):
    w = grid(np.abs(rng.normal(size=64)))
    assert np.array_equal(curly_Mn(w, 1).samples, shifted_maximal(w, -1).samples)
    big = curly_Mn(w, 16).samples
    for k in range(5):
        assert np.all(big >= shifted_maximal(w, -(2**k)).samples - 1e-15)
    with pytest.raises(ValueError):
        curly_Mn(w, 0)


def test_weak_type_regression():
    rows = weak_type_suite()
    assert len(rows) >= 15
    assert max(r["ratio"] for r in rows) <= REGRESSION_SLACK * WEAK_TYPE_C0


def test_weak_type_degenerate():
    f = grid(np.ones(16))
    with pytest.raises(DegenerateInputError):
        weak_type_ratio(f, grid(np.zeros(16)), 2, 0.5)


def test_cz_flat_input_selects_nothing():
    alpha = 2.0
    f = grid(np.full(64, alpha / 2))
    cz = cz_decompose([f], 3, alpha)
    assert cz.blocks == () and not cz.omega.any() and cz.all_hold


def test_cz_single_spike():
    f = grid(np.zeros(64))
    vals = f.samples.copy()
    vals[10] = 40.0
    cz = cz_decompose([f.with_samples(vals)], 4, 3.0)
    # the spike averages 40 / 2^p over a block of 2^p cells: the largest block above 3 has 8 cells
    assert [p for p, _ in cz.blocks] == [3]
    assert cz.omega.sum() == 8 and cz.omega[10]
    assert cz.all_hold


def test_cz_alpha_validation(rng):
    f = grid(np.abs(rng.normal(size=32)) + 1)
    with pytest.raises(ValueError):
        cz_decompose([f], 2, 0.5)
    with pytest.raises(ValueError):
        cz_decompose([f], 2, -1.0)


def test_companion_offsets():
    assert companion_offsets(0) == (0,)
    assert companion_offsets(5) == (0, 1, 2, 3, 5)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3, 4, 7, 16, -5]), st.floats(1.0, 20.0))
def test_cz_invariants(seed, n, factor):
    rng = np.random.default_rng(seed)
    fs = []
    for _ in range(2):
        vals = np.zeros(128)
        idx = rng.integers(0, 128, size=6)
        vals[idx] = rng.exponential(size=6)
        vals += 0.05 * np.abs(rng.normal(size=128))
        fs.append(grid(vals))
    F = np.sqrt(sum(g.samples**2 for g in fs))
    cz = cz_decompose(fs, n, factor * F.mean())
    assert cz.all_hold, {k: v for k, v in cz.checks.items() if not v}


def test_vector_inequality_single_function(rng):
    f = grid(rng.normal(size=256))
    for p in (1.5, 2.0, 4.0):
        assert fefferman_stein_ratio([f], 6, p) == pytest.approx(maximal_report(f, 6, ps=(p,)).norms[p])
    with pytest.raises(ValueError):
        fefferman_stein_ratio([f], 6, 1.0)


def test_opnorm_estimator_on_known_operators():
    template = grid(np.zeros(128))
    assert estimate_opnorm(lambda g: g.samples, 2.0, 6, 0, template) == pytest.approx(1.0)
    assert estimate_opnorm(lambda g: 3 * g.samples, 2.0, 6, 0, template) == pytest.approx(3.0)
    assert estimate_opnorm(lambda g: np.abs(g.samples), 1.5, 6, 0, template) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        estimate_opnorm(lambda g: g.samples, 2.0, 0, 0, template)
