import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from calderon_lab.dyadic import DyadicInterval, GridFunction1D
from calderon_lab.littlewood_paley import (COMPACT, NONCOMPACT, BumpFamily, BumpProfile, adapted_bump,
                                           bump_tail_split, decay_constant, dilate_cells, lp_partition_residual,
                                           make_mother_pair, resolvable_scales, smooth_average, smooth_step)

GAUSS = BumpProfile(NONCOMPACT)
COMPACT_PROFILE = BumpProfile(COMPACT)


def test_smooth_step_limits():
    t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    assert np.array_equal(smooth_step(t)[[0, 1, 3, 4]], [0, 0, 1, 1])
    assert smooth_step(np.array([0.5]))[0] == pytest.approx(0.5)


def test_psi_has_zero_integral_by_quadrature():
    val, _ = integrate.quad(lambda x: float(GAUSS.psi(x)), -np.inf, np.inf, epsabs=1e-14)
    assert abs(val) <= 1e-10
    prof, table = make_mother_pair(NONCOMPACT)
    assert abs(table.integral()) <= 1e-10
    _, ctable = make_mother_pair(COMPACT)
    assert abs(ctable.integral()) <= 1e-10


def test_noncompact_mother_properties():
    x = np.linspace(-3, 3, 601)
    assert np.all(GAUSS.phi(x) > 0) and np.allclose(GAUSS.phi(x), GAUSS.phi(-x))
    val, _ = integrate.quad(lambda t: float(GAUSS.phi(t)), -np.inf, np.inf)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_compact_mother_support():
    assert COMPACT_PROFILE.phi_hat(np.array([0.0]))[0] == 1.0
    assert np.all(COMPACT_PROFILE.phi_hat(np.array([1.0, 1.5, -1.0, -3.0])) == 0.0)
    assert np.all(COMPACT_PROFILE.phi_hat(np.linspace(-0.5, 0.5, 11)) == 1.0)


@pytest.mark.parametrize("k0", [-2, 0, 2])
def test_telescoping_sum_of_psi(k0):
    x = np.linspace(-4, 4, 801)
    total = sum(GAUSS.dilate(k, x, psi_type=True) for k in range(k0 - 29, k0 + 1))
    assert np.max(np.abs(total - GAUSS.dilate(k0, x))) <= 1e-8


@pytest.mark.parametrize("k", range(-3, 4))
def test_dilates_have_unit_mass(k):
    val, _ = integrate.quad(lambda t: float(GAUSS.dilate(k, t)), -np.inf, np.inf, epsabs=1e-13, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_partition_residual():
    xi = np.concatenate([np.logspace(-5, 5, 2001, base=2.0), -np.logspace(-5, 5, 2001, base=2.0)])
    assert lp_partition_residual(GAUSS, 20, xi) <= 1e-6
    res = [lp_partition_residual(GAUSS, K, xi) for K in range(2, 22, 2)]
    assert all(b <= a + 1e-15 for a, b in zip(res, res[1:]))
    with pytest.raises(ValueError):
        lp_partition_residual(GAUSS, 5, np.array([0.0, 1.0]))


def test_psi_hat_factors_through_xi_squared():
    for prof in (GAUSS, COMPACT_PROFILE):
        xi = np.concatenate([-np.logspace(-6, 0, 200), np.logspace(-6, 0, 200)])
        ratio = prof.psi_hat(xi) / xi**2
        assert np.all(np.isfinite(ratio)) and np.max(np.abs(ratio)) < 50


@given(st.integers(0, 2**31 - 1), st.integers(-5, 1))
def test_perfect_estimate(seed, k):
    rng = np.random.default_rng(seed)
    g = GridFunction1D(rng.normal(size=512), 32.0)
    lo, hi = resolvable_scales(g)
    k = min(max(k, lo), hi)
    assert np.max(np.abs(smooth_average(g, k))) <= np.max(np.abs(g.samples)) * (1 + 1e-9)


def test_psi_family_members_have_zero_mean():
    g = GridFunction1D(np.zeros(1024), 32.0)
    for shift in (0.0, 3.0):
        fam = BumpFamily(GAUSS, psi_type=True, shift=shift)
        for k in range(-3, 3):
            assert abs(fam.sample(k, g).integral()) <= 1e-10


def test_family_lq_normalization():
    g = GridFunction1D(np.zeros(4096), 64.0)
    for q in (1.0, 2.0):
        fam = BumpFamily(GAUSS, q=q)
        for k in range(-1, 3):
            member = fam.sample(k, g)
            target = 2.0 ** (k * (1 / q - 1)) * 2.0 ** (k * (1 - 1 / q)) * GAUSS.lq_norm(q)
            assert member.norm(q) == pytest.approx(target, rel=1e-8)


def test_adapted_bump_normalization_and_mean():
    g = GridFunction1D(np.zeros(2048), 32.0)
    for I in (DyadicInterval(0, 0), DyadicInterval(2, -3), DyadicInterval(-1, 1)):
        b = adapted_bump(I, BumpFamily(GAUSS), 2.0, g)
        assert b.norm(2) == pytest.approx(1.0, abs=1e-8)
        p = adapted_bump(I, BumpFamily(GAUSS, psi_type=True, shift=2.0), 2.0, g)
        assert abs(p.integral()) <= 1e-10


def test_adapted_bump_dilation_covariance():
    g = GridFunction1D(np.zeros(1024), 32.0)
    fine = adapted_bump(DyadicInterval(2, 0), BumpFamily(GAUSS), 2.0, g).samples
    coarse = adapted_bump(DyadicInterval(1, 0), BumpFamily(GAUSS), 2.0, g).samples
    i = np.arange(256, 768)
    # x_i = x0 + i h maps to 2 x_i = x_(2i - N/2)
    assert np.max(np.abs(fine[i] - np.sqrt(2.0) * coarse[(2 * i - 512) % 1024])) <= 1e-12


def test_adapted_bump_requires_alignment():
    from calderon_lab.dyadic import AlignmentError
    with pytest.raises(AlignmentError):
        adapted_bump(DyadicInterval(8, 0), BumpFamily(GAUSS), 2.0, GridFunction1D(np.zeros(64), 32.0))


def test_decay_constant_is_scale_invariant():
    g = GridFunction1D(np.zeros(8192), 32.0)
    consts = []
    for k in range(0, 5):
        I = DyadicInterval(k, 0)
        b = adapted_bump(I, BumpFamily(GAUSS), 2.0, g)
        consts.append(decay_constant(b, I, 2.0, 5.0, 2))
    assert np.all(np.isfinite(consts))
    assert max(consts) / min(consts) <= 1.1


def _psi_bump(I, g):
    return adapted_bump(I, BumpFamily(GAUSS, psi_type=True), 2.0, g)


@pytest.mark.parametrize("I", [DyadicInterval(0, 0), DyadicInterval(2, 5), DyadicInterval(3, -9)])
def test_tail_split(I):
    g = GridFunction1D(np.zeros(1024), 32.0)
    for phi in (adapted_bump(I, BumpFamily(GAUSS), 2.0, g), _psi_bump(I, g)):
        split = bump_tail_split(phi, I, kappa=10.0, K=12)
        assert np.max(np.abs(split.resum() - phi.samples)) <= 1e-8
        for k, piece in enumerate(split.pieces):
            outside = np.ones(g.n, bool)
            outside[dilate_cells(I, 2**k, g)] = False
            assert np.all(piece.samples[outside] == 0.0)
    split = bump_tail_split(_psi_bump(I, g), I, kappa=10.0, K=12)
    for piece in split.pieces:
        assert abs(np.sum(piece.samples)) * g.spacing <= 1e-10 * max(1.0, np.max(np.abs(piece.samples)))


def test_dilate_cells_centered():
    g = GridFunction1D(np.zeros(64), 32.0)
    I = DyadicInterval(0, 2)  # [2, 3)
    cells = dilate_cells(I, 4, g)  # [0.5, 4.5)
    inside = np.flatnonzero((g.x >= 0.5) & (g.x + g.spacing <= 4.5))
    assert np.array_equal(np.sort(cells), inside)
    assert len(dilate_cells(I, 64, g)) == 64
