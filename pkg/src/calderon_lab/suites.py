"""Seeded experiment suites shared by the acceptance tests, the harness and the calibration script.

Each suite is deterministic given its seed.  Frozen constants in
``constants.py`` are the maxima these suites produced at calibration time.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .dyadic import GridFunction1D
from .model import (calibrate_constant, exceptional_sets, model_form, prepare, random_inputs as model_inputs,
                    random_set, random_system, rectangles_inside, shift_weight, stopping_time_decompose)
from .shifted import (estimate_opnorm, fefferman_stein_ratio, log_bracket, random_inputs, shifted_maximal,
                      weak_type_ratio)

GROWTH_SHIFTS = (4, 16, 64, 256, 1024)
FS_SHIFTS = (4, 16, 64, 256)
FS_EXPONENTS = (1.5, 2.0, 4.0)
WEAK_SHIFTS = (4, 16, 64)
STOPPING_TAILS = ((0, 0), (1, 0), (0, 1), (1, 1))


def growth_grid(n: int) -> GridFunction1D:
    """Unit-spacing torus long enough that every shifted block stays inside it."""
    size = max(1 << 12, 1 << int(math.ceil(math.log2(max(n, 1) ** 2))))
    return GridFunction1D(np.zeros(size), float(size))


def maximal_norm_growth(ns=GROWTH_SHIFTS, trials: int = 200, seed: int = 0) -> list[dict]:
    """Estimated ``||M_n||_{2->2}`` and its ratio to ``log<n>``."""
    rows = []
    for n in ns:
        grid = growth_grid(n)
        est = estimate_opnorm(lambda g, n=n: shifted_maximal(g, n), 2.0, trials, seed + n, grid,
                              max_log_len=int(math.log2(n)) + 2)
        rows.append({"n": n, "grid": grid.n, "estimate": est, "ratio": est / log_bracket(n)})
    return rows


def fefferman_stein_suite(ns=FS_SHIFTS, ps=FS_EXPONENTS, trials: int = 4, components: int = 3,
                          seed: int = 0) -> list[dict]:
    """``||(sum |M_n f_j|^2)^(1/2)||_p / ||F||_p / log^2<n>`` over seeded vector inputs."""
    rows = []
    kinds = ("noise", "spikes", "comb")
    for n in ns:
        grid = growth_grid(n)
        for p in ps:
            rng = np.random.default_rng([seed, n, int(10 * p)])
            for t in range(trials):
                fs = [grid.with_samples(random_inputs(rng, grid, kinds[(t + j) % 3], int(math.log2(n)) + 2))
                      for j in range(components)]
                r = fefferman_stein_ratio(fs, n, p)
                rows.append({"n": n, "p": p, "trial": t, "ratio": r, "scaled": r / log_bracket(n) ** 2})
    return rows


def weak_type_suite(ns=WEAK_SHIFTS, trials: int = 20, seed: int = 0, size: int = 1024) -> list[dict]:
    """``alpha int_{M_n f > alpha} |w| / int |f| curly_M_n w`` on seeded inputs and weights."""
    grid = GridFunction1D(np.zeros(size), float(size))
    rng = np.random.default_rng(seed)
    kinds = ("noise", "spikes", "comb")
    rows = []
    for t in range(trials):
        n = ns[t % len(ns)]
        f = grid.with_samples(random_inputs(rng, grid, kinds[t % 3], int(math.log2(n)) + 2))
        w = grid.with_samples(np.abs(random_inputs(rng, grid, kinds[(t + 1) % 3], int(math.log2(n)) + 2)))
        mf = shifted_maximal(f, n).samples
        alpha = float(np.quantile(mf[mf > 0], rng.uniform(0.5, 0.95)))
        try:
            r = weak_type_ratio(f, w, n, alpha)
        except ValueError:
            continue
        rows.append({"trial": t, "n": n, "alpha": alpha, "ratio": r})
    return rows


def model_form_suite(systems: int = 20, n_rect: int = 50, seed: int = 0) -> list[dict]:
    """Absolute model form over ``prod log^2`` shift weights on normalized inputs."""
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(systems):
        l = 2 + t % 2
        system = random_system(rng, l, n_rect, max_shift=64)
        fs = model_inputs(rng, system)
        E = system.template.with_samples(random_set(rng, system).astype(float))
        form = model_form(system, fs, E)
        rows.append({"system": t, "l": l, "form": form, "scaled": form / shift_weight(system)})
    return rows


def stopping_suite(systems: int = 20, n_rect: int = 150, planted: int = 50, seed: int = 0, ks=range(-3, 4)):
    """Seeded systems; for ``k = (0, 0)`` rectangles inside ``Omega~`` are planted so Part II is exercised."""
    rng = np.random.default_rng(seed)
    out = []
    for t in range(systems):
        l = 2 + t % 2
        k = STOPPING_TAILS[t % len(STOPPING_TAILS)]
        system = random_system(rng, l, n_rect)
        fs = model_inputs(rng, system)
        E = random_set(rng, system)
        setup = prepare(system, fs, E, ks)
        C = calibrate_constant(setup)
        if k == (0, 0) and planted:
            inside = [R for R in rectangles_inside(system, exceptional_sets(setup, C, k)["omega_tilde"])
                      if R not in system.rectangles][:planted]
            system = dataclasses.replace(system, rectangles=system.rectangles + tuple(inside))
            setup = dataclasses.replace(setup, system=system)
        cert = stopping_time_decompose(system, fs, E, k, ks=ks, C=C, setup=setup)
        out.append((system, cert))
    return out


def class_ratio(cert) -> float:
    """Largest ``|Omega_{R_s}| / min_j B_j`` over the classes of one certificate."""
    return max((c["lhs"] / c["min_bound"] for c in cert.class_bounds), default=0.0)


# -- commutator suites ----------------------------------------------------

def band_limited_1d(rng: np.random.Generator, n: int, period: float = 32.0, band: int = 4,
                    scale: float = 1.0) -> GridFunction1D:
    """Real trigonometric polynomial with modes ``|m| <= band`` and decaying random coefficients."""
    c = np.zeros(n, complex)
    m = np.arange(1, band + 1)
    c[m] = (rng.normal(size=band) + 1j * rng.normal(size=band)) / m**2
    c[-m] = np.conj(c[m])
    c[0] = rng.normal()
    g = GridFunction1D.from_coefficients(c, period, real=True)
    return g.with_samples(scale * g.samples)


def band_limited_2d(rng: np.random.Generator, n: int, period: float = 32.0, band: int = 4,
                    scale: float = 1.0):
    from .dyadic import GridFunction2D
    c = np.zeros((n, n), complex)
    m = np.arange(-band, band + 1)
    w = 1.0 / (1.0 + np.add.outer(m**2, m**2))
    c[np.ix_(m % n, m % n)] = (rng.normal(size=w.shape) + 1j * rng.normal(size=w.shape)) * w
    g = GridFunction2D.from_coefficients(c, (period, period), real=True)
    return g.with_samples(scale * g.samples)


def relative_l2(a, b) -> float:
    a = np.asarray(getattr(a, "samples", a))
    b = np.asarray(getattr(b, "samples", b))
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _commutator_inputs(seed: int, n_par: int, size: int, linear: float):
    from .commutators import Potential1D, Potential2D
    rng = np.random.default_rng(seed)
    if n_par == 1:
        return band_limited_1d(rng, size), Potential1D(band_limited_1d(rng, size, scale=0.5), linear)
    return band_limited_2d(rng, size), Potential2D(band_limited_2d(rng, size, scale=0.5), linear)


def route_discrepancy(n_par: int, d: int, size: int, seed: int = 0, linear: float = 0.7,
                      kappa: complex | None = None, budget: float | None = None) -> dict:
    """Relative ``L^2`` gap between the time route and ``kappa^n`` times the frequency route."""
    from .commutators import DEFAULT_BUDGET, KAPPA, CommutatorSpec, calibrate_kappa, commutator_freq, commutator_time
    kappa = KAPPA if kappa is None else kappa
    budget = DEFAULT_BUDGET if budget is None else budget
    f, A = _commutator_inputs(seed, n_par, size, linear)
    spec = CommutatorSpec(n_par, d)
    time_out = commutator_time(f, A, spec)
    a = A.derivative() if n_par == 1 else A.mixed_derivative()
    freq_out = commutator_freq(f, a, spec, budget=budget)
    fit = calibrate_kappa(time_out, freq_out, n_par)
    return {"n": n_par, "d": d, "grid": size, "seed": seed,
            "discrepancy": relative_l2(time_out, kappa**n_par * freq_out.samples),
            "kappa_fit": fit}


def tensor_residual(d: int, size: int = 32, seed: int = 0) -> float:
    """``C_{2,d,A1 (x) A2} (f1 (x) f2)`` against the product of one-parameter outputs."""
    from .commutators import CommutatorSpec, Potential1D, Potential2D, commutator_time
    from .dyadic import GridFunction2D
    rng = np.random.default_rng(seed)
    f1, f2 = band_limited_1d(rng, size), band_limited_1d(rng, size)
    a1, a2 = Potential1D(band_limited_1d(rng, size, scale=0.5)), Potential1D(band_limited_1d(rng, size, scale=0.5))
    two = commutator_time(GridFunction2D.from_tensor(f1, f2), Potential2D.from_tensor(a1, a2), CommutatorSpec(2, d))
    one = np.outer(commutator_time(f1, a1, CommutatorSpec(1, d)).samples,
                   commutator_time(f2, a2, CommutatorSpec(1, d)).samples)
    return relative_l2(two, one)


def double_commutator_gap(seed: int, size: int = 32, linear: float = 0.7) -> dict:
    """``commutator_time (n = 2, d = 1)`` against ``-kappa^2`` times ``[|D2|, [|D1|, A]] f``."""
    from .commutators import KAPPA, CommutatorSpec, calibrate_kappa, commutator_time, double_commutator_freq
    f, A = _commutator_inputs(seed, 2, size, linear)
    time_out = commutator_time(f, A, CommutatorSpec(2, 1))
    dbl = double_commutator_freq(f, A)
    factor = -KAPPA**2
    fit = calibrate_kappa(time_out, dbl, 1)
    return {"seed": seed, "discrepancy": relative_l2(time_out, factor * dbl.samples), "factor_fit": fit}


def commutator_norms(ds=(0, 1, 2, 3), size: int = 64, trials: int = 20, seed: int = 0, baseline: bool = False):
    """``C(d)``: estimated ``L^2`` norm of ``C_{1,d,A}`` for a unit-size derivative ``a`` (or ``a = 1``)."""
    from .commutators import CommutatorSpec, Potential1D, commutator_time, potential_sup
    rng = np.random.default_rng(seed)
    if baseline:
        A = Potential1D(GridFunction1D(np.zeros(size), 32.0), 1.0)
    else:
        A = Potential1D(band_limited_1d(rng, size))
        A = A.scaled(1.0 / potential_sup(A))
    template = GridFunction1D(np.zeros(size), 32.0)
    return [estimate_opnorm(lambda g, d=d: commutator_time(g, A, CommutatorSpec(1, d)), 2.0, trials, seed + d,
                            template, kinds=("noise",)) for d in ds]


def cauchy_partial_sums(D_maxes=(4, 6, 8), sup_a: float = 0.3, size: int = 64, seed: int = 0, norms=None):
    """Partial sums of the ``F(z) = 1/(1 + iz)`` series for a potential with ``||a||_inf = sup_a``."""
    from .commutators import Potential1D, analytic_series, cauchy_spec, extrapolate_norms, potential_sup
    rng = np.random.default_rng(seed + 1)
    f = band_limited_1d(rng, size)
    A = Potential1D(band_limited_1d(rng, size))
    A = A.scaled(sup_a / potential_sup(A))
    fn = extrapolate_norms(norms) if norms is not None else None
    return {D: analytic_series(f, A, cauchy_spec(1), D, norms=fn) for D in D_maxes}
