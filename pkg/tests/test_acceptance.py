"""Acceptance criteria at their stated tolerances and runtime limits, one summary line each."""
import math
import time

import pytest
from scipy import integrate

from calderon_lab.commutators import KAPPA
from calderon_lab.harness import ExperimentConfig, run_experiment
from calderon_lab.littlewood_paley import BumpProfile
from calderon_lab.suites import double_commutator_gap, route_discrepancy

pytestmark = pytest.mark.slow


def criterion(report, name, limit_s, body):
    """Run ``body() -> (checks, detail)``; pass when every check holds inside the runtime limit."""
    start = time.perf_counter()
    try:
        checks, detail = body()
    except Exception as exc:
        report(name, False, f"raised {type(exc).__name__}: {exc}")
        raise
    elapsed = time.perf_counter() - start
    failed = [c for c in checks if not c["pass"]]
    ok = not failed and elapsed < limit_s
    report(name, ok, f"{detail}; {elapsed:.1f} s (limit {limit_s} s)")
    assert not failed, failed
    assert elapsed < limit_s


def flag(name, value, threshold, ok):
    return {"name": name, "value": float(value), "threshold": float(threshold), "pass": bool(ok)}


def experiment(exp, **kw):
    return run_experiment(ExperimentConfig(exp, **kw), write=False)


def summary(checks):
    return ", ".join(f"{c['name']}={c['value']:.3g}" for c in checks)


def test_1_littlewood_paley(report):
    def body():
        checks = list(experiment("lp-check").checks)
        # the Gaussian profile decays fast enough for quadrature on the line
        val, _ = integrate.quad(BumpProfile().psi, -math.inf, math.inf, epsabs=1e-13, limit=400)
        checks.append(flag("psi_quad_noncompact", abs(val), 1e-10, abs(val) <= 1e-10))
        # the compact profile has slowly decaying tails; use its transform at zero
        val = float(BumpProfile("compact-frequency").psi_hat(0.0))
        checks.append(flag("psi_hat_zero_compact", abs(val), 1e-10, abs(val) <= 1e-10))
        return checks, summary(checks)
    criterion(report, "1 LP identity", 5, body)


def test_2_symbols(report):
    def body():
        checks = experiment("symbol", trials=1000).checks
        return checks, summary(checks)
    criterion(report, "2 symbol correctness", 60, body)


def test_3_two_routes(report):
    def body():
        checks = list(experiment("commutator-agree").checks)
        for n_par in (1, 2):
            fit = route_discrepancy(n_par, 1, 32)["kappa_fit"]
            gap = abs(fit**n_par - KAPPA**n_par) / abs(KAPPA**n_par)
            checks.append(flag(f"kappa_fit_n{n_par}", gap, 5e-2, gap <= 5e-2))
        return checks, summary(checks)
    criterion(report, "3 two-path commutator agreement", 120, body)


def test_4_tensor(report):
    def body():
        checks = experiment("tensor-check").checks
        return checks, summary(checks)
    criterion(report, "4 tensor identity", 30, body)


def test_5_shifted_growth(report):
    def body():
        growth = experiment("maximal-norm", trials=200)
        fs = experiment("fefferman-stein")
        checks = list(growth.checks) + list(fs.checks)
        checks.append(flag("trials_per_shift", 200, 200, len(growth.rows) == 5))
        return checks, summary(checks)
    criterion(report, "5 shifted maximal growth", 300, body)


def test_6_cz_invariants(report):
    def body():
        m = experiment("cz-decompose", trials=50)
        checks = list(m.checks) + [flag("suites", len(m.rows), 50, len(m.rows) == 50)]
        return checks, summary(checks)
    criterion(report, "6 CZ decomposition invariants", 60, body)


def test_7_stopping_time(report):
    def body():
        m = experiment("stopping-time", trials=20)
        rows = m.rows
        size_ok = all(r["rectangles"] <= 200 and r["l"] in (2, 3) for r in rows)
        part_two = sum(r["part_two"] for r in rows)
        checks = list(m.checks) + [flag("systems", len(rows), 20, len(rows) == 20 and size_ok),
                                   flag("part_two_rectangles", part_two, 1, part_two >= 1)]
        for name in ("class_partition", "part_two_vanishes", "majority_density", "retained_set"):
            ok = all(r[f"check_{name}"] for r in rows)
            checks.append(flag(name, float(ok), 1.0, ok))
        return checks, summary(checks)
    criterion(report, "7 stopping-time certificate", 300, body)


def test_8_polynomial_in_d(report):
    def body():
        checks = experiment("norm-vs-d").checks
        return checks, summary(checks)
    criterion(report, "8 polynomial-in-d sanity", 300, body)


def test_9_double_commutator(report):
    def body():
        gaps = [double_commutator_gap(seed)["discrepancy"] for seed in range(10)]
        worst = max(gaps)
        return [flag("double_commutator", worst, 5e-2, worst <= 5e-2)], f"worst discrepancy {worst:.3g}"
    criterion(report, "9 double-commutator identity", 120, body)
