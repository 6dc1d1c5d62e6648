"""Command-line experiments: configuration, seeded runs, CSV rows and a JSON manifest.

Every experiment returns result rows with a fixed column list plus named
checks.  Exit codes: 0 when every check passes, 2 when one fails, 64 on a
usage error (unknown id, malformed flag or config file, cost ceiling).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import __version__, constants, suites
from .commutators import BudgetExceeded
from .dyadic import GridFunction1D
from .littlewood_paley import BumpFamily, BumpProfile, lp_partition_residual, resolvable_scales, sample_hat
from .shifted import cz_decompose, random_inputs
from .symbols import MONTE_CARLO, SymbolQuery, m1d, m1d_exact, m1d_monte_carlo

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 2, 64
DEFAULT_CEILING = 1e11


class UsageError(ValueError):
    """Bad experiment id, flag, config file, or a run refused by the cost ceiling."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Run parameters; ``None`` ranges fall back to the experiment's defaults."""

    experiment: str
    grid: tuple[int, ...] | None = None
    d: tuple[int, ...] | None = None
    shifts: tuple[int, ...] | None = None
    p: tuple[float, ...] | None = None
    trials: int | None = None
    seed: int = 0
    out: str = "results"
    cost_ceiling: float = DEFAULT_CEILING
    plot: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}; valid ids: {', '.join(EXPERIMENTS)}")
        for name in ("grid", "d", "shifts", "p"):
            value = getattr(self, name)
            if value is not None and len(value) == 0:
                raise UsageError(f"--{name} must not be empty")
        if self.trials is not None and self.trials < 1:
            raise UsageError("--trials must be at least 1")
        if self.grid is not None and any(g < 2 or g & (g - 1) for g in self.grid):
            raise UsageError("grid sizes must be powers of two")

    def pick(self, name: str, default):
        value = getattr(self, name)
        return default if value is None else value

    def snapshot(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}


MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["experiment", "config", "version", "wall_time", "columns", "rows", "checks", "calibration", "passed"],
    "properties": {
        "experiment": {"type": "string"},
        "config": {"type": "object"},
        "version": {"type": "string"},
        "wall_time": {"type": "number", "minimum": 0},
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "object"}},
        "checks": {"type": "array", "items": {
            "type": "object", "required": ["name", "value", "threshold", "pass"],
            "properties": {"name": {"type": "string"}, "pass": {"type": "boolean"}}}},
        "calibration": {"type": "object", "required": ["kappa"]},
        "passed": {"type": "boolean"},
    },
}


@dataclass
class RunManifest:
    experiment: str
    config: dict
    version: str
    wall_time: float
    columns: list
    rows: list
    checks: list
    calibration: dict
    passed: bool = field(default=False)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True, default=_plain)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        jsonschema.validate(data, MANIFEST_SCHEMA)
        return cls(**data)

    def csv_text(self) -> str:
        return rows_to_csv(self.columns, self.rows)


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in columns])
    return buf.getvalue()


def check(name: str, value: float, threshold: float, ok: bool) -> dict:
    return {"name": name, "value": float(value), "threshold": float(threshold), "pass": bool(ok)}


def _guard(estimate: float, cfg: ExperimentConfig):
    if estimate > cfg.cost_ceiling:
        raise BudgetExceeded(estimate, cfg.cost_ceiling)


# -- experiments ----------------------------------------------------------

def run_lp_check(cfg):
    rows, checks = [], []
    xi = np.concatenate([s * np.logspace(-5, 5, 4001, base=2.0) for s in (1, -1)])
    res = lp_partition_residual(BumpProfile(), 20, xi)
    rows.append({"check": "partition_residual", "trial": 0, "value": res, "threshold": 1e-6, "pass": res <= 1e-6})
    fine = GridFunction1D(np.zeros(1 << 14), 256.0)
    for kind in ("noncompact", "compact-frequency"):
        prof = BumpProfile(kind)
        mean = abs(sample_hat(prof.psi_hat, fine, real=True).integral())
        rows.append({"check": f"psi_mean_{kind}", "trial": 0, "value": mean, "threshold": 1e-10,
                     "pass": mean <= 1e-10})
    grid = GridFunction1D(np.zeros(cfg.pick("grid", (1024,))[0]), 64.0)
    rng = np.random.default_rng(cfg.seed)
    fam = BumpFamily(BumpProfile())
    k_lo, k_hi = resolvable_scales(grid)
    for t in range(cfg.pick("trials", 100)):
        f = grid.with_samples(random_inputs(rng, grid, ("noise", "spikes", "comb")[t % 3]))
        k = int(rng.integers(k_lo, k_hi + 1))
        ratio = float(np.max(np.abs(fam.convolve(f, k))) / np.max(np.abs(f.samples)))
        rows.append({"check": "smooth_average_sup", "trial": t, "value": ratio, "threshold": 1.0,
                     "pass": ratio <= 1.0 + 1e-12})
    for name in ("partition_residual", "psi_mean_noncompact", "psi_mean_compact-frequency", "smooth_average_sup"):
        sel = [r for r in rows if r["check"] == name]
        checks.append(check(name, max(r["value"] for r in sel), sel[0]["threshold"], all(r["pass"] for r in sel)))
    return ["check", "trial", "value", "threshold", "pass"], rows, checks


def run_symbol(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    n_exact = cfg.pick("trials", 1000)
    worst = 0.0
    sym_ok = True
    for t in range(n_exact):
        xi, x1 = rng.uniform(-4, 4, size=2)
        val = m1d(SymbolQuery(xi, (x1,)))
        oracle = (abs(xi + x1) - abs(xi)) / x1
        worst = max(worst, abs(val - oracle))
        sym_ok &= abs(val) <= 1 and m1d_exact(-xi, (-x1,)) == -val
        rows.append({"trial": t, "d": 1, "xi": xi, "xis": repr(float(x1)), "method": "exact", "value": val,
                     "oracle": oracle, "error": abs(val - oracle), "stderr": 0.0})
    zmax = 0.0
    for t in range(max(1, n_exact // 10)):
        d = cfg.pick("d", (2, 3))[t % len(cfg.pick("d", (2, 3)))]
        xi = float(rng.uniform(-2, 2))
        xis = tuple(float(v) for v in rng.uniform(-2, 2, size=d))
        exact = m1d_exact(xi, xis)
        mc, se = m1d_monte_carlo(xi, xis, 1_000_000, seed=cfg.seed + t)
        z = abs(mc - exact) / se if se > 0 else (0.0 if mc == exact else math.inf)
        zmax = max(zmax, z)
        sym_ok &= abs(exact) <= 1 and m1d_exact(-xi, tuple(-v for v in xis)) == -exact
        rows.append({"trial": t, "d": d, "xi": xi, "xis": ";".join(repr(v) for v in xis), "method": MONTE_CARLO,
                     "value": mc, "oracle": exact, "error": abs(mc - exact), "stderr": se})
    checks = [check("closed_form_d1", worst, 1e-12, worst <= 1e-12),
              check("monte_carlo_zscore", zmax, 4.0, zmax <= 4.0),
              check("bound_and_odd_symmetry", float(sym_ok), 1.0, sym_ok)]
    return ["trial", "d", "xi", "xis", "method", "value", "oracle", "error", "stderr"], rows, checks


def run_commutator_agree(cfg):
    base = cfg.pick("grid", (32,))[0]
    ds = cfg.pick("d", (1, 2))
    rows, checks = [], []
    for n_par in (1, 2):
        for d in ds:
            coarse = suites.route_discrepancy(n_par, d, base, cfg.seed, budget=cfg.cost_ceiling)
            fine = suites.route_discrepancy(n_par, d, 2 * base, cfg.seed, budget=cfg.cost_ceiling)
            for r in (coarse, fine):
                rows.append({"n": n_par, "d": d, "grid": r["grid"], "discrepancy": r["discrepancy"],
                             "kappa_fit_re": r["kappa_fit"].real, "kappa_fit_im": r["kappa_fit"].imag})
            checks.append(check(f"agree_n{n_par}_d{d}", coarse["discrepancy"], 5e-2, coarse["discrepancy"] <= 5e-2))
            checks.append(check(f"refines_n{n_par}_d{d}", fine["discrepancy"], coarse["discrepancy"],
                                fine["discrepancy"] < coarse["discrepancy"]))
    return ["n", "d", "grid", "discrepancy", "kappa_fit_re", "kappa_fit_im"], rows, checks


def run_tensor_check(cfg):
    size = cfg.pick("grid", (32,))[0]
    rows = [{"d": d, "grid": size, "residual": suites.tensor_residual(d, size, cfg.seed)} for d in cfg.pick("d", (1, 2))]
    worst = max(r["residual"] for r in rows)
    return ["d", "grid", "residual"], rows, [check("tensor_residual", worst, 1e-8, worst <= 1e-8)]


def run_maximal_norm(cfg):
    ns = cfg.pick("shifts", suites.GROWTH_SHIFTS)
    trials = cfg.pick("trials", 200)
    _guard(sum(trials * suites.growth_grid(n).n * math.log2(suites.growth_grid(n).n) for n in ns), cfg)
    rows = suites.maximal_norm_growth(ns, trials, cfg.seed)
    ratios = [r["ratio"] for r in rows]
    spread = max(ratios) / min(ratios)
    return ["n", "grid", "estimate", "ratio"], rows, [check("ratio_spread", spread, 3.0, spread <= 3.0)]


def run_fefferman_stein(cfg):
    ns = cfg.pick("shifts", suites.FS_SHIFTS)
    ps = cfg.pick("p", suites.FS_EXPONENTS)
    rows = suites.fefferman_stein_suite(ns, ps, cfg.pick("trials", 4), seed=cfg.seed)
    checks = []
    for p in ps:
        worst = max(r["scaled"] for r in rows if r["p"] == p)
        frozen = constants.FEFFERMAN_STEIN.get(float(p))
        limit = math.inf if frozen is None else constants.REGRESSION_SLACK * frozen
        checks.append(check(f"log2_scaled_p{p}", worst, limit, worst <= limit))
    return ["n", "p", "trial", "ratio", "scaled"], rows, checks


def run_cz_decompose(cfg):
    rng = np.random.default_rng(cfg.seed)
    size = cfg.pick("grid", (1024,))[0]
    ns = cfg.pick("shifts", (1, 3, 4, 16, 64))
    grid = GridFunction1D(np.zeros(size), float(size))
    rows = []
    for t in range(cfg.pick("trials", 50)):
        n = ns[t % len(ns)]
        fs = [grid.with_samples(random_inputs(rng, grid, ("noise", "spikes", "comb")[(t + j) % 3]))
              for j in range(1 + t % 3)]
        F = np.sqrt(sum(f.samples**2 for f in fs))
        alpha = float(max(F.mean(), np.quantile(F, rng.uniform(0.6, 0.99)))) * (1 + 1e-9)
        cz = cz_decompose(fs, n, alpha)
        row = {"trial": t, "n": n, "alpha": alpha, "intervals": len(cz.intervals),
               "omega_measure": float(cz.omega.sum() * grid.spacing), "all_hold": cz.all_hold}
        row.update({f"check_{k}": v for k, v in cz.checks.items()})
        rows.append(row)
    names = sorted({k for r in rows for k in r if k.startswith("check_")})
    columns = ["trial", "n", "alpha", "intervals", "omega_measure", "all_hold"] + names
    ok = all(r["all_hold"] for r in rows)
    return columns, rows, [check("cz_invariants", sum(not r["all_hold"] for r in rows), 0, ok)]


def run_model_op(cfg):
    rows = suites.model_form_suite(cfg.pick("trials", 20), seed=cfg.seed)
    worst = max(r["scaled"] for r in rows)
    limit = constants.REGRESSION_SLACK * constants.MODEL_FORM
    return ["system", "l", "form", "scaled"], rows, [check("form_over_log_weights", worst, limit, worst <= limit)]


def run_stopping_time(cfg):
    out = suites.stopping_suite(cfg.pick("trials", 20), seed=cfg.seed)
    rows = []
    for t, (system, cert) in enumerate(out):
        names = {c["name"]: c["pass"] for c in cert.checks}
        rows.append({"system": t, "l": system.l, "k1": cert.k[0], "k2": cert.k[1], "C": cert.C, "N": cert.N,
                     "rectangles": len(system.rectangles), "part_two": cert.parts.count("II"),
                     "classes": len(cert.classes), "class_ratio": suites.class_ratio(cert),
                     "verified": cert.verified, **{f"check_{k}": v for k, v in sorted(names.items())}})
    limit = constants.REGRESSION_SLACK * constants.CLASS_MEASURE
    worst = max(r["class_ratio"] for r in rows)
    checks = [check("certificates_verify", sum(not r["verified"] for r in rows), 0, all(r["verified"] for r in rows)),
              check("class_measure", worst, limit, worst <= limit)]
    names = sorted({k for r in rows for k in r if k.startswith("check_")})
    columns = ["system", "l", "k1", "k2", "C", "N", "rectangles", "part_two", "classes", "class_ratio",
               "verified"] + names
    return columns, rows, checks


def cubic_slope(ds, values) -> float:
    """Least-squares slope of ``log C(d)`` against ``log(1 + d)``."""
    return float(np.polyfit(np.log1p(np.asarray(ds, float)), np.log(values), 1)[0])


def run_norm_vs_d(cfg):
    ds = tuple(range(0, max(cfg.pick("d", (1, 2, 3))) + 1))
    trials = cfg.pick("trials", 20)
    measured = suites.commutator_norms(ds, trials=trials, seed=cfg.seed)
    baseline = suites.commutator_norms(ds, trials=max(1, trials // 4), seed=cfg.seed, baseline=True)
    rows = [{"row": "norm", "d": d, "c_hat": c, "baseline": b} for d, c, b in zip(ds, measured, baseline)]
    sums = suites.cauchy_partial_sums(seed=cfg.seed, norms=measured)
    keys = sorted(sums)
    for a, b in zip(keys, keys[1:] + keys[-1:]):
        if a == b:
            continue
        rows.append({"row": "series", "D_max": a, "next_D_max": b,
                     "relative_change": suites.relative_l2(sums[a].output, sums[b].output),
                     "tail_bound": sums[a].tail_bound})
    change = max((r["relative_change"] for r in rows if r["row"] == "series"), default=0.0)
    slope = cubic_slope(ds, measured)
    checks = [check("c_hat_finite", float(np.all(np.isfinite(measured))), 1.0, bool(np.all(np.isfinite(measured)))),
              check("growth_below_cubic", slope, 3.0, slope <= 3.0),
              check("series_converges", change, 1e-2, change < 1e-2)]
    return ["row", "d", "c_hat", "baseline", "D_max", "next_D_max", "relative_change", "tail_bound"], rows, checks


EXPERIMENTS: dict[str, Callable] = {
    "lp-check": run_lp_check,
    "symbol": run_symbol,
    "commutator-agree": run_commutator_agree,
    "tensor-check": run_tensor_check,
    "maximal-norm": run_maximal_norm,
    "fefferman-stein": run_fefferman_stein,
    "cz-decompose": run_cz_decompose,
    "model-op": run_model_op,
    "stopping-time": run_stopping_time,
    "norm-vs-d": run_norm_vs_d,
}

PLOTS = {"maximal-norm": ("n", "estimate"), "norm-vs-d": ("d", "c_hat")}


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunManifest:
    """Run one experiment; with ``write`` also emit ``<id>.csv``, ``<id>.manifest.json`` and the optional SVG."""
    start = time.perf_counter()
    try:
        columns, rows, checks = EXPERIMENTS[cfg.experiment](cfg)
    except BudgetExceeded as exc:
        raise UsageError(str(exc)) from exc
    manifest = RunManifest(cfg.experiment, cfg.snapshot(), __version__, time.perf_counter() - start, columns,
                           rows, checks, constants.snapshot(), all(c["pass"] for c in checks))
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.experiment}.csv").write_bytes(manifest.csv_text().encode("utf-8"))
        (out / f"{cfg.experiment}.manifest.json").write_text(manifest.to_json(), encoding="utf-8")
        if cfg.plot:
            write_plot(manifest, out / f"{cfg.experiment}.svg")
    return manifest


def write_plot(manifest: RunManifest, path: Path):
    if manifest.experiment not in PLOTS:
        raise UsageError(f"no plot defined for {manifest.experiment}; plots exist for {', '.join(PLOTS)}")
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise UsageError("--plot needs matplotlib (install the 'plot' extra)") from exc
    xk, yk = PLOTS[manifest.experiment]
    pts = [(r[xk], r[yk]) for r in manifest.rows if r.get(yk) is not None and r.get(xk) is not None]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs = [x + 1 if xk == "d" else x for x, _ in pts]
    ax.loglog(xs, [y for _, y in pts], "o-")
    ax.set_xlabel("1 + d" if xk == "d" else "shift n")
    ax.set_ylabel(yk)
    fig.tight_layout()
    plt.rcParams["svg.hashsalt"] = "calderon-lab"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# -- command line ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


CONVERTERS = {"grid": _ints, "d": _ints, "shifts": _ints, "p": _floats, "trials": int, "seed": int, "out": str,
              "cost_ceiling": float, "plot": lambda s: s.strip().lower() in ("1", "true", "yes", "on")}


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys match the long flags."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONVERTERS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        try:
            values[key] = CONVERTERS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{num}: bad value for {key}: {value!r}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="calderon-lab", description="Run a seeded experiment and write CSV plus a JSON manifest.")
    ap.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    ap.add_argument("--grid", type=_ints, help="grid sizes (powers of two)")
    ap.add_argument("--d", type=_ints, help="degrees d")
    ap.add_argument("--shifts", type=_ints, help="shift parameters n")
    ap.add_argument("--p", type=_floats, help="exponents p")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory (default: results)")
    ap.add_argument("--cost-ceiling", type=float, dest="cost_ceiling")
    ap.add_argument("--config", help="key = value file; flags win on conflict")
    ap.add_argument("--plot", action="store_const", const=True, help="also write an SVG plot")
    return ap


def config_from_args(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for key in CONVERTERS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    return ExperimentConfig(args.experiment, **values)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        manifest = run_experiment(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for c in manifest.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: {c['value']:.6g} (threshold {c['threshold']:.6g})")
    print(f"wrote {Path(cfg.out) / (cfg.experiment + '.csv')}")
    return EXIT_PASS if manifest.passed else EXIT_FAIL
