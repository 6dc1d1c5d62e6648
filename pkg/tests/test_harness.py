import json

import jsonschema
import pytest

from calderon_lab.harness import (EXIT_PASS, EXIT_USAGE, EXPERIMENTS, ExperimentConfig, RunManifest, UsageError,
                                  config_from_args, main, read_config_file, rows_to_csv, run_experiment)

EXPECTED_IDS = {"lp-check", "symbol", "commutator-agree", "tensor-check", "maximal-norm", "fefferman-stein",
                "cz-decompose", "model-op", "stopping-time", "norm-vs-d"}


def test_experiment_ids():
    assert set(EXPERIMENTS) == EXPECTED_IDS


def test_unknown_id_exits_with_usage_code(capsys):
    assert main(["no-such-run"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "lp-check" in err and "norm-vs-d" in err


@pytest.mark.parametrize("argv", [["symbol", "--trials", "0"], ["tensor-check", "--grid", "24"],
                                  ["symbol", "--grid", ""], ["symbol", "--bogus"]])
def test_bad_flags_exit_with_usage_code(argv):
    assert main(argv) == EXIT_USAGE


def test_rerun_is_byte_identical(tmp_path):
    argv = ["symbol", "--trials", "5", "--seed", "3"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == EXIT_PASS
    assert main(argv + ["--out", str(tmp_path / "b")]) == EXIT_PASS
    a = (tmp_path / "a" / "symbol.csv").read_bytes()
    assert a == (tmp_path / "b" / "symbol.csv").read_bytes()
    assert b"\r" not in a and a.endswith(b"\n")


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# seeded\ntrials = 7\nseed = 11  # inline\ngrid = 32, 64\ncost-ceiling = 5e9\n")
    values = read_config_file(str(cfg))
    assert values == {"trials": 7, "seed": 11, "grid": (32, 64), "cost_ceiling": 5e9}
    merged = config_from_args(["symbol", "--config", str(cfg), "--seed", "2"])
    assert (merged.trials, merged.seed, merged.grid, merged.cost_ceiling) == (7, 2, (32, 64), 5e9)


@pytest.mark.parametrize("text", ["trials 7\n", "colour = red\n", "trials = many\n"])
def test_bad_config_file(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    with pytest.raises(UsageError):
        read_config_file(str(cfg))
    with pytest.raises(UsageError):
        read_config_file(str(tmp_path / "missing.cfg"))


def test_manifest_roundtrip_and_schema(tmp_path):
    m = run_experiment(ExperimentConfig("symbol", trials=4, out=str(tmp_path)))
    text = (tmp_path / "symbol.manifest.json").read_text()
    back = RunManifest.from_json(text)
    assert back.rows == json.loads(m.to_json())["rows"]
    assert back.passed == m.passed and back.columns == m.columns
    data = json.loads(text)
    del data["checks"]
    with pytest.raises(jsonschema.ValidationError):
        RunManifest.from_json(json.dumps(data))


def test_csv_cells():
    text = rows_to_csv(["a", "b", "c"], [{"a": 0.1, "b": True, "c": 3}, {"a": 1e-20, "b": False}])
    assert text == "a,b,c\n0.1,true,3\n1e-20,false,\n"


def test_plot_output(tmp_path):
    assert main(["maximal-norm", "--shifts", "4", "--trials", "2", "--plot", "--out", str(tmp_path)]) in (0, 2)
    svg = (tmp_path / "maximal-norm.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    assert main(["symbol", "--trials", "2", "--plot", "--out", str(tmp_path)]) == EXIT_USAGE


def test_cost_ceiling(tmp_path, capsys):
    assert main(["maximal-norm", "--shifts", "4", "--cost-ceiling", "1", "--out", str(tmp_path)]) == EXIT_USAGE
    assert "exceeds the ceiling" in capsys.readouterr().err
    assert not (tmp_path / "maximal-norm.csv").exists()


def test_fast_experiments_pass(tmp_path):
    for exp in ("lp-check", "tensor-check"):
        m = run_experiment(ExperimentConfig(exp, out=str(tmp_path), trials=3))
        assert m.passed, [c for c in m.checks if not c["pass"]]
        assert (tmp_path / f"{exp}.csv").exists()
