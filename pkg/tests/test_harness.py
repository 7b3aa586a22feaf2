"""Experiment configs, oracle mode, persistence round-trips, sweeps, CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from metriclab import MetricMeasureSpace, icosphere, random_cloud, uniform_grid_1d
from metriclab.cli import main as cli_main
from metriclab.harness import (
    ConfigError,
    ExperimentConfig,
    OracleDisagreement,
    SweepFailure,
    build_field,
    build_space,
    convergence_sweep,
    load_field,
    load_report,
    load_space,
    read_spectrum_dump,
    run_experiment,
    save_field,
    save_space,
)

BVSY_TENT64 = {
    "functional": "bvsy",
    "space": {"kind": "grid1d", "n": 64},
    "field": {"kind": "tent", "center": 0.0, "scale": 0.5},
    "params": {"p": 1.0},
}


def tent_config(**overrides) -> dict:
    cfg = json.loads(json.dumps(BVSY_TENT64))
    cfg.update(overrides)
    return cfg


# ---------------------------------------------------------------- config validation


def test_config_missing_space_names_key():
    with pytest.raises(ConfigError, match=r"config\.space"):
        ExperimentConfig.from_dict({"functional": "bvsy",
                                    "field": {"kind": "tent"}, "params": {}})


def test_config_bad_param_type_names_path():
    cfg = tent_config(params={"p": "one"})
    with pytest.raises(ConfigError, match=r"config\.params\.p"):
        ExperimentConfig.from_dict(cfg)


def test_config_unknown_key_rejected():
    cfg = tent_config()
    cfg["space"]["shape"] = "round"
    with pytest.raises(ConfigError, match=r"config\.space\.shape"):
        ExperimentConfig.from_dict(cfg)


def test_config_bad_functional():
    with pytest.raises(ConfigError, match="functional"):
        ExperimentConfig.from_dict(tent_config(functional="fourier"))


def test_config_gn_params_validated():
    cfg = tent_config(functional="gn", params={"s1": 0.5, "p1": 2.0, "theta": 1.0})
    with pytest.raises(ConfigError, match=r"config\.params"):
        ExperimentConfig.from_dict(cfg)


def test_config_not_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        ExperimentConfig.load(path)


# ---------------------------------------------------------------- persistence


def test_space_round_trip(tmp_path):
    for space in (uniform_grid_1d(32), icosphere(1),
                  random_cloud(40, 2, seed=3),
                  MetricMeasureSpace.graph(
                      4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
                      np.ones(4))):
        path = tmp_path / "space.json"
        save_space(space, path)
        back = load_space(path)
        assert back.kind == space.kind
        assert back.n == space.n
        np.testing.assert_array_equal(back.weights, space.weights)
        centers = np.arange(0, space.n, 7)
        for c in centers:
            np.testing.assert_allclose(back.distance_row(int(c)),
                                       space.distance_row(int(c)), rtol=1e-15)


def test_field_round_trip(tmp_path):
    space = uniform_grid_1d(64)
    field = build_field(space, {"kind": "bump", "center": [0.0],
                                "scale": 1.0, "amplitude": 2.0})
    path = tmp_path / "field.json"
    save_field(field, path)
    back = load_field(path)
    np.testing.assert_array_equal(back.values, field.values)
    np.testing.assert_array_equal(back.grad_norm, field.grad_norm)


def test_report_round_trip_exact(tmp_path):
    report, paths = run_experiment(tent_config(), out_dir=str(tmp_path))
    loaded = load_report(paths["report"])
    assert loaded["result"]["bvsy"] == report["result"]["bvsy"]
    assert loaded["result"]["sobolev"] == report["result"]["sobolev"]
    assert loaded["result"]["ratio"] == report["result"]["ratio"]
    assert loaded["schema"] == 1


def test_reports_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = tent_config(oracle=True)
    _, first = run_experiment(cfg, out_dir=str(a))
    _, second = run_experiment(cfg, out_dir=str(b))
    with open(first["report"], "rb") as fa, open(second["report"], "rb") as fb:
        assert fa.read() == fb.read()
    with open(first["profile"], "rb") as fa, open(second["profile"], "rb") as fb:
        assert fa.read() == fb.read()


def test_profile_csv_header(tmp_path):
    _, paths = run_experiment(tent_config(), out_dir=str(tmp_path))
    with open(paths["profile"], "r", encoding="utf-8") as fh:
        assert fh.readline().strip() == "value,lambda_p_W"


def test_spectrum_dump_layout(tmp_path):
    from metriclab import DistanceIndex, pair_quotients

    cfg = ExperimentConfig.from_dict(tent_config(output={"spectrum": "spectrum.bin"}))
    _, paths = run_experiment(cfg, out_dir=str(tmp_path))
    values, weights = read_spectrum_dump(paths["spectrum"])
    space = build_space(cfg.space)
    field = build_field(space, cfg.field)
    spectrum = pair_quotients(space, field, 1.0, 1.0, index=DistanceIndex(space))
    np.testing.assert_array_equal(values, spectrum.values)
    np.testing.assert_array_equal(weights, spectrum.weights)
    raw = np.fromfile(paths["spectrum"], dtype="<f8")
    assert raw.size == 2 * spectrum.values.size


# ---------------------------------------------------------------- oracle mode


def test_oracle_run_deltas_small():
    report, _ = run_experiment(tent_config(oracle=True), write=False)
    section = report["oracle"]
    assert section["value"]["rel_delta"] <= 1e-12
    assert section["value_sorted"]["rel_delta"] <= 1e-12
    assert section["pairs_max_delta"] <= 1e-12
    assert section["pair_weights_max_delta"] <= 1e-12


def test_oracle_rejects_large_space():
    cfg = tent_config(oracle=True)
    cfg["space"]["n"] = 4000
    with pytest.raises(ConfigError, match="oracle"):
        run_experiment(cfg, write=False)


def test_oracle_disagreement_aborts(monkeypatch):
    import metriclab.harness as harness

    monkeypatch.setattr(harness, "naive_weak_sup",
                        lambda q, ww, p, **kw: 123.0)
    with pytest.raises(OracleDisagreement, match="123.0"):
        run_experiment(tent_config(oracle=True), write=False)


def test_ap_constant_weight_report_value_one():
    cfg = {"functional": "ap",
           "params": {"weight": {"kind": "constant"}, "p": 2.0}}
    report, _ = run_experiment(cfg, write=False)
    assert report["result"]["value"] == pytest.approx(1.0, abs=1e-12)


def test_poincare_run_writes_ball_table(tmp_path):
    cfg = {"functional": "poincare",
           "space": {"kind": "grid1d", "n": 256},
           "field": {"kind": "bump", "center": 0.0},
           "params": {"q": 1.0, "p": 1.0}, "oracle": True}
    report, paths = run_experiment(cfg, out_dir=str(tmp_path))
    assert report["oracle"]["ball_lhs_max_delta"] <= 1e-12
    with open(paths["balls"], "r", encoding="utf-8") as fh:
        assert fh.readline().strip() == "center,radius,lhs,rhs_core,ratio"


# ---------------------------------------------------------------- sweeps


def test_sweep_needs_three_sizes():
    with pytest.raises(SweepFailure):
        convergence_sweep(tent_config(), [64, 128], "result.ratio", 0.05)
    with pytest.raises(SweepFailure):
        convergence_sweep(tent_config(), [128, 64, 256], "result.ratio", 0.05)


def test_sweep_bad_selector():
    with pytest.raises(SweepFailure, match="no key"):
        convergence_sweep(tent_config(), [32, 48, 64], "result.nope", 0.05)


def test_sweep_tent_ratio_passes():
    result = convergence_sweep(tent_config(), [1024, 2048, 4096],
                               "result.ratio", 0.05)
    assert result.passed and not result.degenerate
    assert len(result.deltas) == 2
    assert result.deltas[-1] <= 0.05
    assert all(v > 0 for v in result.scalars)


def test_sweep_constant_field_degenerate_pass():
    cfg = tent_config(field={"kind": "bump", "center": 0.0, "amplitude": 0.0})
    result = convergence_sweep(cfg, [64, 96, 128], "result.ratio", 0.05)
    assert result.passed and result.degenerate
    assert result.deltas == []


def test_sweep_ap_divergence_fails():
    cfg = {"functional": "ap",
           "params": {"weight": {"kind": "power", "alpha": 1.0}, "p": 2.0,
                      "g_min": 1, "g_max": 6, "box": [[-1.0], [1.0]],
                      "points_per_side": 16}}
    result = convergence_sweep(cfg, [4, 5, 6], "result.value", 0.01)
    assert not result.passed
    assert result.scalars == sorted(result.scalars)
    assert result.scalars[-1] > result.scalars[0]


def test_sweep_result_as_dict_round_trips():
    result = convergence_sweep(tent_config(), [32, 48, 64], "result.ratio", 1.0)
    d = result.as_dict()
    assert d["sizes"] == [32, 48, 64]
    assert json.loads(json.dumps(d)) == d


# ---------------------------------------------------------------- CLI


def run_cli(*argv) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "metriclab.cli", *argv],
                          capture_output=True, text=True)


def test_cli_full_pipeline(tmp_path):
    space_path = str(tmp_path / "space.json")
    field_path = str(tmp_path / "field.json")
    proc = run_cli("space", "gen", "--kind", "grid1d", "--n", "64",
                   "--out", space_path)
    assert proc.returncode == 0, proc.stderr
    proc = run_cli("field", "gen", "--space", space_path, "--kind", "tent",
                   "--scale", "0.5", "--out", field_path)
    assert proc.returncode == 0, proc.stderr

    config = {"functional": "bvsy",
              "space": {"kind": "file", "path": space_path},
              "field": {"kind": "file", "path": field_path},
              "params": {"p": 1.0}}
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    proc = run_cli("run", "--config", str(cfg_path), "--out-dir", str(out_dir))
    assert proc.returncode == 0, proc.stderr
    report = load_report(out_dir / "report.json")
    assert report["schema"] == 1
    assert np.isfinite(report["result"]["ratio"])

    proc = run_cli("oracle-diff", "--config", str(cfg_path))
    assert proc.returncode == 0, proc.stderr
    deltas = json.loads(proc.stdout)
    assert deltas["value"]["rel_delta"] <= 1e-12

    proc = run_cli("sweep", "--config", str(cfg_path), "--sizes", "32", "48",
                   "64", "--selector", "result.ratio", "--tol", "0.5")
    assert proc.returncode == 4  # file-backed spaces have no size axis
    assert "no size axis" in proc.stderr


def test_cli_sweep_pass_and_csv(tmp_path, monkeypatch):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(tent_config()))
    out_dir = tmp_path / "sweep_out"
    monkeypatch.setenv("METRICLAB_OUT", str(out_dir))
    code = cli_main(["sweep", "--config", str(cfg_path), "--sizes", "32",
                     "48", "64", "--selector", "result.ratio", "--tol", "0.9"])
    assert code == 0
    with open(out_dir / "sweep.csv", "r", encoding="utf-8") as fh:
        assert fh.readline().strip() == "size,scalar,delta"
    sweep = load_report(out_dir / "sweep.json")
    assert sweep["passed"] is True


def test_cli_config_error_exit_2(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(tent_config(functional="fourier")))
    code = cli_main(["run", "--config", str(cfg_path)])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_cli_oracle_disagreement_exit_3(tmp_path, monkeypatch, capsys):
    import metriclab.harness as harness

    monkeypatch.setattr(harness, "naive_weak_sup",
                        lambda q, ww, p, **kw: 123.0)
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(tent_config(oracle=True)))
    code = cli_main(["run", "--config", str(cfg_path)])
    assert code == 3
    assert "oracle disagreement" in capsys.readouterr().err


def test_cli_sweep_failure_exit_4(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(tent_config()))
    code = cli_main(["sweep", "--config", str(cfg_path), "--sizes", "32",
                     "64", "--selector", "result.ratio", "--tol", "0.5"])
    assert code == 4
    assert "sweep failure" in capsys.readouterr().err


def test_cli_env_output_dir(tmp_path, monkeypatch):
    out_dir = tmp_path / "envout"
    monkeypatch.setenv("METRICLAB_OUT", str(out_dir))
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(tent_config()))
    code = cli_main(["run", "--config", str(cfg_path)])
    assert code == 0
    assert (out_dir / "report.json").exists()
