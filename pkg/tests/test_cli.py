"""
Сквозные тесты CLI: конвейер команд, повтор по снимку, коды завершения, журнал запусков.
"""
import json

import pytest
import yaml

from config import Config
from main import run_cli
from utils.artifacts import read_csv
from utils.lfrb import read_matrix

SYNTH = {"synthetic": {"n_unknowns": 30, "n_compartments": 2, "n_electrodes": 5, "n_sources": 4, "seed": 1,
                     "gamma_family": ["sigma", "constant"]}}


@pytest.fixture
def synthetic_dir(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text(yaml.safe_dump(SYNTH))
    out = tmp_path / "gen"
    assert run_cli(["gen", "--kind", "synthetic", "--spec", str(spec), "--out", str(out)]) == 0
    return out / "system"


@pytest.fixture
def selected_dir(tmp_path, synthetic_dir):
    out = tmp_path / "select"
    code = run_cli(["select", "--system", str(synthetic_dir), "--eps-abs", "0", "--max-supports", "5",
                    "--out", str(out)])
    assert code == 0
    return out


def _json(path):
    return json.loads(path.read_text())


def test_gen_writes_system_and_run_artifacts(tmp_path, synthetic_dir):
    assert (synthetic_dir / "system.yaml").exists()
    out = synthetic_dir.parent
    snapshot = yaml.safe_load((out / "snapshot.yaml").read_text())
    assert snapshot["kind"] == "synthetic"
    assert snapshot["synthetic"]["n_unknowns"] == 30
    assert "out" not in snapshot
    run = _json(out / "run.json")
    assert run["status"] == "ok"
    assert "generate" in run["phases"]


def test_select_reports_supports_and_trace(selected_dir):
    report = _json(selected_dir / "select.json")
    assert report["n_supports"] == 5
    assert report["stop"] == "max_supports"
    trace = read_csv(selected_dir / "trace.csv")
    assert int(trace[0]["n_supports"]) == 4
    assert int(trace[-1]["n_supports"]) == 5
    assert (selected_dir / "basis" / "basis.yaml").exists()


def test_select_rerun_from_snapshot_is_identical(tmp_path, selected_dir):
    again = tmp_path / "again"
    assert run_cli(["select", "--config", str(selected_dir / "snapshot.yaml"), "--out", str(again)]) == 0
    for name in ("select.json", "trace.csv", "basis/gram.lfrb", "basis/basis.yaml"):
        assert (again / name).read_bytes() == (selected_dir / name).read_bytes()


def test_approx_and_exact_agree_at_support(tmp_path, synthetic_dir, selected_dir):
    support = _json(selected_dir / "select.json")["supports"][0]
    point = ",".join(repr(v) for v in support)
    approx_out, exact_out = tmp_path / "approx", tmp_path / "exact"
    assert run_cli(["approx", "--system", str(synthetic_dir), "--basis", str(selected_dir / "basis"),
                    "--sigma", point, "--repeats", "5", "--out", str(approx_out)]) == 0
    assert run_cli(["exact", "--system", str(synthetic_dir), "--sigma", point, "--out", str(exact_out)]) == 0

    approx = read_matrix(approx_out / "leadfields" / "approx_0000.lfrb")
    exact = read_matrix(exact_out / "leadfields" / "exact_0000.lfrb")
    assert abs(approx - exact).max() <= 1e-6 * abs(exact).max()

    rows = read_csv(approx_out / "approx.csv")
    assert rows[0]["out_of_domain"] == "0"
    timing = _json(approx_out / "timing.json")
    assert timing["online_seconds"] > 0 and "speedup" in timing


def test_errmap_with_exact_errors(tmp_path, synthetic_dir, selected_dir):
    out = tmp_path / "errmap"
    assert run_cli(["errmap", "--system", str(synthetic_dir), "--basis", str(selected_dir / "basis"),
                    "--with-exact", "--out", str(out)]) == 0
    summary = _json(out / "errmap.json")
    assert summary["n_supports"] == 5
    assert summary["n_valid"] == summary["n_samples"] == 25
    assert summary["max"] == pytest.approx(_json(selected_dir / "select.json")["max_error"], rel=1e-12)
    assert summary["c_max"] > 0
    assert len(read_csv(out / "errmap.csv")) == 25


def test_simulate_then_estimate_finds_true_sample(tmp_path, synthetic_dir, selected_dir):
    sim = tmp_path / "sim"
    assert run_cli(["simulate", "--system", str(synthetic_dir), "--sigma", "1.25,0.875", "--source", "2",
                    "--out", str(sim)]) == 0
    assert read_matrix(sim / "data.lfrb").shape == (5, 1)

    exact_out = tmp_path / "estimate"
    assert run_cli(["estimate", "--system", str(synthetic_dir), "--data", str(sim / "data.lfrb"),
                    "--out", str(exact_out)]) == 0
    report = _json(exact_out / "estimate.json")
    assert report["mode"] == "exact"
    assert report["sigma_hat"] == [1.25, 0.875]

    approx_out = tmp_path / "estimate-approx"
    assert run_cli(["estimate", "--system", str(synthetic_dir), "--data", str(sim / "data.lfrb"),
                    "--mode", "approx", "--basis", str(selected_dir / "basis"), "--normalize",
                    "--out", str(approx_out)]) == 0
    report = _json(approx_out / "estimate.json")
    assert report["normalization"] in ("min-normalized", "raw")
    assert len(read_csv(approx_out / "rmap.csv")) == 25


def test_compare_poly_writes_table(tmp_path, synthetic_dir):
    out = tmp_path / "compare"
    assert run_cli(["compare-poly", "--system", str(synthetic_dir), "--compartment", "0", "--lo", "0.5",
                    "--hi", "2", "--n-values", "1,2", "--eval-count", "5", "--rb-grid-count", "6",
                    "--out", str(out)]) == 0
    rows = read_csv(out / "comparison.csv")
    assert [(row["method"], row["n"]) for row in rows] == [("rb", "1"), ("poly", "1"), ("rb", "2"), ("poly", "2")]


def test_unknown_command_is_usage_error():
    assert run_cli(["frobnicate"]) == 2


def test_missing_system_is_usage_error(tmp_path):
    assert run_cli(["select", "--out", str(tmp_path / "out")]) == 2
    assert (tmp_path / "out" / "run.json").exists()
    assert _json(tmp_path / "out" / "run.json")["exit_code"] == 2


def test_unreadable_system_is_storage_error(tmp_path):
    assert run_cli(["select", "--system", str(tmp_path / "nowhere"), "--out", str(tmp_path / "out")]) == 4


def test_bad_source_index_is_usage_error(tmp_path, synthetic_dir):
    code = run_cli(["simulate", "--system", str(synthetic_dir), "--sigma", "1,1", "--source", "50",
                    "--out", str(tmp_path / "sim")])
    assert code == 2


def test_invalid_environment_is_rejected(monkeypatch):
    monkeypatch.setattr(Config, "JOBS", 0)
    assert run_cli(["history"]) == 2


def test_history_lists_recorded_runs(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(Config, "REGISTRY_PATH", str(tmp_path / "runs.db"))
    spec = tmp_path / "spec.yaml"
    spec.write_text(yaml.safe_dump(SYNTH))
    assert run_cli(["gen", "--kind", "synthetic", "--spec", str(spec), "--out", str(tmp_path / "gen")]) == 0
    capsys.readouterr()

    assert run_cli(["history", "--limit", "5"]) == 0
    output = capsys.readouterr().out
    assert "'command': 'gen'" in output
    assert "'status': 'ok'" in output
