"""CLI thin client driven against the in-process service transport."""
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from mocsim.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, name="cfg.json", **over):
    cfg = {
        "family": "moc1d",
        "num_sites": 16,
        "depth": 8,
        "prob": 0.5,
        "iterations": 150,
        "master_seed": 2,
        "geometry_1d": {"ks": [2], "widths": [2], "spacings": [4]},
        "fit": {"enabled": False},
    }
    cfg.update(over)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_run_1d_writes_artifacts(runner, tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(main, ["run-1d", "--config", str(cfg),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    tally = (out / "tally.csv").read_text()
    assert tally.startswith("family,k,width_or_radius")
    assert (out / "run_meta.json").exists()


def test_flag_overrides_change_output(runner, tmp_path):
    cfg = write_config(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    r1 = runner.invoke(main, ["run-1d", "--config", str(cfg), "--seed", "11",
                              "--out", str(out_a)])
    r2 = runner.invoke(main, ["run-1d", "--config", str(cfg), "--seed", "12",
                              "--out", str(out_b)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert (out_a / "tally.csv").read_text() != (out_b / "tally.csv").read_text()
    out_c = tmp_path / "c"
    r3 = runner.invoke(main, ["run-1d", "--config", str(cfg), "--seed", "11",
                              "--workers", "4", "--out", str(out_c)])
    assert (out_a / "tally.csv").read_text() == (out_c / "tally.csv").read_text()


def test_invalid_config_exits_2(runner, tmp_path):
    cfg = write_config(tmp_path, prob=2.0)
    result = runner.invoke(main, ["run-1d", "--config", str(cfg)])
    assert result.exit_code == 2
    assert "invalid" in result.output.lower()


def test_family_mismatch_exits_2(runner, tmp_path):
    cfg = write_config(tmp_path)
    result = runner.invoke(main, ["run-2d", "--config", str(cfg)])
    assert result.exit_code == 2
    assert "does not match" in result.output


def test_fit_command(runner, tmp_path):
    cfg = write_config(tmp_path, iterations=2500,
                       geometry_1d={"ks": [2], "widths": [1, 2],
                                    "spacings": [3, 4, 5, 6],
                                    "offsets": [0, 4, 8, 12]})
    out = tmp_path / "out"
    assert runner.invoke(main, ["run-1d", "--config", str(cfg),
                                "--out", str(out)]).exit_code == 0
    fit_cfg = tmp_path / "fit.json"
    fit_cfg.write_text(json.dumps({"min_events": 5,
                                   "gme_window": [1e-4, 1.0],
                                   "mi_window": [1e-4, 1.0]}))
    report_path = tmp_path / "report.json"
    result = runner.invoke(main, ["fit", "--tally", str(out / "tally.csv"),
                                  "--family", "moc1d", "--num-sites", "16",
                                  "--fit-config", str(fit_cfg),
                                  "--out", str(report_path)])
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text())
    assert "relation_checks" in report


def test_oracle_check_command(runner):
    result = runner.invoke(main, ["oracle-check", "--family", "moc1d",
                                  "--trials", "15", "--max-sites", "6",
                                  "--max-depth", "4", "--prob", "0.5"])
    assert result.exit_code == 0, result.output
    assert "oracle check passed" in result.output


def test_weighted_graph_command(runner, tmp_path):
    cfg = write_config(tmp_path, iterations=300,
                       weighted_graph={"enabled": True, "measure": "mi",
                                       "k": 2, "width": 2, "spacing": 4,
                                       "depth_window": 8})
    out = tmp_path / "wg"
    result = runner.invoke(main, ["weighted-graph", "--config", str(cfg),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "weighted_graph_horizontal.csv").exists()
    assert (out / "weighted_graph_vertical.csv").exists()


def test_run_without_out_prints_tally(runner, tmp_path):
    cfg = write_config(tmp_path, iterations=50)
    result = runner.invoke(main, ["run-1d", "--config", str(cfg)])
    assert result.exit_code == 0
    assert result.output.startswith("family,k,width_or_radius")
