import json

import numpy as np
import pytest

from spacelike_flow import cli, fieldio
from spacelike_flow.flow_engine import FlowConfig
from spacelike_flow.geometry_fields import GridChart


def test_catalog(capsys):
    assert cli.main(["catalog"]) == 0
    names = [s["name"] for s in json.loads(capsys.readouterr().out)]
    assert names == list(cli.SCENARIOS)


def test_unknown_scenario():
    with pytest.raises(ValueError):
        cli.ScenarioSpec("sphere")


def test_hyperbolic_run_and_verify(tmp_path, capsys):
    out = tmp_path / "hyp"
    assert cli.main(["run", "--scenario", "hyperbolic_form", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["exit_code"] == 0
    assert summary["certificate"][-1]["rescaled_volume"] == pytest.approx(4 * np.pi, abs=1e-6)
    assert cli.main(["verify", "--report", str(out)]) == 0


def test_flat_torus_run(tmp_path):
    out = tmp_path / "flat"
    code = cli.main(["run", "--scenario", "flat_torus", "--grid", "16", "--t-end", "0.25",
                     "--out", str(out)])
    assert code == 0
    assert (out / "state_final" / "g.bin").exists()


def test_steep_graph_is_input_error(tmp_path, capsys):
    code = cli.main(["run", "--scenario", "graph_torus", "--params", '{"amplitude": 2.0}',
                     "--grid", "16", "--out", str(tmp_path / "bad")])
    assert code == cli.EXIT_INPUT
    assert "space-like" in capsys.readouterr().err


def test_abort_exit_code(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_steps": 2}))
    code = cli.main(["run", "--scenario", "graph_torus", "--grid", "16", "--config", str(cfg),
                     "--out", str(tmp_path / "abort")])
    assert code == cli.EXIT_ABORT


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"t_end": 0.5, "cfl_constant": 0.1}))
    args = cli._build_parser().parse_args(
        ["run", "--scenario", "flat_torus", "--config", str(cfg), "--cfl", "0.3"])
    _, config = cli._resolve(args)
    assert config.t_end == 0.5 and config.cfl_constant == 0.3


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tend": 1}))
    assert cli.main(["run", "--scenario", "flat_form", "--config", str(cfg),
                     "--out", str(tmp_path / "x")]) == cli.EXIT_INPUT


def test_custom_from_file(tmp_path):
    grid = GridChart(2, 16)
    x, y = grid.coordinates()
    path = tmp_path / "u.bin"
    fieldio.write_field(path, grid, 0.1 * np.sin(x) * np.cos(2 * y))
    spec = cli.ScenarioSpec("custom", {"grid": 16, "u_file": str(path)})
    state = cli.build_state(spec)
    assert state.grid == grid


def test_custom_random_modes_seeded():
    spec = cli.ScenarioSpec("custom", {"grid": 16, "random_modes": 3, "max_slope": 0.3}, seed=5)
    a, b = cli.build_state(spec), cli.build_state(spec)
    assert np.array_equal(a.h, b.h)
    other = cli.build_state(cli.ScenarioSpec("custom", spec.parameters, seed=6))
    assert not np.array_equal(a.h, other.h)


def test_csv_round_trip():
    report = cli.run(cli.ScenarioSpec("hyperbolic_form"), FlowConfig(t_end=1.0))
    recs = report.trajectory.records
    text = cli.records_to_csv(recs)
    back = cli.records_from_csv(text, 2, [r.extra for r in recs])
    assert [r.row() for r in back] == [r.row() for r in recs]


def test_verify_detects_tampering(tmp_path, capsys):
    out = tmp_path / "hyp"
    cli.main(["run", "--scenario", "hyperbolic_form", "--t-end", "1", "--out", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    summary["verdicts"]["amax_bound"]["status"] = "FAIL"
    (out / "summary.json").write_text(json.dumps(summary))
    assert cli.main(["verify", "--report", str(out)]) == cli.EXIT_CHECK
    assert "amax_bound" in capsys.readouterr().err


def test_verify_missing_report(tmp_path):
    assert cli.main(["verify", "--report", str(tmp_path / "none")]) == cli.EXIT_INPUT


def test_oracle_command(capsys):
    assert cli.main(["oracle", "--trials", "5", "--draws", "1000", "--dims", "2,4,6"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["det_inequality"] == {"2": 0, "4": 0, "6": 0}


def test_oracle_rejects_dimension():
    assert cli.main(["oracle", "--dims", "8", "--trials", "1"]) == cli.EXIT_INPUT


def test_plot(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    assert cli.main(["run", "--scenario", "hyperbolic_form", "--t-end", "1", "--plot",
                     "--out", str(out)]) == 0
    assert (out / "monitors.svg").read_text().lstrip().startswith("<?xml")


def test_hyperbolic_defaults():
    spec = {s.name: s for s in cli.catalog_list()}["hyperbolic_form"]
    assert spec.parameters["n"] == 2 and spec.parameters["phi0"] == 1.0
    assert spec.parameters["base_volume"] == pytest.approx(4 * np.pi)
    assert spec.parameters["base_euler"] == -2
