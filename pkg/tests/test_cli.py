"""Command-line interface: exit codes, outputs on disk, report text."""
import json

import numpy as np
import pytest

from vesselsim.cli import main
from vesselsim.dynamics import VesselState, container_ship
from vesselsim.scenarios import load_scenario, save_scenario
from vesselsim.simulator import AgentSpec, Scenario


def quick_scenario(name="quick", y=0.0):
    p = container_ship()
    agent = AgentSpec("solo", p, VesselState(0.0, y, 0.0, 8.4),
                      goals=[np.array([450.0, y])])
    return Scenario(name=name, agents=[agent], dt=1.0, t_max=90)


@pytest.fixture(scope="module")
def sim_out(tmp_path_factory):
    """One `simulate` invocation shared by the output-inspection tests."""
    root = tmp_path_factory.mktemp("cli-sim")
    sc_path = root / "quick.json"
    save_scenario(quick_scenario(), sc_path)
    out = root / "report"
    code = main(["simulate", str(sc_path), "--out", str(out)])
    assert code == 0
    return out


class TestExitCodes:
    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "simulate" in capsys.readouterr().out

    def test_no_arguments(self, capsys):
        assert main([]) == 1

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_scenario_file(self, capsys):
        assert main(["simulate", "does-not-exist.json"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_generator_mix(self, capsys):
        assert main(["generate", "--out", "x", "--mix", "bogus"]) == 1

    def test_invalid_scenario_content(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schema_version": 42}))
        assert main(["simulate", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err


class TestSimulate:
    def test_writes_outputs(self, sim_out):
        assert (sim_out / "trajectory.csv").exists()
        assert (sim_out / "trajectory_waypoints.csv").exists()
        assert (sim_out / "report.json").exists()
        assert (sim_out / "trajectory.png").exists()
        assert (sim_out / "controls.png").exists()

    def test_report_content(self, sim_out):
        report = json.loads((sim_out / "report.json").read_text())
        assert report["scenario"] == "quick"
        assert report["collision"] is False
        assert report["goal_reached"] == {"solo": True}
        assert report["solver_failures"] == 0

    def test_no_figures_flag(self, tmp_path, capsys):
        sc_path = tmp_path / "sc.json"
        save_scenario(quick_scenario(name="nofid"), sc_path)
        out = tmp_path / "rep"
        assert main(["simulate", str(sc_path), "--out", str(out),
                     "--no-figures"]) == 0
        assert (out / "trajectory.csv").exists()
        assert not (out / "trajectory.png").exists()
        assert "all goals reached" in capsys.readouterr().out


class TestGenerate:
    def test_writes_scenario_files(self, tmp_path, capsys):
        out = tmp_path / "scen"
        assert main(["generate", "--out", str(out), "--count", "3",
                     "--mix", "head_on", "--seed", "1"]) == 0
        files = sorted(out.glob("*.json"))
        assert len(files) == 3
        for f in files:
            sc = load_scenario(f)
            assert len(sc.agents) == 2
        assert "wrote 3 scenarios" in capsys.readouterr().out


class TestBatch:
    def test_runs_directory(self, tmp_path, capsys):
        scen_dir = tmp_path / "scen"
        scen_dir.mkdir()
        save_scenario(quick_scenario("one", y=0.0), scen_dir / "one.json")
        save_scenario(quick_scenario("two", y=9000.0), scen_dir / "two.json")
        out = tmp_path / "rep"
        assert main(["batch", str(scen_dir), "--out", str(out)]) == 0
        lines = (out / "runs.jsonl").read_text().splitlines()
        assert len(lines) == 2
        summary = json.loads((out / "summary.json").read_text())
        assert summary["runs"] == 2
        assert summary["goal_rate"] == 1.0
        assert (out / "rule_rates.png").exists()
        assert "2 runs" in capsys.readouterr().out

    def test_empty_directory(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        assert main(["batch", str(empty), "--out", str(tmp_path / "r")]) == 1
        assert "error:" in capsys.readouterr().err


class TestCheck:
    def test_exported_trajectory_is_compliant(self, sim_out, capsys):
        code = main(["check", str(sim_out / "trajectory.csv")])
        assert code == 0
        out = capsys.readouterr().out
        assert "solo: r3_crossing=ok" in out
        assert "compliant" in out

    def test_missing_trajectory(self, capsys):
        assert main(["check", "nope.csv"]) == 1


class TestProfile:
    def test_writes_profile(self, tmp_path, capsys):
        out = tmp_path / "prof"
        assert main(["profile", "--out", str(out), "--vessels", "2",
                     "--steps", "6"]) == 0
        lines = (out / "profile.csv").read_text().splitlines()
        assert lines[0].startswith("vessels,")
        assert len(lines) == 3
        assert (out / "profile.png").exists()
        assert "2 vessels:" in capsys.readouterr().out
