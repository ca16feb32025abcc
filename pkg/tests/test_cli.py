"""Command-line contract tests: exit codes, output files, flag precedence.

Exit code map under test: 0 success, 1 usage or config error, 2 runtime
abort. Runs use the filter-free baselines or tiny ensembles to stay fast.
"""

import json

import numpy as np
import pytest

from abslab.cli import main
from abslab.scenario import TRACE_COLUMNS, metrics_fields, read_trace


def run_csp(tmp_path, *extra):
    return main(["run", "--speed", "5", "--controller", "csp",
                 "--out", str(tmp_path), *extra])


class TestExitCodes:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["run", "--warp", "9"]) == 1

    def test_unknown_subcommand_is_usage_error(self):
        assert main(["render"]) == 1

    def test_missing_speed_is_config_error(self, tmp_path, capsys):
        code = main(["run", "--out", str(tmp_path)])
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_conflicting_speed_flags(self, tmp_path):
        assert main(["run", "--speed", "5", "--speed-mph", "30",
                     "--out", str(tmp_path)]) == 1

    def test_unknown_surface_is_config_error(self, tmp_path):
        assert run_csp(tmp_path, "--surface", "lava") == 1

    def test_missing_config_file_is_config_error(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 1

    def test_successful_run_returns_zero(self, tmp_path):
        assert run_csp(tmp_path) == 0

    def test_plant_failure_aborts_with_two(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({
            "initial_speed": 20.0,
            "controller": "csp",
            "vehicle": {"k_f": 2e10, "k_r": 2e10, "c_f": 10.0, "c_r": 10.0},
        }))
        with np.errstate(all="ignore"):
            code = main(["run", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == 2
        assert "aborted" in capsys.readouterr().err
        # the partial trace still lands on disk for post-mortems
        assert (tmp_path / "bad_trace.csv").exists()


class TestRunCommand:
    def test_writes_trace_and_metrics(self, tmp_path, capsys):
        assert run_csp(tmp_path) == 0
        trace = tmp_path / "cli_trace.csv"
        metrics = tmp_path / "cli_metrics.csv"
        assert trace.exists() and metrics.exists()
        assert trace.read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)
        assert metrics.read_text().splitlines()[0] == ",".join(metrics_fields())
        out = capsys.readouterr().out
        assert "stopped in" in out

    def test_quiet_suppresses_summary(self, tmp_path, capsys):
        assert run_csp(tmp_path, "--quiet") == 0
        assert capsys.readouterr().out == ""

    def test_config_file_sets_run_name(self, tmp_path):
        cfg = tmp_path / "wetstop.toml"
        cfg.write_text('initial_speed = 5.0\ncontroller = "csp"\n'
                       '[[road]]\nt = 0.0\nsurface = "wet"\n')
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path),
                     "--quiet"]) == 0
        assert (tmp_path / "wetstop_trace.csv").exists()

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "base.toml"
        cfg.write_text('initial_speed = 20.0\ncontroller = "dcee"\n')
        assert main(["run", "--config", str(cfg), "--speed", "5",
                     "--controller", "csp", "--seed", "9",
                     "--out", str(tmp_path), "--quiet"]) == 0
        text = (tmp_path / "base_metrics.csv").read_text().splitlines()[1]
        row = dict(zip(metrics_fields(), text.split(",")))
        assert row["controller"] == "csp"
        assert row["seed"] == "9"
        assert float(row["initial_speed"]) == 5.0

    def test_env_var_out_dir(self, tmp_path, monkeypatch):
        target = tmp_path / "envout"
        monkeypatch.setenv("ABS_LAB_OUT_DIR", str(target))
        assert main(["run", "--speed", "5", "--controller", "csp",
                     "--quiet"]) == 0
        assert (target / "cli_trace.csv").exists()

    def test_out_flag_beats_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ABS_LAB_OUT_DIR", str(tmp_path / "ignored"))
        chosen = tmp_path / "chosen"
        assert run_csp(chosen, "--quiet") == 0
        assert (chosen / "cli_trace.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_surface_flag_selects_road(self, tmp_path):
        assert run_csp(tmp_path, "--surface", "snow", "--quiet") == 0
        text = (tmp_path / "cli_metrics.csv").read_text().splitlines()[1]
        row = dict(zip(metrics_fields(), text.split(",")))
        assert row["road"] == "snow"


class TestSweepCommand:
    def test_grid_of_speeds_and_seeds(self, tmp_path, capsys):
        code = main(["sweep", "--speeds", "4,5", "--seeds", "2",
                     "--controller", "csp", "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "cli_sweep_metrics.csv").read_text().splitlines()
        assert len(lines) == 5  # header + 2 speeds x 2 seeds
        assert len(capsys.readouterr().out.splitlines()) == 4

    def test_traces_flag_writes_per_run_files(self, tmp_path):
        assert main(["sweep", "--speeds", "4", "--controller", "csp",
                     "--traces", "--quiet", "--out", str(tmp_path)]) == 0
        traces = list(tmp_path.glob("*_trace.csv"))
        assert len(traces) == 1
        assert read_trace(traces[0]).shape[1] == len(TRACE_COLUMNS)

    def test_mph_speed_list(self, tmp_path):
        assert main(["sweep", "--speeds-mph", "10", "--controller", "csp",
                     "--quiet", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "cli_sweep_metrics.csv").read_text().splitlines()[1]
        row = dict(zip(metrics_fields(), text.split(",")))
        assert float(row["initial_speed"]) == pytest.approx(4.4704)

    def test_bad_surface_list_is_config_error(self, tmp_path):
        assert main(["sweep", "--speeds", "4", "--surfaces", "dry,lava",
                     "--out", str(tmp_path)]) == 1

    def test_zero_seeds_is_config_error(self, tmp_path):
        assert main(["sweep", "--speeds", "4", "--seeds", "0",
                     "--out", str(tmp_path)]) == 1


class TestCompareCommand:
    def test_three_controllers_reported(self, tmp_path, capsys):
        cfg = tmp_path / "duel.toml"
        cfg.write_text('initial_speed = 4.0\nn_particles = 64\nseed = 2\n')
        code = main(["compare", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        for name in ("dcee", "csp", "bisection"):
            assert name in out
            assert (tmp_path / f"duel_{name}_trace.csv").exists()
        lines = (tmp_path / "duel_compare_metrics.csv").read_text().splitlines()
        assert len(lines) == 4
        assert "vs_dcee" in out
