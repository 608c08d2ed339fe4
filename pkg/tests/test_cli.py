import csv
import json
import math
import subprocess
import sys

import pytest

from kuramoto_epr.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, parse_grid, read_config_file, run


def _run(tmp_path, *argv):
    return run([*argv, "--out-dir", str(tmp_path), "--quiet"])


def _json(path):
    return json.loads(path.read_text())


def _csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    config = json.loads(lines[0][len("# config: "):])
    rows = list(csv.reader(lines[1:]))
    return config, rows[0], rows[1:]


def _strip_timestamp(doc):
    doc = dict(doc)
    doc["metadata"] = {k: v for k, v in doc["metadata"].items() if k != "generated_at"}
    return doc


class TestChsh:
    def test_analytic_only(self, tmp_path):
        assert _run(tmp_path, "chsh", "--n-events", "0") == EXIT_OK
        doc = _json(tmp_path / "chsh.json")
        assert doc["command"] == "chsh"
        assert doc["results"]["S"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert doc["results"]["violates_classical_bound"] is True
        assert "monte_carlo" not in doc["results"]
        assert set(doc["metadata"]) >= {"tool", "version", "generated_at", "time_convention"}

    def test_monte_carlo_block(self, tmp_path):
        assert _run(tmp_path, "chsh", "--n-events", "20000", "--seed", "5") == EXIT_OK
        mc = _json(tmp_path / "chsh.json")["results"]["monte_carlo"]
        assert abs(mc["S_hat"] - 2 * math.sqrt(2)) < 5 * mc["standard_error"]

    def test_bad_angles(self, tmp_path):
        assert _run(tmp_path, "chsh", "--angles", "0,1,2") == EXIT_CONFIG


class TestSpectrum:
    def test_delta(self, tmp_path):
        assert _run(tmp_path, "spectrum", "--dist", "delta:1", "--K", "4") == EXIT_OK
        res = _json(tmp_path / "spectrum.json")["results"]
        assert res["eigenvalues"] == [pytest.approx(1.0, abs=1e-12)]

    def test_lorentzian(self, tmp_path):
        assert _run(tmp_path, "spectrum", "--dist", "lorentzian:0,0.5", "--K", "3") == EXIT_OK
        res = _json(tmp_path / "spectrum.json")["results"]
        assert res["eigenvalues"][0] == pytest.approx(1.0, abs=1e-10)

    def test_no_root_is_numerical_failure_but_writes_output(self, tmp_path):
        code = _run(tmp_path, "spectrum", "--dist", "lorentzian:0,2", "--K", "3")
        assert code == EXIT_NUMERICAL
        assert _json(tmp_path / "spectrum.json")["results"]["eigenvalues"] == []


class TestSimulate:
    ARGS = ("simulate", "--N", "256", "--K", "1", "--dt", "0.05", "--t-end", "4",
            "--init", "first_harmonic:1e-4", "--seed", "3")

    def test_outputs(self, tmp_path):
        assert _run(tmp_path, *self.ARGS) == EXIT_OK
        config, header, rows = _csv(tmp_path / "simulate_trajectory.csv")
        assert header == ["t", "r", "phi", "mean_phase"]
        assert len(rows) == 81
        assert config["N"] == 256
        summary = _json(tmp_path / "simulate_summary.json")["results"]
        assert summary["predicted_growth_rate"] == pytest.approx(0.5)
        assert summary["fitted_growth_rate"] == pytest.approx(0.5, rel=0.05)

    def test_phase_snapshots(self, tmp_path):
        assert _run(tmp_path, *self.ARGS, "--record-phases", "--stride", "40") == EXIT_OK
        _, header, rows = _csv(tmp_path / "simulate_phases.csv")
        assert len(header) == 257
        assert len(rows) == 3

    def test_byte_identical_except_timestamp(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run(a, *self.ARGS) == EXIT_OK
        assert _run(b, *self.ARGS) == EXIT_OK
        assert (a / "simulate_trajectory.csv").read_bytes() == (b / "simulate_trajectory.csv").read_bytes()
        assert _strip_timestamp(_json(a / "simulate_summary.json")) == _strip_timestamp(
            _json(b / "simulate_summary.json")
        )

    def test_step_too_large(self, tmp_path):
        assert _run(tmp_path, "simulate", "--K", "10", "--dt", "0.05") == EXIT_CONFIG

    def test_bad_N(self, tmp_path):
        assert _run(tmp_path, "simulate", "--N", "0") == EXIT_CONFIG

    def test_fit_rejection_is_reported_not_fatal(self, tmp_path):
        assert _run(tmp_path, "simulate", "--N", "64", "--K", "0", "--t-end", "1") == EXIT_OK
        res = _json(tmp_path / "simulate_summary.json")["results"]
        assert res["fitted_growth_rate"] is None
        assert res["fit_diagnostic"]


class TestConfigFile:
    def test_file_then_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# chsh run\nangles = 0, 45, 90, 135\nn_events = 0\nseed = 9\n")
        assert _run(tmp_path, "chsh", "--config", str(cfg)) == EXIT_OK
        assert _json(tmp_path / "chsh.json")["results"]["S"] == pytest.approx(0.0, abs=1e-12)
        assert _run(tmp_path, "chsh", "--config", str(cfg), "--angles", "0,22.5,45,67.5") == EXIT_OK
        doc = _json(tmp_path / "chsh.json")
        assert doc["results"]["S"] == pytest.approx(2 * math.sqrt(2))
        assert doc["config"]["seed"] == 9

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("bogus = 1\n")
        assert _run(tmp_path, "chsh", "--config", str(cfg)) == EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert _run(tmp_path, "chsh", "--config", str(tmp_path / "nope.cfg")) == EXIT_CONFIG

    def test_reader(self, tmp_path):
        cfg = tmp_path / "x.cfg"
        cfg.write_text("a = 1  # trailing\n\n  b=two\n")
        assert read_config_file(str(cfg)) == {"a": "1", "b": "two"}


class TestTrajectory:
    def test_physical_time_column(self, tmp_path):
        argv = ("trajectory", "--omega1", "1", "--t-end", "2", "--n-points", "5", "--frequency-scale", "1e15")
        assert _run(tmp_path, *argv) == EXIT_OK
        _, header, rows = _csv(tmp_path / "trajectory.csv")
        assert header == ["t", "t_seconds", "r1"]
        assert float(rows[-1][1]) == pytest.approx(2e-15)
        assert float(rows[0][2]) == pytest.approx(math.pi)

    def test_without_scale(self, tmp_path):
        assert _run(tmp_path, "trajectory", "--n-points", "3") == EXIT_OK
        assert _csv(tmp_path / "trajectory.csv")[1] == ["t", "r1"]

    def test_bad_scale(self, tmp_path):
        assert _run(tmp_path, "trajectory", "--frequency-scale", "-1") == EXIT_CONFIG


class TestSweep:
    def test_spectrum_grid(self, tmp_path):
        argv = ("sweep", "--task", "spectrum", "--values", "2:4:3", "--dist", "lorentzian:0,0.5", "--workers", "1")
        assert _run(tmp_path, *argv) == EXIT_OK
        _, header, rows = _csv(tmp_path / "sweep.csv")
        assert header[:2] == ["index", "K"]
        assert [int(r[0]) for r in rows] == [0, 1, 2]
        leading = [float(r[header.index("leading_eigenvalue")]) for r in rows]
        assert leading == pytest.approx([0.5, 1.0, 1.5], abs=1e-10)

    def test_chsh_theta_parallel_matches_serial(self, tmp_path):
        base = ("sweep", "--task", "chsh", "--param", "theta", "--values", "0,22.5,45", "--prefix")
        assert _run(tmp_path, *base, "serial", "--workers", "1") == EXIT_OK
        assert _run(tmp_path, *base, "parallel", "--workers", "2") == EXIT_OK
        assert (tmp_path / "serial.csv").read_text().splitlines()[1:] == (
            tmp_path / "parallel.csv"
        ).read_text().splitlines()[1:]

    def test_param_not_allowed(self, tmp_path):
        assert _run(tmp_path, "sweep", "--task", "spectrum", "--param", "N") == EXIT_CONFIG

    def test_grid_parser(self):
        assert parse_grid("1:2:3") == [1.0, 1.5, 2.0]
        assert parse_grid("4, 5") == [4.0, 5.0]


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "kuramoto_epr", "chsh", "--n-events", "0", "--out-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["classical_bound"] == 2.0


def test_missing_subcommand():
    assert run([]) == EXIT_CONFIG
