"""Command-line interface: commands, exit codes, reproducibility."""

import json
import math

import numpy as np
import pytest

from steinpp.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEstimate:
    def test_known_pattern(self, tmp_path, capsys):
        f = tmp_path / "pts.csv"
        f.write_text("0.5,0.0\n0.0,0.6\n-0.3,0.1\n")
        code, out, _ = run_cli(
            capsys, "estimate", "--file", str(f), "--d", "2",
            "--k", "2", "--gamma", "-1.5", "--kappa", "2.5",
        )
        assert code == 0
        lines = dict(line.split() for line in out.strip().split("\n"))
        assert float(lines["mle"]) == pytest.approx(3 / math.pi, rel=1e-12)
        y = 0.25  # second smallest of the squared norms {0.25, 0.36, 0.10}
        expected = 3 / math.pi + 4 / (2 * math.pi) * (-1.5) * 2.5 * y * (1 - y) ** 1.5
        assert float(lines["stein"]) == pytest.approx(expected, rel=1e-12)

    def test_empty_file_gives_zeros(self, tmp_path, capsys):
        f = tmp_path / "empty.csv"
        f.write_text("")
        code, out, _ = run_cli(
            capsys, "estimate", "--file", str(f), "--d", "2",
            "--k", "11", "--gamma", "-0.8", "--kappa", "4.0",
        )
        assert code == 0
        lines = dict(line.split() for line in out.strip().split("\n"))
        assert float(lines["mle"]) == 0.0
        assert float(lines["stein"]) == 0.0

    def test_missing_file_is_usage_error(self, capsys):
        code, _, err = run_cli(
            capsys, "estimate", "--file", "/nonexistent.csv", "--d", "2",
            "--k", "1", "--gamma", "0.0", "--kappa", "2.0",
        )
        assert code == 1
        assert "error" in err

    def test_missing_flags_rejected(self, tmp_path, capsys):
        f = tmp_path / "pts.csv"
        f.write_text("0.1,0.1\n")
        code, _, err = run_cli(capsys, "estimate", "--file", str(f), "--d", "2")
        assert code == 1
        assert "--k" in err

    def test_nonunit_radius_rescales(self, tmp_path, capsys):
        f = tmp_path / "pts.csv"
        f.write_text("1.0,0.0\n0.0,1.2\n")
        code, out, _ = run_cli(
            capsys, "estimate", "--file", str(f), "--d", "2", "--radius", "2",
            "--k", "1", "--gamma", "-1.0", "--kappa", "2.0",
        )
        assert code == 0
        lines = dict(line.split() for line in out.strip().split("\n"))
        assert float(lines["mle"]) == pytest.approx(2 / (4 * math.pi), rel=1e-12)


class TestGainCommand:
    def test_matches_library(self, capsys):
        code, out, _ = run_cli(
            capsys, "gain", "--theta", "10", "--d", "2", "--k", "34",
            "--gamma", "-12.0", "--kappa", "2.5", "--samples", "50000", "--seed", "3",
        )
        assert code == 0
        lines = dict(line.split() for line in out.strip().split("\n"))
        from steinpp import BallWindow, ExponentialPhi, expected_gain

        est = expected_gain(
            34, ExponentialPhi(-12.0, 2.5), 10.0, BallWindow(2), 50_000,
            np.random.default_rng(3),
        )
        assert float(lines["gain"]) == est.value

    def test_requires_parameters(self, capsys):
        code, _, err = run_cli(capsys, "gain", "--theta", "10")
        assert code == 1


class TestOptimizeCommand:
    def test_runs_and_reports(self, capsys):
        code, out, _ = run_cli(
            capsys, "optimize", "--theta", "5", "--d", "1",
            "--samples", "5000", "--seed", "11",
        )
        assert code == 0
        lines = dict(line.split() for line in out.strip().split("\n"))
        assert 7 <= int(lines["k_star"]) <= 12
        assert float(lines["gamma_star"]) < 0

    def test_datadriven_variant(self, capsys):
        code, out, _ = run_cli(
            capsys, "optimize", "--theta", "5", "--d", "1", "--rho", "1.0",
            "--samples", "4000", "--seed", "11",
        )
        assert code == 0
        assert "k_star" in out


class TestStudies:
    def test_table1_reproducible_files(self, tmp_path, capsys):
        args = [
            "table1", "--seed", "7", "--reps", "500", "--samples", "2000",
        ]
        f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(f1)]) == 0
        assert main(args + ["--out", str(f2)]) == 0
        capsys.readouterr()
        assert f1.read_bytes() == f2.read_bytes()
        meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
        assert meta["seed"] == 7

    def test_pr_curve_stdout(self, capsys):
        code, out, _ = run_cli(
            capsys, "pr-curve", "--seed", "5", "--reps", "5000", "--samples", "20000"
        )
        assert code == 0
        assert out.startswith("theta,kappa_star,gain_pct")


class TestParsing:
    def test_unknown_flag(self, capsys):
        assert main(["gain", "--bogus", "1"]) == 1

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_version(self, capsys):
        assert main(["--version"]) == 0


class TestSelftestCommand:
    def test_passes_on_correct_build(self, capsys):
        code, out, _ = run_cli(capsys, "selftest", "--seed", "5", "--samples", "3000")
        assert code == 0
        assert "FAIL" not in out
        assert out.count("PASS") >= 10
