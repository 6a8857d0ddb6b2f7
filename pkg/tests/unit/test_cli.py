"""
Unit tests for splinefuse.cli module.

Invokes every command through click's test runner on small inputs.
"""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from splinefuse import __version__
from splinefuse.cli import cli
from splinefuse.config import FusionConfig, SolverConfig, WindowConfig
from splinefuse.data import read_trajectory, trajectory_frame, write_trajectory


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small_config(temp_output_dir):
    """YAML configuration with a ten-knot window."""
    path = temp_output_dir / "small.yaml"
    FusionConfig(
        window=WindowConfig(window_knots=10, gate_threshold=None),
        solver=SolverConfig(max_iters=10),
    ).to_yaml(path)
    return path


def _trajectory_file(path, t, offset=0.0):
    n = len(t)
    arrays = {
        "t": t,
        "q": np.tile([1.0, 0.0, 0.0, 0.0], (n, 1)),
        "p": np.column_stack([t, np.zeros(n), np.full(n, offset)]),
    }
    return write_trajectory(trajectory_frame(arrays), path)


class TestCli:
    """Test the command group."""

    def test_version(self, runner):
        """Test --version prints the package version."""
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self, runner):
        """Test every command is registered."""
        result = runner.invoke(cli, ["--help"])
        for name in ("simulate", "run", "evaluate", "gradcheck", "fit-orientation"):
            assert name in result.output


class TestSimulateAndRun:
    """Test simulate followed by run."""

    def test_simulate(self, runner, temp_output_dir, small_config):
        """Test a dataset directory is written."""
        out = temp_output_dir / "dataset"
        result = runner.invoke(
            cli,
            ["simulate", str(out), "--duration", "2", "--noise-free", "--true-calib",
             "--config", str(small_config)],
        )
        assert result.exit_code == 0, result.output
        for name in ("imu.csv", "uwb_toa.csv", "anchors.json", "groundtruth.csv", "config.yaml"):
            assert (out / name).exists()
        assert FusionConfig.from_yaml(out / "config.yaml").window.window_knots == 10

    def test_simulate_tdoa(self, runner, temp_output_dir):
        """Test TDoA datasets get a TDoA stream file."""
        out = temp_output_dir / "dataset"
        result = runner.invoke(cli, ["simulate", str(out), "--duration", "1", "--mode", "tdoa"])
        assert result.exit_code == 0, result.output
        assert (out / "uwb_tdoa.csv").exists()
        assert not (out / "uwb_toa.csv").exists()

    def test_simulate_invalid(self, runner, temp_output_dir):
        """Test invalid scenario settings are reported as errors."""
        result = runner.invoke(
            cli, ["simulate", str(temp_output_dir / "x"), "--outlier-rate", "2"]
        )
        assert result.exit_code == 1
        assert "outlier_rate" in result.output

    @pytest.mark.slow
    def test_run_and_evaluate(self, runner, temp_output_dir, small_config):
        """Test a noise-free run is accurate and its trajectory can be evaluated."""
        data = temp_output_dir / "dataset"
        results = temp_output_dir / "results"
        simulated = runner.invoke(
            cli,
            ["simulate", str(data), "--duration", "3", "--noise-free", "--true-calib",
             "--config", str(small_config)],
        )
        assert simulated.exit_code == 0, simulated.output

        result = runner.invoke(cli, ["run", str(data), "--output", str(results), "--rate", "20"])
        assert result.exit_code == 0, result.output
        report = json.loads((results / "report.json").read_text())
        assert report["ape_rmse"] < 1e-4
        assert len(read_trajectory(results / "trajectory.csv")) > 0

        evaluated = runner.invoke(
            cli,
            ["evaluate", str(results / "trajectory.csv"), str(data / "groundtruth.csv"),
             "--json"],
        )
        assert evaluated.exit_code == 0, evaluated.output
        assert json.loads(evaluated.output)["ape_rmse"] < 1e-4

    def test_run_missing_dataset(self, runner, temp_output_dir):
        """Test a missing dataset directory is a usage error."""
        result = runner.invoke(cli, ["run", str(temp_output_dir / "nowhere")])
        assert result.exit_code == 2


class TestEvaluate:
    """Test the evaluate command."""

    def test_table(self, runner, temp_output_dir):
        """Test a constant 10 cm offset is reported."""
        t = np.linspace(0.0, 1.0, 11)
        est = _trajectory_file(temp_output_dir / "est.csv", t, offset=0.1)
        ref = _trajectory_file(temp_output_dir / "ref.csv", t)
        result = runner.invoke(cli, ["evaluate", str(est), str(ref)])
        assert result.exit_code == 0, result.output
        assert "0.1000" in result.output

    def test_no_overlap(self, runner, temp_output_dir):
        """Test disjoint trajectories fail with a message."""
        est = _trajectory_file(temp_output_dir / "est.csv", np.linspace(0.0, 1.0, 5))
        ref = _trajectory_file(temp_output_dir / "ref.csv", np.linspace(5.0, 6.0, 5))
        result = runner.invoke(cli, ["evaluate", str(est), str(ref)])
        assert result.exit_code == 1
        assert "No estimated sample" in result.output


class TestGradcheckCommand:
    """Test the gradcheck command."""

    def test_selected_suites(self, runner):
        """Test selected suites pass and exit with status 0."""
        result = runner.invoke(
            cli, ["gradcheck", "--instances", "5", "--suite", "jac_exp", "--suite", "toa_residual"]
        )
        assert result.exit_code == 0, result.output
        assert "jac_exp" in result.output
        assert "FAIL" not in result.output

    def test_failure_exit_code(self, runner):
        """Test an impossible tolerance exits with status 1."""
        result = runner.invoke(
            cli, ["gradcheck", "--instances", "3", "--suite", "jac_rotate", "--tolerance", "0"]
        )
        assert result.exit_code == 1

    def test_unknown_suite(self, runner):
        """Test unknown suites are rejected by click."""
        result = runner.invoke(cli, ["gradcheck", "--suite", "jac_lidar"])
        assert result.exit_code == 2


class TestFitOrientationCommand:
    """Test the fit-orientation command."""

    def test_small_fit(self, runner):
        """Test a small fit prints its RMSE."""
        result = runner.invoke(cli, ["fit-orientation", "--knots", "20", "--seed", "2"])
        assert result.exit_code == 0, result.output
        assert "SO(3) RMSE [rad]" in result.output
        assert "20" in result.output
