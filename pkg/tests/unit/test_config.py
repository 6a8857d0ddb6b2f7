"""
Unit tests for splinefuse.config modules.

Tests configuration sections, YAML loading and presets.
"""

import numpy as np
import pytest
import yaml

from splinefuse.config import (
    CalibrationConfig,
    FusionConfig,
    NoiseModel,
    SolverConfig,
    WindowConfig,
    get_orientation_fit_config,
    get_reference_config,
)
from splinefuse.exceptions import ConfigurationError


class TestFusionConfig:
    """Test FusionConfig class."""

    def test_default_config(self):
        """Test default configuration creation and validation."""
        config = FusionConfig()
        assert config.validate() is config
        assert config.window.knot_dt == 0.1
        assert config.window.window_knots == 100
        assert config.solver.max_iters == 20
        assert config.seed == 0

    def test_yaml_round_trip(self, temp_output_dir):
        """Test to_yaml and from_yaml preserve every value."""
        config = FusionConfig(
            window=WindowConfig(knot_dt=0.05, gate_threshold=None),
            noise=NoiseModel(cov_accel=[0.01, 0.02, 0.03]),
            calibration=CalibrationConfig(t_WU=[1.0, 2.0, 0.5]),
            seed=11,
        )
        path = temp_output_dir / "config.yaml"
        config.to_yaml(path)
        loaded = FusionConfig.from_yaml(path)
        assert loaded.to_dict() == config.to_dict()
        assert loaded.window.gate_threshold is None

    def test_partial_yaml(self, temp_output_dir):
        """Test omitted keys keep their defaults."""
        path = temp_output_dir / "config.yaml"
        path.write_text("window:\n  window_knots: 20\nsolver:\n  max_iters: 5\n")
        config = FusionConfig.from_yaml(path)
        assert config.window.window_knots == 20
        assert config.window.knot_dt == 0.1
        assert config.solver.max_iters == 5
        assert config.noise.cov_uwb == 0.01

    def test_empty_yaml(self, temp_output_dir):
        """Test an empty file gives the defaults."""
        path = temp_output_dir / "config.yaml"
        path.write_text("")
        assert FusionConfig.from_yaml(path).to_dict() == FusionConfig().to_dict()

    def test_unknown_section(self, temp_output_dir):
        """Test unknown sections are rejected."""
        path = temp_output_dir / "config.yaml"
        path.write_text(yaml.safe_dump({"plotting": {"dpi": 300}}))
        with pytest.raises(ConfigurationError) as info:
            FusionConfig.from_yaml(path)
        assert info.value.parameter == "plotting"

    def test_unknown_key(self, temp_output_dir):
        """Test unknown keys inside a section are rejected."""
        path = temp_output_dir / "config.yaml"
        path.write_text(yaml.safe_dump({"window": {"knot_dt": 0.1, "knots": 10}}))
        with pytest.raises(ConfigurationError, match="window"):
            FusionConfig.from_yaml(path)

    def test_not_a_mapping(self, temp_output_dir):
        """Test a YAML list is rejected."""
        path = temp_output_dir / "config.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError):
            FusionConfig.from_yaml(path)

    def test_missing_file(self, temp_output_dir):
        """Test a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            FusionConfig.from_yaml(temp_output_dir / "missing.yaml")


class TestWindowConfig:
    """Test WindowConfig validation."""

    @pytest.mark.parametrize(
        "changes, parameter",
        [
            ({"knot_dt": 0.0}, "knot_dt"),
            ({"window_knots": 7}, "window_knots"),
            ({"imu_downsample": 0}, "imu_downsample"),
            ({"gate_threshold": -0.1}, "gate_threshold"),
            ({"gate_warmup": -1}, "gate_warmup"),
            ({"calib_min_knots": 3}, "calib_min_knots"),
        ],
    )
    def test_invalid(self, changes, parameter):
        """Test invalid settings name the offending parameter."""
        with pytest.raises(ConfigurationError) as info:
            WindowConfig(**changes).validate()
        assert info.value.parameter == parameter

    def test_gate_disabled(self):
        """Test a missing gate threshold is valid."""
        WindowConfig(gate_threshold=None).validate()


class TestNoiseModel:
    """Test NoiseModel class."""

    def test_scalar_variance(self):
        """Test a scalar expands to an isotropic covariance."""
        np.testing.assert_allclose(NoiseModel(cov_accel=0.5).covariance("accel"), 0.5 * np.eye(3))

    def test_diagonal(self):
        """Test a vector becomes a diagonal covariance."""
        cov = NoiseModel(cov_gyro=[1.0, 2.0, 3.0]).covariance("gyro")
        np.testing.assert_allclose(cov, np.diag([1.0, 2.0, 3.0]))

    def test_bias_dimension(self):
        """Test the bias covariance is six-dimensional."""
        assert NoiseModel().covariance("bias").shape == (6, 6)

    def test_weights(self):
        """Test weights per residual kind."""
        noise = NoiseModel(weight_uwb=2.0, weight_imu=3.0)
        assert noise.weight("tdoa") == 2.0
        assert noise.weight("bias") == 3.0
        assert noise.weight("orientation") == 1.0

    def test_wrong_shape(self):
        """Test covariances of the wrong size are rejected."""
        with pytest.raises(ConfigurationError) as info:
            NoiseModel(cov_accel=[1.0, 2.0]).covariance("accel")
        assert info.value.parameter == "cov_accel"

    def test_not_positive_definite(self):
        """Test validation rejects indefinite covariances."""
        with pytest.raises(ConfigurationError, match="positive definite"):
            NoiseModel(cov_gyro=[1.0, -1.0, 1.0]).validate()

    def test_non_positive_weight(self):
        """Test validation rejects zero weights."""
        with pytest.raises(ConfigurationError):
            NoiseModel(weight_uwb=0.0).validate()


class TestSolverAndCalibrationConfig:
    """Test SolverConfig and CalibrationConfig validation."""

    @pytest.mark.parametrize(
        "changes",
        [
            {"max_iters": 0},
            {"lambda_up": 1.0},
            {"lambda_down": 1.5},
            {"cost_tol": 0.0},
            {"lambda_min": 0.0},
            {"lambda_min": 1e13},
        ],
    )
    def test_invalid_solver(self, changes):
        """Test invalid solver schedules are rejected."""
        with pytest.raises(ConfigurationError):
            SolverConfig(**changes).validate()

    @pytest.mark.parametrize(
        "changes",
        [{"q_WU": [0.0, 0.0, 0.0, 0.0]}, {"t_WU": [1.0, 2.0]}, {"g_mag": -9.81}],
    )
    def test_invalid_calibration(self, changes):
        """Test invalid calibration initials are rejected."""
        with pytest.raises(ConfigurationError):
            CalibrationConfig(**changes).validate()


class TestPresets:
    """Test preset configurations."""

    def test_reference(self):
        """Test the reference preset uses a 100-knot window at 10 Hz."""
        config = get_reference_config().validate()
        assert config.window.window_knots == 100
        assert config.window.knot_dt == 0.1
        assert config.window.gate_threshold == 0.5

    def test_orientation_fit(self):
        """Test tangent-unit orientation noise is squared into its variance."""
        config = get_orientation_fit_config(
            orientation_sigma=0.02, gyro_sigma=0.01
        ).validate()
        assert config.noise.cov_orientation == pytest.approx(4e-4)
        assert config.noise.cov_gyro == pytest.approx(1e-4)
        assert not config.window.calib_enabled
