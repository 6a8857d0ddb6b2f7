"""
Unit tests for splinefuse.residuals.weighting module.

Tests covariance whitening and UWB outlier gating.
"""

import numpy as np
import pytest

from splinefuse.config import NoiseModel
from splinefuse.exceptions import ConfigurationError, NonSPDCovariance
from splinefuse.residuals import (
    MeasurementSet,
    ToaBatch,
    UwbToaMeasurement,
    apply_gate,
    gate_outlier,
    toa_residual,
    whiten,
    whitening_matrix,
)


class TestWhiteningMatrix:
    """Test whitening_matrix function."""

    def test_scalar_variance(self):
        """Test variance 4 gives scale one half."""
        np.testing.assert_allclose(whitening_matrix(4.0), [[0.5]])

    def test_weight(self):
        """Test the weight enters as its square root."""
        np.testing.assert_allclose(whitening_matrix(1.0, weight=4.0), [[2.0]])

    def test_full_matrix(self):
        """Test W^T W equals the inverse covariance."""
        cov = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.5]])
        scale = whitening_matrix(cov)
        np.testing.assert_allclose(scale.T @ scale, np.linalg.inv(cov), atol=1e-12)

    def test_not_positive_definite(self):
        """Test indefinite covariance raises NonSPDCovariance."""
        with pytest.raises(NonSPDCovariance, match="positive definite"):
            whitening_matrix(np.diag([1.0, -1.0]), kind="accel")

    def test_not_symmetric(self):
        """Test asymmetric covariance raises NonSPDCovariance."""
        with pytest.raises(NonSPDCovariance, match="symmetric"):
            whitening_matrix(np.array([[1.0, 0.5], [0.0, 1.0]]))

    @pytest.mark.parametrize("weight", [0.0, -1.0])
    def test_non_positive_weight(self, weight):
        """Test zero or negative weights are rejected."""
        with pytest.raises(NonSPDCovariance):
            whitening_matrix(1.0, weight=weight)


class TestWhiten:
    """Test whiten function."""

    def test_halves_residual(self, identity_state, box_anchors):
        """Test UWB variance 4 halves residuals and Jacobians."""
        raw = toa_residual(
            identity_state, UwbToaMeasurement(0.3, "a0", 6.0), anchors=box_anchors
        )
        white = whiten(raw, NoiseModel(cov_uwb=4.0))
        np.testing.assert_allclose(white.residual, 0.5 * raw.residual)
        np.testing.assert_allclose(white.jac_knots, 0.5 * raw.jac_knots)
        np.testing.assert_allclose(white.jac_calib, 0.5 * raw.jac_calib)

    def test_cost_is_weighted_mahalanobis(self, identity_state, box_anchors):
        """Test the whitened cost equals w r^2 / sigma^2."""
        raw = toa_residual(
            identity_state, UwbToaMeasurement(0.3, "a0", 6.0), anchors=box_anchors
        )
        noise = NoiseModel(cov_uwb=0.01, weight_uwb=3.0)
        expected = 3.0 * raw.residual[0, 0] ** 2 / 0.01
        assert whiten(raw, noise).cost() == pytest.approx(expected)

    def test_unknown_kind(self):
        """Test the noise model rejects unknown residual kinds."""
        with pytest.raises(ConfigurationError):
            NoiseModel().covariance("lidar")


class TestGateOutlier:
    """Test gate_outlier function."""

    def test_boundary_accepted(self):
        """Test a deviation equal to the threshold is accepted."""
        assert bool(gate_outlier(5.0, 5.5, 0.5))

    def test_beyond_rejected(self):
        """Test a deviation above the threshold is rejected."""
        assert not bool(gate_outlier(5.0, 5.6, 0.5))

    def test_elementwise(self):
        """Test arrays are gated elementwise."""
        accept = gate_outlier(np.array([1.0, 2.0, 3.0]), np.array([1.1, 3.0, 2.8]), 0.5)
        assert accept.tolist() == [True, False, True]

    @pytest.mark.parametrize("threshold", [0.0, -0.5])
    def test_threshold_positive(self, threshold):
        """Test non-positive thresholds are rejected."""
        with pytest.raises(ValueError):
            gate_outlier(1.0, 1.0, threshold)


class TestApplyGate:
    """Test apply_gate function."""

    def test_rejects_outlier(self, identity_state, box_anchors):
        """Test only the corrupted range is removed."""
        true_range = float(np.linalg.norm(box_anchors["a0"]))
        ranges = np.array([true_range, true_range + 2.0, true_range + 0.1])
        toa = ToaBatch(
            np.array([0.25, 0.3, 0.35]), np.array(["a0", "a0", "a0"], dtype=object), ranges
        )
        gated, rejected = apply_gate(
            identity_state, MeasurementSet(toa=toa, anchors=box_anchors), 0.5
        )
        assert rejected == 1
        assert gated.toa.range.tolist() == [ranges[0], ranges[2]]

    def test_keeps_out_of_window_rows(self, identity_state, box_anchors):
        """Test rows outside the window are left for the solver to skip."""
        toa = ToaBatch(np.array([0.9]), np.array(["a0"], dtype=object), np.array([100.0]))
        gated, rejected = apply_gate(
            identity_state, MeasurementSet(toa=toa, anchors=box_anchors), 0.5
        )
        assert rejected == 0
        assert len(gated.toa) == 1

    def test_without_uwb(self, identity_state):
        """Test sets without UWB pass through."""
        gated, rejected = apply_gate(identity_state, MeasurementSet(), 0.5)
        assert rejected == 0
        assert len(gated) == 0
