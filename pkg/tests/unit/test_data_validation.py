"""
Unit tests for splinefuse.data.validation module.

Tests stream validators and the dataset report.
"""

import numpy as np
import pandas as pd
import pytest

from splinefuse.data import (
    LoadedDataset,
    frame_from_measurements,
    groundtruth_overlap,
    validate_dataset,
    validate_imu,
    validate_uwb,
)
from splinefuse.residuals import ImuMeasurement, UwbTdoaMeasurement, UwbToaMeasurement


def _imu_frame(times, accel=(0.0, 0.0, 9.81), gyro=(0.0, 0.0, 0.0)):
    return frame_from_measurements("imu", [ImuMeasurement(t, accel, gyro) for t in times])


class TestValidateImu:
    """Test validate_imu function."""

    def test_valid_stream(self):
        """Test a regular stream passes with its rate."""
        report = validate_imu(_imu_frame(np.arange(100) * 0.01))
        assert report["passed"]
        assert report["issues"] == []
        assert report["warnings"] == []
        assert report["rate_hz"] == pytest.approx(100.0)
        assert report["mean_accel_norm"] == pytest.approx(9.81)

    def test_empty_stream(self):
        """Test an empty stream only warns."""
        report = validate_imu(_imu_frame([]))
        assert report["passed"]
        assert report["warnings"] == ["IMU stream is empty"]

    def test_duplicates_and_gaps(self):
        """Test duplicate timestamps and long gaps are warned about."""
        regular = np.arange(10) * 0.01
        times = np.concatenate([regular, [regular[-1], 0.5, 0.51]])
        report = validate_imu(_imu_frame(times))
        assert report["passed"]
        assert any("duplicate" in w for w in report["warnings"])
        assert any("gaps" in w for w in report["warnings"])

    def test_non_finite(self):
        """Test NaN samples fail the report."""
        report = validate_imu(_imu_frame([0.0, 0.01], accel=(np.nan, 0.0, 9.81)))
        assert not report["passed"]
        assert report["issues"] == ["Non-finite IMU values"]

    def test_saturation(self):
        """Test implausible magnitudes are warned about."""
        report = validate_imu(_imu_frame([0.0, 0.01], accel=(0.0, 0.0, 500.0), gyro=(50.0, 0, 0)))
        assert len(report["warnings"]) == 2


class TestValidateUwb:
    """Test validate_uwb function."""

    def test_valid_toa(self, box_anchors):
        """Test ranges to known anchors pass."""
        df = frame_from_measurements(
            "toa", [UwbToaMeasurement(0.02 * i, f"a{i % 8}", 4.0) for i in range(20)]
        )
        report = validate_uwb(df, box_anchors)
        assert report["passed"]
        assert len(report["anchors_used"]) == 8

    def test_unknown_anchor(self, box_anchors):
        """Test ranges to unknown anchors fail."""
        df = frame_from_measurements("toa", [UwbToaMeasurement(0.0, "b9", 4.0)])
        report = validate_uwb(df, box_anchors)
        assert not report["passed"]
        assert "b9" in report["issues"][0]

    def test_negative_range(self, box_anchors):
        """Test negative ranges fail."""
        df = frame_from_measurements("toa", [UwbToaMeasurement(0.0, "a0", -1.0)])
        report = validate_uwb(df, box_anchors)
        assert report["issues"] == ["Found 1 negative ranges"]

    def test_empty(self, box_anchors):
        """Test an empty UWB stream fails."""
        report = validate_uwb(frame_from_measurements("toa", []), box_anchors)
        assert not report["passed"]

    def test_tdoa_same_anchor(self, box_anchors):
        """Test TDoA rows pairing an anchor with itself fail."""
        df = pd.DataFrame(
            {"t": [0.0], "anchor_i": ["a0"], "anchor_j": ["a0"], "ddist": [0.0]}
        )
        report = validate_uwb(df, box_anchors, mode="tdoa")
        assert not report["passed"]

    def test_tdoa_beyond_baseline(self, box_anchors):
        """Test differences longer than the baseline are warned about."""
        baseline = float(np.linalg.norm(box_anchors["a0"] - box_anchors["a1"]))
        df = frame_from_measurements(
            "tdoa", [UwbTdoaMeasurement(0.0, "a0", "a1", baseline + 1.0)]
        )
        report = validate_uwb(df, box_anchors, mode="tdoa")
        assert report["passed"]
        assert "baseline" in report["warnings"][0]


class TestValidateDataset:
    """Test validate_dataset function."""

    def _dataset(self, anchors, reordered=None, toa_range=4.0):
        return LoadedDataset(
            imu=[ImuMeasurement(0.01 * i, (0.0, 0.0, 9.81), (0.0, 0.0, 0.0)) for i in range(10)],
            toa=[UwbToaMeasurement(0.05, "a0", toa_range)],
            tdoa=[],
            anchors=anchors,
            reordered=reordered or {},
        )

    def test_passes(self, box_anchors):
        """Test a clean dataset passes."""
        summary = validate_dataset(self._dataset(box_anchors))
        assert summary["passed"]
        assert set(summary["streams"]) == {"imu", "toa"}

    def test_issue_prefixed(self, box_anchors):
        """Test stream issues are prefixed with the stream name."""
        summary = validate_dataset(self._dataset(box_anchors, toa_range=-1.0))
        assert not summary["passed"]
        assert summary["issues"][0].startswith("toa:")

    def test_strict_warnings(self, box_anchors):
        """Test strict mode fails on warnings."""
        dataset = self._dataset(box_anchors, reordered={"imu": 2})
        assert validate_dataset(dataset)["passed"]
        assert not validate_dataset(dataset, strict=True)["passed"]


class TestGroundtruthOverlap:
    """Test groundtruth_overlap function."""

    def test_fraction(self):
        """Test the fraction of samples inside the interval."""
        gt = pd.DataFrame({"t": np.arange(10, dtype=float)})
        assert groundtruth_overlap(gt, 2.0, 6.0) == pytest.approx(0.5)

    def test_missing(self):
        """Test missing ground truth overlaps nothing."""
        assert groundtruth_overlap(None, 0.0, 1.0) == 0.0
