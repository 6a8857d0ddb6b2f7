"""
Unit tests for splinefuse.data.io module.

Tests reading and writing of sensor streams, anchors, trajectories and
dataset directories.
"""

import json

import numpy as np
import pytest

from splinefuse.config import FusionConfig, WindowConfig
from splinefuse.data.io import (
    FILE_NAMES,
    DatasetBundle,
    load_dataset,
    read_anchors,
    read_measurements,
    read_table,
    read_trajectory,
    trajectory_frame,
    write_anchors,
    write_dataset,
    write_measurements,
    write_trajectory,
)
from splinefuse.exceptions import NoMeasurements, SchemaError
from splinefuse.residuals import (
    AnchorMap,
    ImuMeasurement,
    UwbTdoaMeasurement,
    UwbToaMeasurement,
)

IMU_HEADER = "t,ax,ay,az,gx,gy,gz\n"


def _write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestReadTable:
    """Test read_table function."""

    def test_nonexistent_file(self, temp_output_dir):
        """Test that a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            read_table(temp_output_dir / "missing.csv", "imu")

    def test_reads_schema_columns(self, temp_output_dir):
        """Test columns come back in schema order."""
        path = _write_text(
            temp_output_dir / "imu.csv",
            "gz,gy,gx,az,ay,ax,t\n0,0,0,9.81,0,0,0.0\n",
        )
        df = read_table(path, "imu")
        assert df.columns.tolist() == ["t", "ax", "ay", "az", "gx", "gy", "gz"]
        assert df["az"].iloc[0] == 9.81

    def test_missing_column(self, temp_output_dir):
        """Test a missing column is reported on the header line."""
        path = _write_text(temp_output_dir / "imu.csv", "t,ax,ay,az,gx,gy\n0,0,0,0,0,0\n")
        with pytest.raises(SchemaError) as info:
            read_table(path, "imu")
        assert info.value.column == "gz"
        assert info.value.line == 1

    def test_invalid_value_line(self, temp_output_dir):
        """Test the file line of a non-numeric cell is reported."""
        path = _write_text(
            temp_output_dir / "imu.csv",
            IMU_HEADER + "0.0,0,0,9.81,0,0,0\n0.01,abc,0,9.81,0,0,0\n",
        )
        with pytest.raises(SchemaError) as info:
            read_table(path, "imu")
        assert info.value.line == 3
        assert info.value.column == "ax"
        assert info.value.file == "imu.csv"

    def test_empty_file(self, temp_output_dir):
        """Test a file without header raises SchemaError."""
        path = _write_text(temp_output_dir / "imu.csv", "")
        with pytest.raises(SchemaError, match="header"):
            read_table(path, "imu")

    def test_out_of_order_rows_sorted(self, temp_output_dir):
        """Test out-of-order rows are sorted with a warning."""
        path = _write_text(
            temp_output_dir / "uwb_toa.csv",
            "t,anchor,range\n0.0,a0,1.0\n0.2,a1,2.0\n0.1,a2,3.0\n",
        )
        with pytest.warns(UserWarning, match="out-of-order"):
            df = read_table(path, "toa")
        assert df["t"].tolist() == [0.0, 0.1, 0.2]
        assert df["anchor"].tolist() == ["a0", "a2", "a1"]
        assert df.attrs["reordered"] == 1

    def test_numeric_anchor_ids_stay_strings(self, temp_output_dir):
        """Test anchor ids that look numeric are read as strings."""
        path = _write_text(temp_output_dir / "uwb_toa.csv", "t,anchor,range\n0.0,7,1.5\n")
        measurements = read_measurements(path, "toa")
        assert measurements[0].anchor_id == "7"


class TestMeasurementFiles:
    """Test write_measurements and read_measurements."""

    def test_imu_round_trip(self, temp_output_dir):
        """Test IMU records survive a write/read cycle exactly."""
        items = [
            ImuMeasurement(0.1 + 0.2, (0.1, -0.2, 9.81), (1e-3, 2e-3, -3e-3)),
            ImuMeasurement(0.31, (1.0 / 3.0, 0.0, 9.8), (0.0, 0.0, np.pi)),
        ]
        path = write_measurements(items, temp_output_dir / "imu.csv", "imu")
        loaded = read_measurements(path, "imu")
        assert loaded[0].t == 0.1 + 0.2
        assert loaded[1].accel[0] == 1.0 / 3.0
        assert loaded[1].gyro[2] == np.pi

    def test_tdoa_round_trip(self, temp_output_dir):
        """Test TDoA anchor pairs are preserved."""
        items = [UwbTdoaMeasurement(0.5, "a1", "a2", -0.25)]
        path = write_measurements(items, temp_output_dir / "uwb_tdoa.csv", "tdoa")
        loaded = read_measurements(path, "tdoa")[0]
        assert (loaded.anchor_i, loaded.anchor_j, loaded.ddist) == ("a1", "a2", -0.25)

    def test_unknown_kind(self, temp_output_dir):
        """Test unknown stream kinds are rejected."""
        with pytest.raises(ValueError, match="Unknown measurement kind"):
            write_measurements([], temp_output_dir / "x.csv", "lidar")


class TestAnchors:
    """Test read_anchors and write_anchors."""

    def test_round_trip(self, temp_output_dir, box_anchors):
        """Test anchors survive a write/read cycle."""
        path = write_anchors(box_anchors, temp_output_dir / "anchors.json")
        loaded = read_anchors(path)
        assert loaded.ids == box_anchors.ids
        np.testing.assert_array_equal(loaded["a3"], box_anchors["a3"])

    def test_invalid_json(self, temp_output_dir):
        """Test malformed JSON is reported with its line."""
        path = _write_text(temp_output_dir / "anchors.json", '{\n"a0": [0, 0, 0],\n')
        with pytest.raises(SchemaError) as info:
            read_anchors(path)
        assert info.value.line is not None

    @pytest.mark.parametrize("content", [{}, [1, 2, 3], {"a0": [0.0, 1.0]}])
    def test_invalid_content(self, temp_output_dir, content):
        """Test empty maps, lists and bad positions raise SchemaError."""
        path = _write_text(temp_output_dir / "anchors.json", json.dumps(content))
        with pytest.raises(SchemaError):
            read_anchors(path)


class TestTrajectory:
    """Test trajectory tables."""

    def _arrays(self, n=5):
        q = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        return {
            "t": np.linspace(0.0, 0.4, n),
            "q": q,
            "p": np.arange(3 * n, dtype=float).reshape(n, 3),
            "v": np.ones((n, 3)),
            "omega": np.zeros((n, 3)),
        }

    def test_full_schema(self):
        """Test velocities switch to the trajectory schema."""
        df = trajectory_frame(self._arrays())
        assert {"vx", "wz"} <= set(df.columns)

    def test_pose_only_schema(self):
        """Test pose-only arrays give the ground-truth schema."""
        arrays = self._arrays()
        del arrays["v"]
        df = trajectory_frame(arrays)
        assert df.columns.tolist() == ["t", "qw", "qx", "qy", "qz", "px", "py", "pz"]

    def test_round_trip(self, temp_output_dir):
        """Test a written trajectory reads back as poses."""
        df = trajectory_frame(self._arrays())
        path = write_trajectory(df, temp_output_dir / "trajectory.csv")
        loaded = read_trajectory(path)
        assert loaded.columns.tolist() == ["t", "qw", "qx", "qy", "qz", "px", "py", "pz"]
        np.testing.assert_array_equal(loaded.to_numpy(), df[loaded.columns].to_numpy())


class TestDataset:
    """Test dataset directories."""

    @pytest.fixture
    def records(self, box_anchors):
        imu = [ImuMeasurement(0.01 * i, (0.0, 0.0, 9.81), (0.0, 0.0, 0.0)) for i in range(5)]
        toa = [UwbToaMeasurement(0.015 + 0.02 * i, f"a{i}", 5.0 + i) for i in range(3)]
        return box_anchors, imu, toa

    def test_round_trip(self, temp_output_dir, records):
        """Test a written dataset loads with every stream."""
        anchors, imu, toa = records
        config = FusionConfig(window=WindowConfig(knot_dt=0.05, window_knots=12))
        bundle = write_dataset(temp_output_dir, anchors, imu=imu, toa=toa, config=config)
        assert bundle.tdoa is None
        dataset = load_dataset(temp_output_dir)
        assert len(dataset) == 8
        assert dataset.toa == toa
        assert dataset.config.window.knot_dt == 0.05
        assert dataset.config.to_dict() == config.to_dict()
        assert dataset.groundtruth is None

    def test_merged_order(self, temp_output_dir, records):
        """Test the merged stream is time-ordered."""
        anchors, imu, toa = records
        write_dataset(temp_output_dir, anchors, imu=imu, toa=toa)
        merged = load_dataset(temp_output_dir).merged()
        times = [m.t for m in merged]
        assert times == sorted(times)
        assert isinstance(merged[0], ImuMeasurement)

    def test_missing_uwb(self, temp_output_dir, records):
        """Test a directory without UWB files is rejected."""
        anchors, imu, _ = records
        write_dataset(temp_output_dir, anchors, imu=imu)
        with pytest.raises(FileNotFoundError, match="UWB"):
            DatasetBundle.from_directory(temp_output_dir)

    def test_empty_uwb(self, temp_output_dir, records):
        """Test a UWB file with only a header raises NoMeasurements."""
        anchors, imu, _ = records
        write_dataset(temp_output_dir, anchors, imu=imu)
        _write_text(temp_output_dir / FILE_NAMES["toa"], "t,anchor,range\n")
        with pytest.raises(NoMeasurements):
            load_dataset(temp_output_dir)

    def test_missing_directory(self, temp_output_dir):
        """Test a missing directory raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_dataset(temp_output_dir / "nowhere")

    def test_reordered_counts(self, temp_output_dir, records):
        """Test displaced rows are counted per stream."""
        anchors, imu, toa = records
        write_dataset(temp_output_dir, anchors, imu=imu[::-1], toa=toa)
        with pytest.warns(UserWarning):
            dataset = load_dataset(temp_output_dir)
        assert dataset.reordered["imu"] == 4
        assert [m.t for m in dataset.imu] == [m.t for m in imu]
