"""
Input/Output functions for sensor datasets and trajectories.

A dataset directory holds one CSV file per stream, an anchor map in JSON
and optionally a ground-truth trajectory and a YAML configuration. Floats
are written with 17 significant digits and read back with pandas'
round-trip parser, so timestamps survive a write/read cycle bit for bit.
"""

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..config import FusionConfig
from ..exceptions import NoMeasurements, SchemaError, validate_required_columns
from ..residuals import (
    AnchorMap,
    ImuMeasurement,
    OrientationMeasurement,
    UwbTdoaMeasurement,
    UwbToaMeasurement,
)

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

#: Column layout of every file kind.
SCHEMAS: Dict[str, List[str]] = {
    "imu": ["t", "ax", "ay", "az", "gx", "gy", "gz"],
    "toa": ["t", "anchor", "range"],
    "tdoa": ["t", "anchor_i", "anchor_j", "ddist"],
    "orientation": ["t", "qw", "qx", "qy", "qz"],
    "groundtruth": ["t", "qw", "qx", "qy", "qz", "px", "py", "pz"],
    "trajectory": [
        "t", "qw", "qx", "qy", "qz", "px", "py", "pz",
        "vx", "vy", "vz", "wx", "wy", "wz",
    ],
}

#: Columns read as strings rather than numbers.
ID_COLUMNS = {"anchor", "anchor_i", "anchor_j"}

FILE_NAMES = {
    "imu": "imu.csv",
    "toa": "uwb_toa.csv",
    "tdoa": "uwb_tdoa.csv",
    "anchors": "anchors.json",
    "groundtruth": "groundtruth.csv",
    "config": "config.yaml",
}


def read_table(filepath: Union[str, Path], kind: str) -> pd.DataFrame:
    """
    Read a CSV file of the given kind and check its schema.

    Rows are returned sorted by ``t``. If the file was out of order a
    warning is issued and the number of displaced rows is stored in
    ``df.attrs["reordered"]``.

    Parameters
    ----------
    filepath : str or Path
        CSV file with a header row.
    kind : str
        Key of :data:`SCHEMAS`.

    Returns
    -------
    pd.DataFrame
        Table with the schema columns in order.

    Raises
    ------
    SchemaError
        If columns are missing or a cell is not numeric; ``line`` is the
        1-based line in the file.

    Examples
    --------
    >>> imu = read_table("data/imu.csv", "imu")
    >>> imu.columns.tolist()
    ['t', 'ax', 'ay', 'az', 'gx', 'gy', 'gz']
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")
    columns = SCHEMAS[kind]

    try:
        df = pd.read_csv(
            filepath,
            dtype={c: str for c in columns if c in ID_COLUMNS},
            float_precision="round_trip",
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise SchemaError("File has no header row", file=filepath.name, line=1) from None
    validate_required_columns(df, columns, filepath.name)
    df = df[columns].copy()

    for col in columns:
        if col in ID_COLUMNS:
            missing = df[col].isnull().to_numpy()
        else:
            values = pd.to_numeric(df[col], errors="coerce")
            missing = values.isnull().to_numpy()
            df[col] = values.astype(float)
        if missing.any():
            raise SchemaError(
                f"Invalid value in column '{col}'",
                file=filepath.name,
                line=int(np.flatnonzero(missing)[0]) + 2,
                column=col,
            )

    t = df["t"].to_numpy()
    reordered = int(np.count_nonzero(np.diff(t) < 0)) if len(t) > 1 else 0
    if reordered:
        warnings.warn(
            f"{filepath.name}: {reordered} out-of-order timestamps, rows sorted by time"
        )
        df = df.sort_values("t", kind="mergesort").reset_index(drop=True)
    df.attrs["source_file"] = str(filepath)
    df.attrs["reordered"] = reordered
    return df


def write_table(df: pd.DataFrame, filepath: Union[str, Path], kind: str) -> Path:
    """Write ``df`` with the columns of ``kind`` and 17 significant digits."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    validate_required_columns(df, SCHEMAS[kind], filepath.name)
    df[SCHEMAS[kind]].to_csv(filepath, index=False, float_format=FLOAT_FORMAT)
    return filepath


def read_anchors(filepath: Union[str, Path]) -> AnchorMap:
    """Read ``{"id": [x, y, z], ...}`` from a JSON file."""
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(str(e), file=filepath.name, line=e.lineno) from None
    if not isinstance(data, dict) or not data:
        raise SchemaError("Anchors file must map anchor ids to positions", file=filepath.name)
    try:
        return AnchorMap(data)
    except (TypeError, ValueError) as e:
        raise SchemaError(str(e), file=filepath.name) from None


def write_anchors(anchors: AnchorMap, filepath: Union[str, Path]) -> Path:
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(anchors.to_dict(), f, indent=2)
    return filepath


# ----------------------------------------------------------------------
# Measurement <-> table conversion


def imu_from_frame(df: pd.DataFrame) -> List[ImuMeasurement]:
    values = df[SCHEMAS["imu"]].to_numpy(dtype=float)
    return [ImuMeasurement(row[0], tuple(row[1:4]), tuple(row[4:7])) for row in values]


def toa_from_frame(df: pd.DataFrame) -> List[UwbToaMeasurement]:
    return [
        UwbToaMeasurement(float(t), str(a), float(r))
        for t, a, r in zip(df["t"], df["anchor"], df["range"])
    ]


def tdoa_from_frame(df: pd.DataFrame) -> List[UwbTdoaMeasurement]:
    return [
        UwbTdoaMeasurement(float(t), str(i), str(j), float(d))
        for t, i, j, d in zip(df["t"], df["anchor_i"], df["anchor_j"], df["ddist"])
    ]


def orientation_from_frame(df: pd.DataFrame) -> List[OrientationMeasurement]:
    values = df[SCHEMAS["orientation"]].to_numpy(dtype=float)
    return [OrientationMeasurement(row[0], tuple(row[1:5])) for row in values]


def frame_from_measurements(kind: str, items: Sequence) -> pd.DataFrame:
    """Tabulate measurement records of one stream with the schema of ``kind``."""
    if kind == "imu":
        rows = [(m.t, *m.accel, *m.gyro) for m in items]
    elif kind == "toa":
        rows = [(m.t, m.anchor_id, m.range) for m in items]
    elif kind == "tdoa":
        rows = [(m.t, m.anchor_i, m.anchor_j, m.ddist) for m in items]
    elif kind == "orientation":
        rows = [(m.t, *m.q) for m in items]
    else:
        raise ValueError(f"Unknown measurement kind: {kind}")
    return pd.DataFrame(rows, columns=SCHEMAS[kind])


_READERS = {
    "imu": imu_from_frame,
    "toa": toa_from_frame,
    "tdoa": tdoa_from_frame,
    "orientation": orientation_from_frame,
}


def read_measurements(filepath: Union[str, Path], kind: str) -> list:
    """Read a stream file into time-sorted measurement records."""
    return _READERS[kind](read_table(filepath, kind))


def write_measurements(items: Sequence, filepath: Union[str, Path], kind: str) -> Path:
    return write_table(frame_from_measurements(kind, items), filepath, kind)


# ----------------------------------------------------------------------
# Trajectories


def trajectory_frame(arrays: Dict[str, np.ndarray]) -> pd.DataFrame:
    """
    Tabulate sampled states (``t, q, p`` and optionally ``v, omega``).

    Returns the trajectory schema when velocities are present, otherwise
    the ground-truth schema.
    """
    data = {"t": np.asarray(arrays["t"], dtype=float)}
    for i, name in enumerate(("qw", "qx", "qy", "qz")):
        data[name] = arrays["q"][:, i]
    for i, name in enumerate(("px", "py", "pz")):
        data[name] = arrays["p"][:, i]
    if "v" in arrays and "omega" in arrays:
        for i, name in enumerate(("vx", "vy", "vz")):
            data[name] = arrays["v"][:, i]
        for i, name in enumerate(("wx", "wy", "wz")):
            data[name] = arrays["omega"][:, i]
    return pd.DataFrame(data)


def read_trajectory(filepath: Union[str, Path]) -> pd.DataFrame:
    """Read a trajectory or ground-truth file (pose columns are required)."""
    return read_table(filepath, "groundtruth")


def write_trajectory(df: pd.DataFrame, filepath: Union[str, Path]) -> Path:
    kind = "trajectory" if set(SCHEMAS["trajectory"]) <= set(df.columns) else "groundtruth"
    return write_table(df, filepath, kind)


# ----------------------------------------------------------------------
# Dataset bundles


@dataclass
class DatasetBundle:
    """
    Files making up one dataset.

    Exactly one of ``toa`` and ``tdoa`` is usually set; both are accepted.
    """

    imu: Optional[Path]
    anchors: Path
    toa: Optional[Path] = None
    tdoa: Optional[Path] = None
    groundtruth: Optional[Path] = None
    config: Optional[Path] = None

    def __post_init__(self):
        for name in ("imu", "anchors", "toa", "tdoa", "groundtruth", "config"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))

    @classmethod
    def from_directory(cls, directory: Union[str, Path]) -> "DatasetBundle":
        """
        Collect the standard file names present in ``directory``.

        Raises
        ------
        FileNotFoundError
            If the directory, the anchors file or every UWB file is missing.
        """
        directory = Path(directory)
        if not directory.is_dir():
            raise FileNotFoundError(f"Dataset directory not found: {directory}")

        def optional(key):
            path = directory / FILE_NAMES[key]
            return path if path.exists() else None

        bundle = cls(
            imu=optional("imu"),
            anchors=directory / FILE_NAMES["anchors"],
            toa=optional("toa"),
            tdoa=optional("tdoa"),
            groundtruth=optional("groundtruth"),
            config=optional("config"),
        )
        bundle.validate()
        return bundle

    def validate(self) -> None:
        if not self.anchors.exists():
            raise FileNotFoundError(f"Anchors file not found: {self.anchors}")
        if self.toa is None and self.tdoa is None:
            raise FileNotFoundError("Dataset needs a UWB file (uwb_toa.csv or uwb_tdoa.csv)")
        for name in ("imu", "toa", "tdoa", "groundtruth", "config"):
            path = getattr(self, name)
            if path is not None and not path.exists():
                raise FileNotFoundError(f"File not found: {path}")


@dataclass
class LoadedDataset:
    """In-memory streams of a :class:`DatasetBundle`."""

    imu: List[ImuMeasurement]
    toa: List[UwbToaMeasurement]
    tdoa: List[UwbTdoaMeasurement]
    anchors: AnchorMap
    config: Optional[FusionConfig] = None
    groundtruth: Optional[pd.DataFrame] = None
    reordered: Dict[str, int] = field(default_factory=dict)

    def merged(self) -> list:
        """All measurements in one stream ordered by time (IMU before UWB on ties)."""
        streams = [self.imu, self.toa, self.tdoa]
        keyed = [(m.t, rank, i, m) for rank, s in enumerate(streams) for i, m in enumerate(s)]
        keyed.sort(key=lambda item: item[:3])
        return [item[3] for item in keyed]

    def __len__(self) -> int:
        return len(self.imu) + len(self.toa) + len(self.tdoa)


def load_dataset(bundle: Union[DatasetBundle, str, Path]) -> LoadedDataset:
    """
    Load every stream of a dataset.

    Parameters
    ----------
    bundle : DatasetBundle or path
        Bundle, or a directory with the standard file names.

    Returns
    -------
    LoadedDataset
        Time-sorted streams, anchors, the configuration if present and the
        ground truth if present.

    Raises
    ------
    SchemaError
        If a file violates its schema.
    NoMeasurements
        If the UWB files hold no rows.
    """
    if not isinstance(bundle, DatasetBundle):
        bundle = DatasetBundle.from_directory(bundle)
    bundle.validate()

    reordered = {}
    streams = {}
    for kind in ("imu", "toa", "tdoa"):
        path = getattr(bundle, kind)
        if path is None:
            streams[kind] = []
            continue
        df = read_table(path, kind)
        reordered[kind] = df.attrs["reordered"]
        streams[kind] = _READERS[kind](df)

    if not streams["toa"] and not streams["tdoa"]:
        raise NoMeasurements("Dataset needs at least one UWB range measurement")

    groundtruth = read_trajectory(bundle.groundtruth) if bundle.groundtruth else None
    config = FusionConfig.from_yaml(bundle.config) if bundle.config else None
    logger.info(
        "Loaded %d IMU, %d ToA and %d TDoA measurements",
        len(streams["imu"]),
        len(streams["toa"]),
        len(streams["tdoa"]),
    )
    return LoadedDataset(
        imu=streams["imu"],
        toa=streams["toa"],
        tdoa=streams["tdoa"],
        anchors=read_anchors(bundle.anchors),
        config=config,
        groundtruth=groundtruth,
        reordered=reordered,
    )


def write_dataset(
    directory: Union[str, Path],
    anchors: AnchorMap,
    imu: Sequence[ImuMeasurement] = (),
    toa: Sequence[UwbToaMeasurement] = (),
    tdoa: Sequence[UwbTdoaMeasurement] = (),
    groundtruth: Optional[pd.DataFrame] = None,
    config: Optional[FusionConfig] = None,
) -> DatasetBundle:
    """Write streams with the standard file names and return the bundle."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {"anchors": write_anchors(anchors, directory / FILE_NAMES["anchors"])}
    if len(imu):
        paths["imu"] = write_measurements(imu, directory / FILE_NAMES["imu"], "imu")
    if len(toa):
        paths["toa"] = write_measurements(toa, directory / FILE_NAMES["toa"], "toa")
    if len(tdoa):
        paths["tdoa"] = write_measurements(tdoa, directory / FILE_NAMES["tdoa"], "tdoa")
    if groundtruth is not None:
        paths["groundtruth"] = write_trajectory(groundtruth, directory / FILE_NAMES["groundtruth"])
    if config is not None:
        paths["config"] = directory / FILE_NAMES["config"]
        config.to_yaml(paths["config"])
    return DatasetBundle(
        imu=paths.get("imu"),
        anchors=paths["anchors"],
        toa=paths.get("toa"),
        tdoa=paths.get("tdoa"),
        groundtruth=paths.get("groundtruth"),
        config=paths.get("config"),
    )
