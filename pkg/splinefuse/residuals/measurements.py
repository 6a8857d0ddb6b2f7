"""
Measurement records, batch containers, anchors and calibration.

Single measurements are small frozen dataclasses as they arrive from a
stream. Residual evaluation works on batches: each batch stores its
timestamps and values as arrays so a whole window of one sensor kind is
processed with one vectorized call.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import UnknownAnchor
from ..geometry import quaternion as quat


@dataclass(frozen=True)
class ImuMeasurement:
    """Accelerometer (m/s^2) and gyroscope (rad/s) sample in the body frame."""

    t: float
    accel: Tuple[float, float, float]
    gyro: Tuple[float, float, float]

    stream = "imu"


@dataclass(frozen=True)
class UwbToaMeasurement:
    """Tag-to-anchor range in meters."""

    t: float
    anchor_id: str
    range: float

    stream = "toa"


@dataclass(frozen=True)
class UwbTdoaMeasurement:
    """Range difference ``d(anchor_i) - d(anchor_j)`` in meters."""

    t: float
    anchor_i: str
    anchor_j: str
    ddist: float

    stream = "tdoa"

    def __post_init__(self):
        if self.anchor_i == self.anchor_j:
            raise ValueError(f"TDoA anchors must differ, got {self.anchor_i!r} twice")


@dataclass(frozen=True)
class OrientationMeasurement:
    """Direct orientation observation, scalar-first unit quaternion."""

    t: float
    q: Tuple[float, float, float, float]

    stream = "orientation"


class AnchorMap:
    """
    Anchor positions in the UWB frame, keyed by anchor id.

    Examples
    --------
    >>> anchors = AnchorMap({"a0": [3.0, 4.0, 0.0]})
    >>> anchors.positions(["a0"]).tolist()
    [[3.0, 4.0, 0.0]]
    """

    def __init__(self, anchors: Mapping[str, Sequence[float]]):
        self._anchors: Dict[str, np.ndarray] = {}
        for anchor_id, position in anchors.items():
            position = np.asarray(position, dtype=float)
            if position.shape != (3,):
                raise ValueError(
                    f"Anchor {anchor_id!r} needs an [x, y, z] position, got {position.shape}"
                )
            self._anchors[str(anchor_id)] = position

    def __contains__(self, anchor_id) -> bool:
        return str(anchor_id) in self._anchors

    def __getitem__(self, anchor_id) -> np.ndarray:
        try:
            return self._anchors[str(anchor_id)]
        except KeyError:
            raise UnknownAnchor("Anchor not in map", anchor=anchor_id) from None

    def __len__(self) -> int:
        return len(self._anchors)

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(self._anchors)

    def positions(self, ids: Iterable[str]) -> np.ndarray:
        """Stack positions for ``ids``; raises UnknownAnchor on the first miss."""
        ids = list(ids)
        if not ids:
            return np.zeros((0, 3))
        return np.stack([self[anchor_id] for anchor_id in ids])

    def to_dict(self) -> Dict[str, list]:
        return {anchor_id: pos.tolist() for anchor_id, pos in self._anchors.items()}


@dataclass
class Calibration:
    """
    Extrinsic from estimation (world) frame to UWB frame, gravity and tag lever arm.

    ``q_WU`` and ``t_WU`` map a world point ``y`` to ``R(q_WU) y + t_WU`` in the
    UWB frame. Gravity in the world frame is ``g_mag * g_dir``.
    """

    q_WU: np.ndarray = field(default_factory=lambda: quat.identity())
    t_WU: np.ndarray = field(default_factory=lambda: np.zeros(3))
    g_dir: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    g_mag: float = 9.81
    tag_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.q_WU = quat.normalize(self.q_WU)
        self.t_WU = np.asarray(self.t_WU, dtype=float)
        g_dir = np.asarray(self.g_dir, dtype=float)
        self.g_dir = g_dir / np.linalg.norm(g_dir)
        self.tag_offset = np.asarray(self.tag_offset, dtype=float)
        self.g_mag = float(self.g_mag)

    @classmethod
    def from_config(cls, cfg) -> "Calibration":
        """Build from a :class:`~splinefuse.config.CalibrationConfig`."""
        return cls(cfg.q_WU, cfg.t_WU, cfg.g_dir, cfg.g_mag, cfg.tag_offset)

    @property
    def gravity(self) -> np.ndarray:
        return self.g_mag * self.g_dir

    def to_uwb(self, y: np.ndarray) -> np.ndarray:
        """Map world-frame point(s) into the UWB frame."""
        return quat.rotate(self.q_WU, y) + self.t_WU

    def copy(self, **changes) -> "Calibration":
        base = replace(
            self,
            q_WU=self.q_WU.copy(),
            t_WU=self.t_WU.copy(),
            g_dir=self.g_dir.copy(),
            tag_offset=self.tag_offset.copy(),
        )
        return replace(base, **changes) if changes else base


def _column(values, width) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr.reshape(-1, width) if width > 1 else arr.reshape(-1)


@dataclass
class ImuBatch:
    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray

    @classmethod
    def from_measurements(cls, items: Sequence[ImuMeasurement]) -> "ImuBatch":
        return cls(
            _column([m.t for m in items], 1),
            _column([m.accel for m in items], 3),
            _column([m.gyro for m in items], 3),
        )

    def __len__(self) -> int:
        return len(self.t)

    def take(self, mask) -> "ImuBatch":
        return ImuBatch(self.t[mask], self.accel[mask], self.gyro[mask])


@dataclass
class ToaBatch:
    t: np.ndarray
    anchor: np.ndarray
    range: np.ndarray

    @classmethod
    def from_measurements(cls, items: Sequence[UwbToaMeasurement]) -> "ToaBatch":
        return cls(
            _column([m.t for m in items], 1),
            np.array([m.anchor_id for m in items], dtype=object),
            _column([m.range for m in items], 1),
        )

    def __len__(self) -> int:
        return len(self.t)

    def take(self, mask) -> "ToaBatch":
        return ToaBatch(self.t[mask], self.anchor[mask], self.range[mask])


@dataclass
class TdoaBatch:
    t: np.ndarray
    anchor_i: np.ndarray
    anchor_j: np.ndarray
    ddist: np.ndarray

    @classmethod
    def from_measurements(cls, items: Sequence[UwbTdoaMeasurement]) -> "TdoaBatch":
        return cls(
            _column([m.t for m in items], 1),
            np.array([m.anchor_i for m in items], dtype=object),
            np.array([m.anchor_j for m in items], dtype=object),
            _column([m.ddist for m in items], 1),
        )

    def __len__(self) -> int:
        return len(self.t)

    def take(self, mask) -> "TdoaBatch":
        return TdoaBatch(
            self.t[mask], self.anchor_i[mask], self.anchor_j[mask], self.ddist[mask]
        )


@dataclass
class OrientationBatch:
    t: np.ndarray
    q: np.ndarray

    @classmethod
    def from_measurements(cls, items: Sequence[OrientationMeasurement]) -> "OrientationBatch":
        return cls(_column([m.t for m in items], 1), _column([m.q for m in items], 4))

    def __len__(self) -> int:
        return len(self.t)

    def take(self, mask) -> "OrientationBatch":
        return OrientationBatch(self.t[mask], self.q[mask])


#: IMU residual terms built from an :class:`ImuBatch`.
IMU_TERMS = ("accel", "gyro", "bias")


@dataclass
class MeasurementSet:
    """
    Everything one window solve consumes.

    ``imu_terms`` selects which IMU residuals are formed; orientation fitting
    for instance uses only ``("gyro",)``.
    """

    imu: Optional[ImuBatch] = None
    toa: Optional[ToaBatch] = None
    tdoa: Optional[TdoaBatch] = None
    orientation: Optional[OrientationBatch] = None
    anchors: Optional[AnchorMap] = None
    imu_terms: Tuple[str, ...] = IMU_TERMS

    @classmethod
    def from_streams(
        cls,
        imu: Sequence[ImuMeasurement] = (),
        toa: Sequence[UwbToaMeasurement] = (),
        tdoa: Sequence[UwbTdoaMeasurement] = (),
        orientation: Sequence[OrientationMeasurement] = (),
        anchors: Optional[AnchorMap] = None,
        imu_terms: Tuple[str, ...] = IMU_TERMS,
    ) -> "MeasurementSet":
        """Build batches from measurement sequences; empty streams become ``None``."""
        return cls(
            imu=ImuBatch.from_measurements(imu) if len(imu) else None,
            toa=ToaBatch.from_measurements(toa) if len(toa) else None,
            tdoa=TdoaBatch.from_measurements(tdoa) if len(tdoa) else None,
            orientation=(
                OrientationBatch.from_measurements(orientation) if len(orientation) else None
            ),
            anchors=anchors,
            imu_terms=tuple(imu_terms),
        )

    def __len__(self) -> int:
        return sum(
            len(batch)
            for batch in (self.imu, self.toa, self.tdoa, self.orientation)
            if batch is not None
        )

    def with_uwb(self, toa=None, tdoa=None) -> "MeasurementSet":
        return replace(self, toa=toa, tdoa=tdoa)
