"""
Window state types: knots, phase and continuous-time samples.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..geometry import quaternion as quat
from ..residuals import Calibration
from ..spline import (
    EuclideanSpline,
    KnotGrid,
    QuaternionSpline,
    RotationSegment,
    canonical_signs,
    interp_acc,
    interp_vec,
    interp_vel,
    locate,
)


class Phase(str, Enum):
    """Window lifecycle phase."""

    GROWING = "growing"
    SLIDING = "sliding"


@dataclass
class KnotState:
    """One control point: orientation, position and stacked IMU bias at grid time ``t``."""

    t: float
    q: np.ndarray
    p: np.ndarray
    b: np.ndarray = field(default_factory=lambda: np.zeros(6))


@dataclass
class WindowState:
    """
    Knots of one optimization window and the calibration they are solved with.

    The first ``n_idle`` knots are idle: they take part in interpolation but
    are never changed by the solver.
    """

    grid: KnotGrid
    q: np.ndarray
    p: np.ndarray
    b: np.ndarray
    calib: Calibration = field(default_factory=Calibration)
    n_idle: int = 0

    def __post_init__(self):
        n = self.grid.count
        self.q = canonical_signs(quat.normalize(np.asarray(self.q, dtype=float)))
        self.p = np.asarray(self.p, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        for name, width in (("q", 4), ("p", 3), ("b", 6)):
            if getattr(self, name).shape != (n, width):
                raise ValueError(
                    f"Expected {name} knots of shape {(n, width)}, "
                    f"got {getattr(self, name).shape}"
                )

    @classmethod
    def from_knots(
        cls,
        knots: Sequence[KnotState],
        dt: float,
        calib: Optional[Calibration] = None,
        n_idle: int = 0,
    ) -> "WindowState":
        return cls(
            grid=KnotGrid(float(knots[0].t), dt, len(knots)),
            q=np.stack([k.q for k in knots]),
            p=np.stack([k.p for k in knots]),
            b=np.stack([k.b for k in knots]),
            calib=calib if calib is not None else Calibration(),
            n_idle=n_idle,
        )

    @property
    def count(self) -> int:
        return self.grid.count

    @property
    def rotation(self) -> QuaternionSpline:
        return QuaternionSpline(self.grid, self.q)

    @property
    def position(self) -> EuclideanSpline:
        return EuclideanSpline(self.grid, self.p)

    @property
    def bias(self) -> EuclideanSpline:
        return EuclideanSpline(self.grid, self.b)

    def knot(self, index: int) -> KnotState:
        return KnotState(
            float(self.grid.knot_time(index)),
            self.q[index].copy(),
            self.p[index].copy(),
            self.b[index].copy(),
        )

    def knots(self) -> List[KnotState]:
        return [self.knot(i) for i in range(self.count)]

    def with_updates(self, q=None, p=None, b=None, calib=None) -> "WindowState":
        """New state with the given arrays replaced; the rest is copied."""
        return WindowState(
            grid=self.grid,
            q=self.q.copy() if q is None else q,
            p=self.p.copy() if p is None else p,
            b=self.b.copy() if b is None else b,
            calib=self.calib.copy() if calib is None else calib,
            n_idle=self.n_idle,
        )

    def copy(self) -> "WindowState":
        return self.with_updates()

    def anchored(self) -> "WindowState":
        """
        Same trajectory in a world frame whose origin and axes are knot 0.

        Knot 0 becomes the identity at the origin. The extrinsic and the
        gravity direction absorb the change of frame, so every UWB and
        inertial residual keeps its value; biases are body-frame quantities
        and stay as they are.
        """
        q0, p0 = self.q[0], self.p[0]
        calib = self.calib
        moved = calib.copy(
            q_WU=quat.hamilton(calib.q_WU, q0),
            t_WU=calib.to_uwb(p0),
            g_dir=quat.rotate(quat.inverse(q0), calib.g_dir),
        )
        return self.with_updates(
            q=quat.hamilton(quat.inverse(q0), self.q),
            p=quat.rotate(quat.inverse(q0), self.p - p0),
            calib=moved,
        )


@dataclass
class StateSample:
    """Full kinematic state at one timestamp."""

    t: float
    q: np.ndarray
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    omega_body: np.ndarray
    bias: np.ndarray


def sample_arrays(state: WindowState, times) -> Dict[str, np.ndarray]:
    """
    Evaluate every kinematic quantity of ``state`` at ``times``.

    Returns a dict of arrays keyed ``t, q, p, v, a, omega, bias``.

    Raises
    ------
    OutOfRange
        If a timestamp lies outside the interpolation span.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    w = locate(state.grid, times)
    seg = RotationSegment(state.rotation, w)
    pos = state.position
    return {
        "t": times,
        "q": seg.value,
        "p": interp_vec(pos, w),
        "v": interp_vel(pos, w),
        "a": interp_acc(pos, w),
        "omega": seg.angular_velocities()[3],
        "bias": interp_vec(state.bias, w),
    }


def samples_from_arrays(arrays: Dict[str, np.ndarray]) -> List[StateSample]:
    return [
        StateSample(
            t=float(arrays["t"][i]),
            q=arrays["q"][i],
            p=arrays["p"][i],
            v=arrays["v"][i],
            a=arrays["a"][i],
            omega_body=arrays["omega"][i],
            bias=arrays["bias"][i],
        )
        for i in range(len(arrays["t"]))
    ]
