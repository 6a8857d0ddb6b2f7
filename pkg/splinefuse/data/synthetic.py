"""
Synthetic datasets with exact ground truth.

Both generators build the ground truth as a cumulative B-spline, so the
estimator can represent it exactly, and derive every measurement from the
spline kinematics through the same measurement models the residuals use.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..config import CalibrationConfig, FusionConfig
from ..estimator.window import WindowState, sample_arrays
from ..geometry import quaternion as quat
from ..residuals import (
    AnchorMap,
    Calibration,
    ImuMeasurement,
    MeasurementSet,
    OrientationMeasurement,
    UwbTdoaMeasurement,
    UwbToaMeasurement,
)
from ..spline import KnotGrid, QuaternionSpline, RotationSegment, locate
from .io import DatasetBundle, trajectory_frame, write_dataset

logger = logging.getLogger(__name__)

SHAPES = ("lissajous", "circle", "static")

#: Variance floor so noise-free scenarios still yield SPD covariances.
MIN_VARIANCE = 1e-8


@dataclass
class ScenarioConfig:
    """
    Synthetic UWB/IMU scenario.

    Angles are in degrees. ``t_WU``/``yaw_WU_deg`` define the true extrinsic
    from the world frame to the UWB frame, and ``gravity_tilt_deg`` tilts the
    world-frame gravity about the x axis. The first knot has identity
    orientation at ``start_offset``; with the default zero offset the world
    frame is the frame of the first knot.
    """

    shape: str = "lissajous"
    duration: float = 20.0
    knot_dt: float = 0.1
    imu_rate: float = 100.0
    uwb_rate: float = 50.0
    uwb_mode: str = "toa"
    gt_rate: float = 200.0
    amplitude: Tuple[float, float, float] = (3.0, 2.0, 0.3)
    period: float = 12.0
    room_half_extent: Tuple[float, float, float] = (6.0, 6.0, 2.5)
    sigma_accel: float = 0.05
    sigma_gyro: float = 0.005
    sigma_uwb: float = 0.1
    bias_accel: Tuple[float, float, float] = (0.05, -0.03, 0.02)
    bias_gyro: Tuple[float, float, float] = (0.002, -0.001, 0.003)
    outlier_rate: float = 0.0
    outlier_magnitude: Tuple[float, float] = (1.0, 3.0)
    yaw_WU_deg: float = 30.0
    t_WU: Tuple[float, float, float] = (1.0, 2.0, 0.0)
    gravity_tilt_deg: float = 10.0
    g_mag: float = 9.81
    start_offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"Unknown trajectory shape {self.shape!r}; expected one of {SHAPES}")
        if self.uwb_mode not in ("toa", "tdoa"):
            raise ValueError(f"uwb_mode must be 'toa' or 'tdoa', got {self.uwb_mode!r}")
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise ValueError(f"outlier_rate must lie in [0, 1], got {self.outlier_rate}")
        for name in ("duration", "knot_dt", "imu_rate", "uwb_rate", "gt_rate", "period"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    def noise_free(self) -> "ScenarioConfig":
        """Copy with every noise source and outlier switched off."""
        return replace(self, sigma_accel=0.0, sigma_gyro=0.0, sigma_uwb=0.0, outlier_rate=0.0)

    def calibration(self) -> Calibration:
        """True calibration of the scenario."""
        tilt = np.deg2rad(self.gravity_tilt_deg)
        return Calibration(
            q_WU=quat.from_axis_angle(np.array([0.0, 0.0, 1.0]), np.deg2rad(self.yaw_WU_deg)),
            t_WU=np.asarray(self.t_WU, dtype=float),
            g_dir=np.array([0.0, -np.sin(tilt), np.cos(tilt)]),
            g_mag=self.g_mag,
        )


def _euler_quat(roll, pitch, yaw) -> np.ndarray:
    ex, ey, ez = np.eye(3)
    return quat.hamilton(
        quat.hamilton(quat.from_axis_angle(ez, yaw), quat.from_axis_angle(ey, pitch)),
        quat.from_axis_angle(ex, roll),
    )


def _path(cfg: ScenarioConfig, t: np.ndarray):
    """Position (N, 3) and roll/pitch/yaw (N, 3) of the reference motion."""
    w = 2.0 * np.pi / cfg.period
    ax, ay, az = cfg.amplitude
    zeros = np.zeros_like(t)
    if cfg.shape == "static":
        return np.zeros((len(t), 3)), np.zeros((len(t), 3))
    if cfg.shape == "circle":
        pos = np.stack([ax * np.sin(w * t), ax * (1.0 - np.cos(w * t)), zeros], axis=1)
        angles = np.stack([zeros, zeros, w * t], axis=1)
        return pos, angles
    pos = np.stack(
        [ax * np.sin(w * t), ay * np.sin(2.0 * w * t), az * np.sin(0.5 * w * t)], axis=1
    )
    angles = np.stack(
        [0.1 * np.sin(1.3 * w * t), 0.1 * np.sin(0.9 * w * t), 0.8 * np.sin(0.5 * w * t)],
        axis=1,
    )
    return pos, angles


def _truth_state(cfg: ScenarioConfig, calib: Calibration) -> WindowState:
    dt = cfg.knot_dt
    count = int(np.ceil(cfg.duration / dt - 1e-9)) + 3
    grid = KnotGrid(-2.0 * dt, dt, count)
    t = grid.knot_time(np.arange(count))
    pos, angles = _path(cfg, t)
    q = _euler_quat(angles[:, 0], angles[:, 1], angles[:, 2])
    q = quat.hamilton(quat.inverse(q[0]), q)
    bias = np.concatenate([cfg.bias_accel, cfg.bias_gyro])
    return WindowState(
        grid=grid,
        q=q,
        p=pos - pos[0] + np.asarray(cfg.start_offset, dtype=float),
        b=np.tile(bias, (count, 1)),
        calib=calib,
    )


def _anchors(cfg: ScenarioConfig, truth: WindowState, calib: Calibration) -> AnchorMap:
    center = calib.to_uwb(truth.p.mean(axis=0))
    half = np.asarray(cfg.room_half_extent, dtype=float)
    corners = {}
    for i, signs in enumerate(np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).T.reshape(-1, 3)):
        corners[f"a{i}"] = center + signs * half
    return AnchorMap(corners)


def _times(rate: float, duration: float, offset: float = 0.0) -> np.ndarray:
    n = int(np.floor((duration - offset) * rate + 1e-9)) + 1
    return offset + np.arange(n) / rate


@dataclass
class SyntheticScenario:
    """Generated streams, anchors and ground truth of one scenario."""

    config: ScenarioConfig
    truth: WindowState
    anchors: AnchorMap
    imu: List[ImuMeasurement]
    toa: List[UwbToaMeasurement] = field(default_factory=list)
    tdoa: List[UwbTdoaMeasurement] = field(default_factory=list)
    groundtruth: Optional[pd.DataFrame] = None
    outliers: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def calibration(self) -> Calibration:
        return self.truth.calib

    def measurements(self) -> list:
        """All streams merged by time, IMU first on ties."""
        streams = [self.imu, self.toa, self.tdoa]
        keyed = [(m.t, rank, i, m) for rank, s in enumerate(streams) for i, m in enumerate(s)]
        keyed.sort(key=lambda item: item[:3])
        return [item[3] for item in keyed]

    def measurement_set(self) -> MeasurementSet:
        return MeasurementSet.from_streams(
            imu=self.imu, toa=self.toa, tdoa=self.tdoa, anchors=self.anchors
        )

    def fusion_config(
        self, base: Optional[FusionConfig] = None, initial_calibration: bool = False
    ) -> FusionConfig:
        """
        Configuration matched to the scenario's knot interval and noise.

        With ``initial_calibration`` the true calibration is used as the
        initial value.
        """
        cfg = self.config
        base = base or FusionConfig()
        noise = replace(
            base.noise,
            cov_uwb=max(cfg.sigma_uwb**2, MIN_VARIANCE),
            cov_accel=max(cfg.sigma_accel**2, MIN_VARIANCE),
            cov_gyro=max(cfg.sigma_gyro**2, MIN_VARIANCE),
        )
        calibration = base.calibration
        if initial_calibration:
            c = self.calibration
            calibration = CalibrationConfig(
                q_WU=c.q_WU.tolist(),
                t_WU=c.t_WU.tolist(),
                g_dir=c.g_dir.tolist(),
                g_mag=c.g_mag,
                tag_offset=c.tag_offset.tolist(),
            )
        else:
            calibration = replace(calibration, g_mag=cfg.g_mag)
        return FusionConfig(
            window=replace(base.window, knot_dt=cfg.knot_dt),
            noise=noise,
            solver=base.solver,
            calibration=calibration,
            seed=cfg.seed,
        )

    def to_bundle(
        self, directory: Union[str, Path], config: Optional[FusionConfig] = None
    ) -> DatasetBundle:
        """Write the scenario as a dataset directory."""
        return write_dataset(
            directory,
            self.anchors,
            imu=self.imu,
            toa=self.toa,
            tdoa=self.tdoa,
            groundtruth=self.groundtruth,
            config=config,
        )


def synth_fusion_scenario(cfg: Optional[ScenarioConfig] = None) -> SyntheticScenario:
    """
    Generate IMU and UWB streams along a spline trajectory.

    The accelerometer reads ``R^T (a + g) + b_acc``, the gyroscope the body
    rate plus ``b_gyro``; ranges are measured from the tag position mapped
    into the UWB frame. Outliers add a uniform ``outlier_magnitude`` offset.

    Parameters
    ----------
    cfg : ScenarioConfig, optional
        Scenario settings; defaults give a 20 s Lissajous run with ToA.

    Returns
    -------
    SyntheticScenario
        Deterministic for a given ``cfg.seed``.

    Examples
    --------
    >>> scenario = synth_fusion_scenario(ScenarioConfig(shape="static").noise_free())
    >>> np.allclose(scenario.imu[0].accel, scenario.imu[-1].accel)
    True
    """
    cfg = cfg or ScenarioConfig()
    rng = np.random.default_rng(cfg.seed)
    calib = cfg.calibration()
    truth = _truth_state(cfg, calib)
    anchors = _anchors(cfg, truth, calib)

    t_imu = _times(cfg.imu_rate, cfg.duration)
    s = sample_arrays(truth, t_imu)
    accel = quat.rotate(quat.inverse(s["q"]), s["a"] + calib.gravity) + s["bias"][:, :3]
    gyro = s["omega"] + s["bias"][:, 3:]
    accel = accel + cfg.sigma_accel * rng.standard_normal(accel.shape)
    gyro = gyro + cfg.sigma_gyro * rng.standard_normal(gyro.shape)
    imu = [
        ImuMeasurement(float(t), tuple(a), tuple(g)) for t, a, g in zip(t_imu, accel, gyro)
    ]

    t_uwb = _times(cfg.uwb_rate, cfg.duration, offset=0.5 / cfg.uwb_rate)
    u = sample_arrays(truth, t_uwb)
    tag = calib.to_uwb(quat.rotate(u["q"], calib.tag_offset) + u["p"])
    ids = list(anchors.ids)
    n = len(t_uwb)
    first = np.arange(n) % len(ids)
    noise = cfg.sigma_uwb * rng.standard_normal(n)
    outliers = rng.random(n) < cfg.outlier_rate
    low, high = cfg.outlier_magnitude
    noise = noise + np.where(outliers, rng.uniform(low, high, n), 0.0)

    toa, tdoa = [], []
    if cfg.uwb_mode == "toa":
        dist = np.linalg.norm(tag - anchors.positions([ids[k] for k in first]), axis=1)
        toa = [
            UwbToaMeasurement(float(t), ids[k], float(d))
            for t, k, d in zip(t_uwb, first, dist + noise)
        ]
    else:
        second = (first + 1) % len(ids)
        d_i = np.linalg.norm(tag - anchors.positions([ids[k] for k in first]), axis=1)
        d_j = np.linalg.norm(tag - anchors.positions([ids[k] for k in second]), axis=1)
        tdoa = [
            UwbTdoaMeasurement(float(t), ids[i], ids[j], float(d))
            for t, i, j, d in zip(t_uwb, first, second, d_i - d_j + noise)
        ]

    t_gt = _times(cfg.gt_rate, cfg.duration)
    groundtruth = trajectory_frame(sample_arrays(truth, t_gt))
    logger.info(
        "Synthesized %s scenario: %d IMU, %d UWB (%d outliers), %d knots",
        cfg.shape,
        len(imu),
        n,
        int(outliers.sum()),
        truth.count,
    )
    return SyntheticScenario(
        config=cfg,
        truth=truth,
        anchors=anchors,
        imu=imu,
        toa=toa,
        tdoa=tdoa,
        groundtruth=groundtruth,
        outliers=outliers,
    )


# ----------------------------------------------------------------------
# Orientation sequences


@dataclass
class OrientationSequenceConfig:
    """
    Random smooth rotation spline sampled by orientation and gyroscope sensors.

    ``scale`` multiplies the number of knots and, at fixed rates, the number
    of measurements. Orientation noise is given in tangent units, half the
    rotation angle, per axis.
    """

    n_knots: int = 100
    knot_dt: float = 0.1
    orientation_rate: float = 1000.0
    gyro_rate: float = 1000.0
    orientation_sigma: float = 1e-2
    gyro_sigma: float = 1e-2
    step_sigma: float = 0.1
    scale: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_knots < 4:
            raise ValueError(f"Need at least 4 knots, got {self.n_knots}")
        if self.scale < 1:
            raise ValueError(f"scale must be at least 1, got {self.scale}")
        for name in ("knot_dt", "orientation_rate", "gyro_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def total_knots(self) -> int:
        return self.n_knots * self.scale


@dataclass
class OrientationSequence:
    config: OrientationSequenceConfig
    truth: QuaternionSpline
    orientation: List[OrientationMeasurement]
    gyro: List[ImuMeasurement]

    def measurement_set(self) -> MeasurementSet:
        """Orientation and gyroscope measurements, gyroscope residuals only."""
        return MeasurementSet.from_streams(
            imu=self.gyro, orientation=self.orientation, imu_terms=("gyro",)
        )

    def __len__(self) -> int:
        return len(self.orientation) + len(self.gyro)


def synth_orientation_sequence(
    cfg: Optional[OrientationSequenceConfig] = None,
) -> OrientationSequence:
    """
    Generate a random rotation spline with noisy orientation and rate samples.

    Knots follow a random walk with tangent steps of ``step_sigma``;
    orientation samples are perturbed by ``Exp`` of tangent noise, rates by
    additive noise.
    """
    cfg = cfg or OrientationSequenceConfig()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.total_knots
    steps = quat.exp_map(cfg.step_sigma * rng.standard_normal((n - 1, 3)))
    knots = [quat.identity()]
    for step in steps:
        knots.append(quat.hamilton(knots[-1], step))
    truth = QuaternionSpline(KnotGrid(0.0, cfg.knot_dt, n), np.stack(knots))

    start, end = truth.grid.span
    t_q = _times(cfg.orientation_rate, end - start) + start
    t_w = _times(cfg.gyro_rate, end - start) + start
    t_q, t_w = t_q[t_q <= end], t_w[t_w <= end]

    q = RotationSegment(truth, locate(truth.grid, t_q)).value
    q_noise = quat.exp_map(cfg.orientation_sigma * rng.standard_normal((len(t_q), 3)))
    q_meas = quat.hamilton(q, q_noise)
    omega = RotationSegment(truth, locate(truth.grid, t_w)).angular_velocities()[3]
    omega = omega + cfg.gyro_sigma * rng.standard_normal(omega.shape)

    return OrientationSequence(
        config=cfg,
        truth=truth,
        orientation=[OrientationMeasurement(float(t), tuple(v)) for t, v in zip(t_q, q_meas)],
        gyro=[ImuMeasurement(float(t), (0.0, 0.0, 0.0), tuple(w)) for t, w in zip(t_w, omega)],
    )
