"""
Pipelines tying datasets, the estimator and evaluation together.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..analysis.metrics import EvalReport, evaluate_ape, orientation_rmse
from ..config import FusionConfig, get_orientation_fit_config
from ..data.io import DatasetBundle, LoadedDataset, load_dataset, trajectory_frame, write_trajectory
from ..data.synthetic import OrientationSequence
from ..data.validation import groundtruth_overlap, validate_dataset
from ..estimator import SplineFusionEstimator, WindowState
from ..geometry import quaternion as quat
from ..residuals import AnchorMap, Calibration, MeasurementSet
from ..solver import ParameterLayout, SolveStats, solve
from ..spline import KnotGrid, QuaternionSpline, interp_quat, locate

logger = logging.getLogger(__name__)


def run_estimator(
    measurements: Sequence,
    anchors: AnchorMap,
    config: FusionConfig,
    calibration: Optional[Calibration] = None,
    progress: bool = False,
) -> SplineFusionEstimator:
    """Replay time-ordered measurements through a fresh estimator and flush it."""
    estimator = SplineFusionEstimator(config, anchors, calibration)
    stream = tqdm(measurements, desc="Replaying", unit="meas", disable=not progress)
    for m in stream:
        estimator.ingest(m)
    return estimator.finalize()


def batch_fit(
    measurements: MeasurementSet,
    config: FusionConfig,
    t_start: float,
    t_end: float,
    initial: Optional[WindowState] = None,
    calibration: Optional[Calibration] = None,
    calibrate: bool = False,
) -> tuple:
    """
    Fit one window spanning ``[t_start, t_end]`` to every measurement.

    The grid starts two knot intervals before ``t_start`` as in the
    estimator, so both place knots at the same times.

    Parameters
    ----------
    measurements : MeasurementSet
        All measurements to fit.
    config : FusionConfig
        Noise, solver and knot interval.
    t_start, t_end : float
        Time span to cover.
    initial : WindowState, optional
        Initial knots on the same grid; overlapping knots are copied, the
        rest start at identity and zero.
    calibration : Calibration, optional
        Calibration used (and refined when ``calibrate``).
    calibrate : bool
        Estimate the calibration in the frame of the first knot, which is
        then held fixed.

    Returns
    -------
    state : WindowState
    stats : SolveStats
    """
    dt = config.window.knot_dt
    count = int(np.ceil((t_end - t_start) / dt - 1e-9)) + 3
    grid = KnotGrid(t_start - 2.0 * dt, dt, max(count, 4))
    q = quat.identity((grid.count,))
    p = np.zeros((grid.count, 3))
    b = np.zeros((grid.count, 6))
    if initial is not None:
        offset = int(round((initial.grid.t0 - grid.t0) / dt))
        src = slice(max(-offset, 0), min(initial.count, grid.count - offset))
        dst = slice(src.start + offset, src.stop + offset)
        q[dst], p[dst], b[dst] = initial.q[src], initial.p[src], initial.b[src]
        calibration = calibration or initial.calib
    calib = calibration or Calibration.from_config(config.calibration)
    state = WindowState(grid=grid, q=q, p=p, b=b, calib=calib.copy())
    if calibrate:
        state = state.anchored()

    blocks = ("q", "p", "b") if config.window.use_imu else ("p",)
    layout = ParameterLayout(
        grid.count, blocks=blocks, fix_origin=calibrate, calibrating=calibrate
    )
    return solve(state, measurements, config.noise, config.solver, layout)


@dataclass
class FusionResult:
    """Outcome of one sliding-window run."""

    estimator: SplineFusionEstimator
    trajectory: pd.DataFrame
    report: Optional[EvalReport] = None
    validation: Dict[str, Any] = field(default_factory=dict)

    @property
    def calibration(self) -> Calibration:
        return self.estimator.calib

    @property
    def counters(self) -> Dict[str, int]:
        return dict(self.estimator.counters)


class FusionPipeline:
    """
    Sliding-window estimation over a recorded dataset.

    Examples
    --------
    >>> pipeline = FusionPipeline(output_dir="results")
    >>> result = pipeline.load("data/run01").run(rate=100.0)
    >>> result.report.ape_rmse
    0.094...
    """

    def __init__(
        self,
        config: Optional[FusionConfig] = None,
        output_dir: Optional[Union[str, Path]] = None,
        progress: bool = False,
    ):
        """
        Initialize the pipeline.

        Parameters
        ----------
        config : FusionConfig, optional
            Overrides the configuration stored with the dataset.
        output_dir : str or Path, optional
            Directory for the trajectory file; nothing is written if omitted.
        progress : bool
            Show a progress bar while replaying measurements.
        """
        self.config = config
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.progress = progress
        self.dataset: Optional[LoadedDataset] = None

    def load(self, bundle: Union[DatasetBundle, str, Path]) -> "FusionPipeline":
        self.dataset = load_dataset(bundle)
        if self.config is None:
            self.config = self.dataset.config or FusionConfig()
        return self

    def run(self, rate: float = 100.0) -> FusionResult:
        """
        Estimate, export at ``rate`` Hz and evaluate against the ground truth
        when the dataset has one.
        """
        if self.dataset is None:
            raise RuntimeError("No dataset loaded; call load() first")
        dataset, config = self.dataset, self.config.validate()

        validation = validate_dataset(dataset)
        for message in validation["warnings"]:
            logger.warning(message)
        if not validation["passed"]:
            raise ValueError("Dataset failed validation: " + "; ".join(validation["issues"]))

        estimator = run_estimator(
            dataset.merged(), dataset.anchors, config, progress=self.progress
        )
        trajectory = trajectory_frame(estimator.export_arrays(rate))

        report = None
        if dataset.groundtruth is not None:
            report = evaluate_groundtruth(estimator, dataset.groundtruth)

        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            write_trajectory(trajectory, self.output_dir / "trajectory.csv")
        return FusionResult(estimator, trajectory, report, validation)


def evaluate_groundtruth(
    estimator: SplineFusionEstimator, groundtruth: pd.DataFrame
) -> EvalReport:
    """
    APE of the estimator against ground truth, sampled at the ground-truth
    timestamps inside the covered span.
    """
    span = estimator.covered_span()
    if span is not None and groundtruth_overlap(groundtruth, *span) < 0.5:
        logger.warning("Less than half of the ground truth overlaps the estimate")
    arrays = estimator.sample(groundtruth["t"].to_numpy())
    return evaluate_ape(
        arrays if arrays else {"t": np.zeros(0), "p": np.zeros((0, 3))},
        groundtruth,
        max_dt=0.5 * estimator.window.knot_dt,
        solver_stats=estimator.runtime_summary(),
    )


# ----------------------------------------------------------------------
# Orientation fitting


@dataclass
class OrientationFitResult:
    spline: QuaternionSpline
    stats: SolveStats
    rmse: float
    runtime_s: float
    runtimes_s: List[float] = field(default_factory=list)


def initial_knots(sequence: OrientationSequence, grid: KnotGrid) -> np.ndarray:
    """Orientation sample nearest to each knot time."""
    t = np.array([m.t for m in sequence.orientation])
    q = np.array([m.q for m in sequence.orientation])
    idx = np.clip(np.searchsorted(t, grid.knot_time(np.arange(grid.count))), 0, len(t) - 1)
    return q[idx]


def fit_orientation(
    sequence: OrientationSequence,
    config: Optional[FusionConfig] = None,
    repeats: int = 1,
) -> OrientationFitResult:
    """
    Batch-fit a rotation spline to orientation and gyroscope samples.

    The spline uses the ground-truth knot grid and starts from the nearest
    orientation sample at every knot. The RMSE is the geodesic error
    against the true spline at the orientation timestamps. With
    ``repeats > 1`` the fit is timed several times and the mean reported.
    """
    seq_cfg = sequence.config
    config = config or get_orientation_fit_config(seq_cfg.orientation_sigma, seq_cfg.gyro_sigma)
    grid = sequence.truth.grid
    measurements = sequence.measurement_set()
    layout = ParameterLayout(grid.count, blocks=("q",))

    runtimes = []
    for _ in range(max(repeats, 1)):
        state = WindowState(
            grid=grid,
            q=initial_knots(sequence, grid),
            p=np.zeros((grid.count, 3)),
            b=np.zeros((grid.count, 6)),
        )
        started = time.perf_counter()
        fitted, stats = solve(state, measurements, config.noise, config.solver, layout)
        runtimes.append(time.perf_counter() - started)

    t = measurements.orientation.t
    w = locate(grid, t)
    rmse = orientation_rmse(interp_quat(fitted.rotation, w), interp_quat(sequence.truth, w))
    logger.info(
        "Orientation fit: %d knots, RMSE %.3e rad, %.4f s", grid.count, rmse, np.mean(runtimes)
    )
    return OrientationFitResult(
        spline=fitted.rotation,
        stats=stats,
        rmse=rmse,
        runtime_s=float(np.mean(runtimes)),
        runtimes_s=runtimes,
    )
