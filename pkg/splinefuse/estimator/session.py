"""
Sliding-window estimation session.

The session owns the knot history of one run. New knots are spawned at the
knot rate as measurements arrive; each spawn is preceded by a window solve.
While the window grows the extrinsic and gravity direction are estimated
together with the knots, once it holds ``window_knots`` active knots the
calibration is frozen and the window slides, keeping the three most
recently removed knots as fixed idle knots.
"""

import logging
import threading
from collections import Counter
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from ..config import FusionConfig, WindowConfig
from ..exceptions import (
    CalibrationUnobservable,
    EstimatorStateError,
    NoMeasurements,
    NonMonotonicTimestamp,
)
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
from ..solver import ParameterLayout, SolveStats, solve
from ..spline import KnotGrid
from .window import Phase, StateSample, WindowState, sample_arrays, samples_from_arrays

logger = logging.getLogger(__name__)

Measurement = Union[ImuMeasurement, UwbToaMeasurement, UwbTdoaMeasurement, OrientationMeasurement]

#: Knots kept fixed behind the active window.
IDLE_KNOTS = 3

STREAMS = ("imu", "toa", "tdoa", "orientation")


class SplineFusionEstimator:
    """
    Continuous-time UWB/IMU estimator over a sliding window of spline knots.

    Parameters
    ----------
    config : FusionConfig, optional
        Run configuration; defaults are used when omitted.
    anchors : AnchorMap, optional
        Anchor positions in the UWB frame; required for UWB measurements.
    calibration : Calibration, optional
        Initial calibration; built from ``config.calibration`` if omitted.
    strict_order : bool
        Raise on out-of-order timestamps instead of dropping them.

    Examples
    --------
    >>> estimator = SplineFusionEstimator(config, anchors)
    >>> for m in measurements:
    ...     estimator.ingest(m)
    >>> trajectory = estimator.finalize().export_trajectory(rate=100.0)
    """

    def __init__(
        self,
        config: Optional[FusionConfig] = None,
        anchors: Optional[AnchorMap] = None,
        calibration: Optional[Calibration] = None,
        strict_order: bool = False,
    ):
        self.config = (config or FusionConfig()).validate()
        self.anchors = anchors
        self.calib = (
            calibration.copy()
            if calibration is not None
            else Calibration.from_config(self.config.calibration)
        )
        self.strict_order = strict_order

        self.phase = Phase.GROWING
        self.counters: Counter = Counter()
        self.step_stats: List[SolveStats] = []
        self.step_phases: List[Phase] = []

        self._lock = threading.RLock()
        self._history: Optional[WindowState] = None
        self._window_start = 0
        self._buffers: Dict[str, List[Measurement]] = {name: [] for name in STREAMS}
        self._last_t: Dict[str, float] = {}
        self._arrivals: Counter = Counter()
        self._uwb_seen = 0
        self._damping: Optional[float] = None

    # ------------------------------------------------------------------
    # Window bookkeeping

    @property
    def window(self) -> WindowConfig:
        return self.config.window

    @property
    def initialized(self) -> bool:
        return self._history is not None

    @property
    def knot_count(self) -> int:
        return 0 if self._history is None else self._history.count

    @property
    def active_count(self) -> int:
        return self.knot_count - self._window_start

    @property
    def idle_count(self) -> int:
        return self._window_start - self._first_knot

    @property
    def _first_knot(self) -> int:
        return max(self._window_start - IDLE_KNOTS, 0)

    @property
    def blocks(self):
        return ("q", "p", "b") if self.window.use_imu else ("p",)

    def window_state(self) -> WindowState:
        """Copy of the current window, idle knots first."""
        with self._lock:
            self._require_initialized()
            first, stop = self._first_knot, self._history.count
            h = self._history
            return WindowState(
                grid=h.grid.sliced(first, stop),
                q=h.q[first:stop].copy(),
                p=h.p[first:stop].copy(),
                b=h.b[first:stop].copy(),
                calib=self.calib.copy(),
                n_idle=self._window_start - first,
            )

    def snapshot(self) -> WindowState:
        """Consistent copy of every knot estimated so far."""
        with self._lock:
            self._require_initialized()
            return self._history.with_updates(calib=self.calib.copy())

    def _require_initialized(self) -> None:
        if self._history is None:
            raise EstimatorStateError(
                "Estimator has not received any measurement",
                state="empty",
                expected_state="initialized",
            )

    def _bootstrap(self, t: float) -> None:
        dt = self.window.knot_dt
        grid = KnotGrid(t - 2.0 * dt, dt, 4)
        self._history = WindowState(
            grid=grid,
            q=quat.identity((4,)),
            p=np.zeros((4, 3)),
            b=np.zeros((4, 6)),
            calib=self.calib.copy(),
        )
        logger.info("Initialized knot grid at t=%.6f with dt=%.3f", grid.t0, dt)

    # ------------------------------------------------------------------
    # Measurement intake

    def _stream_of(self, m: Measurement) -> str:
        stream = getattr(m, "stream", None)
        if stream not in STREAMS:
            raise TypeError(f"Unsupported measurement type {type(m).__name__}")
        return stream

    def _downsample_factor(self, stream: str) -> int:
        if stream == "imu":
            return self.window.imu_downsample
        if stream in ("toa", "tdoa"):
            return self.window.uwb_downsample
        return 1

    def ingest(self, m: Measurement) -> "SplineFusionEstimator":
        """
        Buffer one measurement, spawning knots and solving as the grid advances.

        Out-of-order and stale measurements are dropped and counted. With
        ``strict_order`` an out-of-order timestamp raises instead.

        Raises
        ------
        NonMonotonicTimestamp
            With ``strict_order``, if ``m.t`` is older than the last
            measurement of the same stream.
        """
        stream = self._stream_of(m)
        t = float(m.t)
        with self._lock:
            last = self._last_t.get(stream)
            if last is not None and t < last:
                self.counters["non_monotonic"] += 1
                if self.strict_order:
                    raise NonMonotonicTimestamp(
                        "Timestamp older than the previous one", stream=stream, t=t, last=last
                    )
                logger.warning("Dropped out-of-order %s measurement at t=%.6f", stream, t)
                return self
            self._last_t[stream] = t

            arrival = self._arrivals[stream]
            self._arrivals[stream] += 1
            if arrival % self._downsample_factor(stream):
                self.counters["downsampled"] += 1
                return self
            if stream == "imu" and not self.window.use_imu:
                self.counters["ignored_imu"] += 1
                return self

            if self._history is None:
                self._bootstrap(t)
            start = float(self._history.grid.knot_time(self._first_knot + 2))
            if t < start - 1e-9 * self.window.knot_dt:
                self.counters["stale"] += 1
                logger.debug("Dropped %s measurement at t=%.6f before window start", stream, t)
                return self
            while t > self._history.grid.span[1]:
                self._advance()

            self._buffers[stream].append(m)
            self.counters[stream] += 1
            if stream in ("toa", "tdoa"):
                self._uwb_seen += 1
        return self

    def ingest_all(self, measurements: Iterable[Measurement]) -> "SplineFusionEstimator":
        """Ingest a time-ordered iterable of measurements."""
        for m in measurements:
            self.ingest(m)
        return self

    def _advance(self) -> None:
        """Solve the window, add one knot, switch phase and slide as needed."""
        self._solve_window()
        self.spawn_knot()
        if self.phase is Phase.GROWING and self.active_count >= self.window.window_knots:
            self.phase = Phase.SLIDING
            logger.info(
                "Window full with %d knots; calibration frozen (t_WU=%s)",
                self.active_count,
                np.round(self.calib.t_WU, 4).tolist(),
            )
        if self.phase is Phase.SLIDING and self.active_count > self.window.window_knots:
            self.slide()

    # ------------------------------------------------------------------
    # Lifecycle operations

    def spawn_knot(self) -> "SplineFusionEstimator":
        """
        Append one knot by constant-velocity extrapolation of the last two.

        Orientation continues the last relative rotation, position the last
        difference; the bias is copied.
        """
        with self._lock:
            self._require_initialized()
            h = self._history
            q_prev, q_last = h.q[-2], h.q[-1]
            step = quat.exp_map(quat.log_map(quat.hamilton(quat.inverse(q_prev), q_last)))
            q_new = quat.hamilton(q_last, step)
            p_new = 2.0 * h.p[-1] - h.p[-2]
            self._history = WindowState(
                grid=h.grid.extended(1),
                q=np.vstack([h.q, q_new]),
                p=np.vstack([h.p, p_new]),
                b=np.vstack([h.b, h.b[-1]]),
                calib=h.calib,
            )
        return self

    def slide(self) -> "SplineFusionEstimator":
        """
        Move the oldest active knot out of the window.

        The three most recently removed knots stay as idle knots; buffered
        measurements whose support no longer reaches an active knot are
        evicted.
        """
        with self._lock:
            if self.phase is not Phase.SLIDING:
                raise EstimatorStateError(
                    "Window can only slide once it is full",
                    state=self.phase.value,
                    expected_state=Phase.SLIDING.value,
                )
            self._window_start = self.knot_count - self.window.window_knots
            self._evict()
        return self

    def _evict(self) -> None:
        start = float(self._history.grid.knot_time(self._first_knot + 2))
        tol = 1e-9 * self.window.knot_dt
        for stream, buffer in self._buffers.items():
            keep = [m for m in buffer if m.t >= start - tol]
            self.counters["evicted"] += len(buffer) - len(keep)
            self._buffers[stream] = keep

    def _window_measurements(self) -> MeasurementSet:
        return MeasurementSet.from_streams(
            imu=self._buffers["imu"],
            toa=self._buffers["toa"],
            tdoa=self._buffers["tdoa"],
            orientation=self._buffers["orientation"],
            anchors=self.anchors,
        )

    def _layout(self, state: WindowState, calibrating: bool) -> ParameterLayout:
        # knot 0 defines the world frame only while the calibration is free
        return ParameterLayout(
            state.count,
            blocks=self.blocks,
            n_fixed=state.n_idle,
            fix_origin=calibrating and self._first_knot == 0,
            calibrating=calibrating,
        )

    def _anchor_world_frame(self) -> None:
        """Re-express the history in the frame of knot 0 before a calibrating solve."""
        if self._first_knot != 0 or self._buffers["orientation"]:
            return
        with self._lock:
            self._history = self._history.with_updates(calib=self.calib).anchored()
            self.calib = self._history.calib.copy()

    def _gate(self) -> Optional[float]:
        if self._uwb_seen < self.window.gate_warmup:
            return None
        return self.window.gate_threshold

    def run_calibration_phase(self) -> "SplineFusionEstimator":
        """
        Solve the growing window with the calibration estimated.

        The history is first re-expressed in the frame of knot 0, which is
        then held fixed. If the calibration is not observable yet, the
        warning is logged and counted and the window is solved with the
        calibration held fixed. Unlike the automatic growing solves, an
        explicit call does not wait for ``calib_min_knots``.

        Raises
        ------
        EstimatorStateError
            If the window already slides.
        """
        if self.phase is not Phase.GROWING:
            raise EstimatorStateError(
                "Calibration is frozen once the window slides",
                state=self.phase.value,
                expected_state=Phase.GROWING.value,
            )
        self._solve_window(calibrating=True)
        return self

    def _solve_window(self, calibrating: Optional[bool] = None) -> Optional[SolveStats]:
        if calibrating is None:
            calibrating = (
                self.phase is Phase.GROWING
                and self.window.calib_enabled
                and self.window.use_imu
                and self.active_count >= self.window.calib_min_knots
            )
        if calibrating:
            self._anchor_world_frame()
        with self._lock:
            state = self.window_state()
            measurements = self._window_measurements()
        cfg = self.config
        try:
            try:
                solved, stats = solve(
                    state,
                    measurements,
                    cfg.noise,
                    cfg.solver,
                    self._layout(state, calibrating),
                    self._gate(),
                    self._damping,
                )
            except CalibrationUnobservable as e:
                self.counters["calib_unobservable"] += 1
                log = logger.warning if self.counters["calib_unobservable"] == 1 else logger.debug
                log("%s; solving with calibration held fixed", e)
                solved, stats = solve(
                    state,
                    measurements,
                    cfg.noise,
                    cfg.solver,
                    self._layout(state, False),
                    self._gate(),
                    self._damping,
                )
        except NoMeasurements:
            self.counters["empty_windows"] += 1
            logger.debug("No measurement in window ending at t=%.6f", state.grid.span[1])
            return None

        self._commit(solved)
        if stats.iterations:
            self._damping = min(stats.damping, cfg.solver.lambda_init)
        self.step_stats.append(stats)
        self.step_phases.append(self.phase)
        self.counters["solves"] += 1
        self.counters["rejected"] += stats.rejected
        self.counters["skipped"] += stats.skipped
        return stats

    def _commit(self, solved: WindowState) -> None:
        with self._lock:
            offset = self._window_start - self._first_knot
            stop = self._first_knot + solved.count
            h = self._history
            q, p, b = h.q.copy(), h.p.copy(), h.b.copy()
            q[self._window_start : stop] = solved.q[offset:]
            p[self._window_start : stop] = solved.p[offset:]
            b[self._window_start : stop] = solved.b[offset:]
            self._history = WindowState(grid=h.grid, q=q, p=p, b=b, calib=solved.calib)
            if self.phase is Phase.GROWING:
                self.calib = solved.calib.copy()

    def finalize(self) -> "SplineFusionEstimator":
        """Solve the current window once more with everything buffered."""
        if self._history is not None:
            self._solve_window()
        return self

    # ------------------------------------------------------------------
    # Queries

    def query(self, t: float) -> StateSample:
        """
        Kinematic state at ``t`` from the knot history.

        Raises
        ------
        OutOfRange
            If ``t`` is outside the covered span.
        """
        return samples_from_arrays(sample_arrays(self.snapshot(), [t]))[0]

    def covered_span(self):
        """Interval covered by the knot history, or None before the first measurement."""
        with self._lock:
            return None if self._history is None else self._history.grid.span

    def sample_times(self, rate: float) -> np.ndarray:
        """Uniform timestamps at ``rate`` Hz over the covered span."""
        if not rate > 0:
            raise ValueError(f"Sampling rate must be positive, got {rate}")
        span = self.covered_span()
        if span is None:
            return np.zeros(0)
        start, end = span
        n = int(np.floor((end - start) * rate + 1e-9)) + 1
        return np.minimum(start + np.arange(n) / rate, end)

    def sample(self, times) -> Dict[str, np.ndarray]:
        """
        Sample the knot history at ``times``; timestamps outside the covered
        span are left out.
        """
        span = self.covered_span()
        times = np.asarray(times, dtype=float)
        if span is None:
            return {}
        tol = 1e-9 * self.window.knot_dt
        times = times[(times >= span[0] - tol) & (times <= span[1] + tol)]
        if times.size == 0:
            return {}
        return sample_arrays(self.snapshot(), times)

    def export_arrays(self, rate: float) -> Dict[str, np.ndarray]:
        """Trajectory sampled at ``rate`` Hz as a dict of arrays."""
        times = self.sample_times(rate)
        if times.size == 0:
            return {}
        return sample_arrays(self.snapshot(), times)

    def export_trajectory(self, rate: float) -> List[StateSample]:
        """Trajectory sampled at ``rate`` Hz over the covered span."""
        arrays = self.export_arrays(rate)
        return samples_from_arrays(arrays) if arrays else []

    def runtime_summary(self) -> Dict[str, float]:
        """Mean and standard deviation of iterations and runtime per sliding step."""
        stats = [s for s, phase in zip(self.step_stats, self.step_phases) if phase is Phase.SLIDING]
        stats = stats or self.step_stats
        iterations = np.array([s.iterations for s in stats], dtype=float)
        runtime = np.array([s.runtime_ms for s in stats], dtype=float)
        if not len(stats):
            return {"steps": 0}
        return {
            "steps": len(stats),
            "iterations_mean": float(iterations.mean()),
            "iterations_std": float(iterations.std()),
            "iterations_median": float(np.median(iterations)),
            "runtime_ms_mean": float(runtime.mean()),
            "runtime_ms_std": float(runtime.std()),
        }
