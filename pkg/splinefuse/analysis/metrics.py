"""
Trajectory accuracy metrics.

Estimated and reference trajectories are associated by nearest timestamp;
no spatial alignment is applied since estimates are expressed in the
reference frame once the calibration is known.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import NoOverlap
from ..geometry import quaternion as quat
from .utils import format_mean_sd, format_metric

logger = logging.getLogger(__name__)

Trajectory = Union[pd.DataFrame, Dict[str, np.ndarray]]


def _columns(traj: Trajectory) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Times, positions and (if present) quaternions of a trajectory."""
    if isinstance(traj, pd.DataFrame):
        t = traj["t"].to_numpy(dtype=float)
        p = traj[["px", "py", "pz"]].to_numpy(dtype=float)
        cols = ["qw", "qx", "qy", "qz"]
        q = traj[cols].to_numpy(dtype=float) if set(cols) <= set(traj.columns) else None
        return t, p, q
    return (
        np.asarray(traj["t"], dtype=float),
        np.asarray(traj["p"], dtype=float),
        None if traj.get("q") is None else np.asarray(traj["q"], dtype=float),
    )


def associate(t_a: np.ndarray, t_b: np.ndarray, max_dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pair every timestamp of ``t_a`` with the nearest one of sorted ``t_b``.

    Pairs further apart than ``max_dt`` are dropped.

    Returns
    -------
    idx_a, idx_b : np.ndarray
        Indices of the matched samples.

    Examples
    --------
    >>> associate(np.array([0.0, 1.0]), np.array([0.01, 2.0]), 0.05)
    (array([0]), array([0]))
    """
    t_a = np.asarray(t_a, dtype=float)
    t_b = np.asarray(t_b, dtype=float)
    if t_a.size == 0 or t_b.size == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    right = np.clip(np.searchsorted(t_b, t_a), 0, len(t_b) - 1)
    left = np.clip(right - 1, 0, len(t_b) - 1)
    nearest = np.where(np.abs(t_b[left] - t_a) <= np.abs(t_b[right] - t_a), left, right)
    keep = np.abs(t_b[nearest] - t_a) <= max_dt
    return np.flatnonzero(keep), nearest[keep]


def rmse(errors: np.ndarray) -> float:
    """Root mean square of error vectors (N, d) or scalars (N,)."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        return float("nan")
    squared = errors**2 if errors.ndim == 1 else np.sum(errors**2, axis=-1)
    return float(np.sqrt(np.mean(squared)))


def orientation_errors(q_est: np.ndarray, q_ref: np.ndarray) -> np.ndarray:
    """Geodesic angles in radians between paired orientations."""
    return quat.geodesic_angle(q_est, q_ref)


def orientation_rmse(q_est: np.ndarray, q_ref: np.ndarray) -> float:
    """SO(3) RMSE: root mean square of the geodesic angle ``2 |Log(q_est^-1 q_ref)|``."""
    return rmse(orientation_errors(np.asarray(q_est, float), np.asarray(q_ref, float)))


@dataclass
class EvalReport:
    """
    Accuracy of an estimated trajectory against a reference.

    ``ape_rmse`` squared is the mean squared 3-D position error; ``axis_rmse``
    holds the per-axis RMSE.
    """

    ape_rmse: float
    axis_rmse: Tuple[float, float, float]
    n_samples: int
    n_unmatched: int = 0
    alignment: str = "none"
    orientation_rmse: Optional[float] = None
    solver: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["axis_rmse"] = list(self.axis_rmse)
        return data

    def rows(self) -> Sequence[Tuple[str, str]]:
        """``(metric, value)`` rows for tabular display."""
        rows = [
            ("APE RMSE [m]", format_metric(self.ape_rmse)),
            ("RMSE x/y/z [m]", " / ".join(format_metric(v) for v in self.axis_rmse)),
            ("Samples", str(self.n_samples)),
            ("Unmatched", str(self.n_unmatched)),
            ("Alignment", self.alignment),
        ]
        if self.orientation_rmse is not None:
            rows.append(("Orientation RMSE [rad]", format_metric(self.orientation_rmse)))
        if self.solver.get("steps"):
            rows.append(
                (
                    "Iterations per step",
                    format_mean_sd(self.solver["iterations_mean"], self.solver["iterations_std"]),
                )
            )
            rows.append(
                (
                    "Runtime per step [ms]",
                    format_mean_sd(self.solver["runtime_ms_mean"], self.solver["runtime_ms_std"]),
                )
            )
        return rows


def evaluate_ape(
    estimated: Trajectory,
    reference: Trajectory,
    max_dt: float = 0.05,
    solver_stats: Optional[Dict[str, float]] = None,
) -> EvalReport:
    """
    Absolute position error of ``estimated`` against ``reference``.

    Parameters
    ----------
    estimated, reference : pd.DataFrame or dict
        Trajectories with ``t`` and positions (``px, py, pz`` columns or a
        ``p`` array); orientations are compared too when both carry them.
    max_dt : float
        Association tolerance in seconds, half a knot interval by default.
    solver_stats : dict, optional
        Per-step solver summary attached to the report.

    Returns
    -------
    EvalReport

    Raises
    ------
    NoOverlap
        If no estimated sample has a reference sample within ``max_dt``.

    Examples
    --------
    Two matched samples with position errors of 3 m and 4 m give an APE
    RMSE of ``sqrt(25 / 2)``.
    """
    t_est, p_est, q_est = _columns(estimated)
    t_ref, p_ref, q_ref = _columns(reference)
    order = np.argsort(t_ref, kind="stable")
    t_ref, p_ref = t_ref[order], p_ref[order]
    q_ref = None if q_ref is None else q_ref[order]

    idx_est, idx_ref = associate(t_est, t_ref, max_dt)
    if idx_est.size == 0:
        raise NoOverlap(
            f"No estimated sample lies within {max_dt} s of a reference sample"
        )
    errors = p_est[idx_est] - p_ref[idx_ref]
    axis = np.sqrt(np.mean(errors**2, axis=0))

    rot = None
    if q_est is not None and q_ref is not None:
        rot = orientation_rmse(q_est[idx_est], q_ref[idx_ref])

    unmatched = len(t_est) - idx_est.size
    if unmatched:
        logger.info("%d estimated samples had no reference within %.3f s", unmatched, max_dt)
    return EvalReport(
        ape_rmse=rmse(errors),
        axis_rmse=tuple(float(v) for v in axis),
        n_samples=int(idx_est.size),
        n_unmatched=int(unmatched),
        orientation_rmse=rot,
        solver=dict(solver_stats or {}),
    )
