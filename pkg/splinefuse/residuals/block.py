"""
Container for a batch of residuals of one kind and their Jacobians.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..exceptions import OutOfWindow

#: Ambient knot Jacobian columns: quaternion (4), position (3), bias (6).
KNOT_Q = slice(0, 4)
KNOT_P = slice(4, 7)
KNOT_B = slice(7, 13)
KNOT_WIDTH = 13

#: Ambient calibration Jacobian columns: q_WU (4), t_WU (3), g_dir (3).
CALIB_Q = slice(0, 4)
CALIB_T = slice(4, 7)
CALIB_G = slice(7, 10)
CALIB_WIDTH = 10


@dataclass
class ResidualBlock:
    """
    Residuals of ``count`` measurements of one kind.

    Attributes
    ----------
    kind : str
        Residual kind ("toa", "tdoa", "accel", "gyro", "bias", "orientation").
    residual : np.ndarray
        Shape (N, m).
    start : np.ndarray
        Index of the first supporting knot of each row, shape (N,).
    jac_knots : np.ndarray
        Derivatives w.r.t. the ``K`` consecutive supporting knots in ambient
        coordinates, shape (N, m, K, 13).
    jac_calib : np.ndarray or None
        Derivatives w.r.t. the calibration in ambient coordinates,
        shape (N, m, 10).
    index : np.ndarray
        Row positions in the batch the block was built from.
    skipped : int
        Measurements left out because they were outside the window or
        geometrically degenerate.
    """

    kind: str
    residual: np.ndarray
    start: np.ndarray
    jac_knots: np.ndarray
    jac_calib: Optional[np.ndarray]
    index: np.ndarray
    skipped: int = 0

    @property
    def count(self) -> int:
        return self.residual.shape[0]

    @property
    def dim(self) -> int:
        return self.residual.shape[1]

    @property
    def support(self) -> int:
        return self.jac_knots.shape[2]

    def take(self, mask) -> "ResidualBlock":
        """Rows selected by ``mask``; dropped rows are not counted as skipped."""
        return replace(
            self,
            residual=self.residual[mask],
            start=self.start[mask],
            jac_knots=self.jac_knots[mask],
            jac_calib=None if self.jac_calib is None else self.jac_calib[mask],
            index=self.index[mask],
        )

    def cost(self) -> float:
        return float(np.sum(self.residual**2))


def window_rows(grid, t: np.ndarray, strict: bool) -> np.ndarray:
    """
    Indices of timestamps inside ``grid.span``.

    Raises
    ------
    OutOfWindow
        If ``strict`` and any timestamp falls outside the span.
    """
    t = np.asarray(t, dtype=float)
    inside = grid.contains(t)
    if strict and not np.all(inside):
        raise OutOfWindow(
            "Measurement outside the window span",
            t=float(t[~inside][0]),
            span=grid.span,
        )
    return np.flatnonzero(inside)
