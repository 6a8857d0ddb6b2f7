"""
Direct orientation residuals ``Log(q_meas⁻¹ ⊗ r(t))``.

Used to fit an orientation spline to attitude samples, together with
gyroscope residuals.
"""

import numpy as np

from ..geometry import quaternion as quat
from ..spline import RotationSegment, jac_quat_knots, locate
from .block import KNOT_Q, KNOT_WIDTH, ResidualBlock, window_rows
from .measurements import OrientationBatch, OrientationMeasurement


def orientation_residual(state, measurements, strict: bool = True) -> ResidualBlock:
    """
    Tangent-space orientation error at each sample.

    The relative quaternion is sign-canonicalized before the log map, so a
    measurement and its negation produce the same residual.

    Raises
    ------
    OutOfWindow
        If ``strict`` and a sample lies outside the window span.
    """
    if isinstance(measurements, OrientationMeasurement):
        measurements = [measurements]
    if not isinstance(measurements, OrientationBatch):
        measurements = OrientationBatch.from_measurements(list(measurements))
    batch = measurements

    rows = window_rows(state.grid, batch.t, strict)
    skipped = len(batch) - len(rows)
    count = len(rows)
    if count == 0:
        return ResidualBlock(
            "orientation",
            np.zeros((0, 3)),
            np.zeros(0, dtype=int),
            np.zeros((0, 3, 4, KNOT_WIDTH)),
            None,
            rows,
            skipped,
        )

    w = locate(state.grid, batch.t[rows])
    rot = state.rotation
    seg = RotationSegment(rot, w)
    q_inv = quat.inverse(quat.normalize(batch.q[rows]))
    diff = quat.hamilton(q_inv, seg.value)
    sign = np.where(diff[:, 0] < 0, -1.0, 1.0)
    diff = diff * sign[:, None]
    residual = quat.log_map(diff)

    d_res = sign[:, None, None] * (quat.jac_log(diff) @ quat.left_matrix(q_inv))
    jac_knots = np.zeros((count, 3, 4, KNOT_WIDTH))
    jac_knots[..., KNOT_Q] = np.einsum(
        "nac,nkcd->nakd", d_res, jac_quat_knots(rot, w, seg)
    )
    return ResidualBlock("orientation", residual, w.seg - 2, jac_knots, None, rows, skipped)
