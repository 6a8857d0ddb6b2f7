"""
Inertial residuals.

The accelerometer measures ``R(r)^T (s_ddot + g_mag g_dir) + b_acc``, the
gyroscope the body angular velocity plus ``b_gyro``. The stacked bias
``b = [b_acc, b_gyro]`` is a Euclidean spline on the pose grid whose change
between consecutive IMU samples is penalized.
"""

from typing import Optional

import numpy as np

from ..exceptions import OutOfWindow
from ..geometry import quaternion as quat
from ..spline import (
    RotationSegment,
    interp_acc,
    interp_vec,
    jac_acc_knots,
    jac_angvel_knots,
    jac_quat_knots,
    jac_vec_knots,
    locate,
)
from .block import (
    CALIB_G,
    CALIB_WIDTH,
    KNOT_B,
    KNOT_P,
    KNOT_Q,
    KNOT_WIDTH,
    ResidualBlock,
    window_rows,
)
from .measurements import Calibration, ImuBatch, ImuMeasurement

_ACC = slice(0, 3)
_GYRO = slice(3, 6)


def _as_imu_batch(measurements) -> ImuBatch:
    if isinstance(measurements, ImuBatch):
        return measurements
    if isinstance(measurements, ImuMeasurement):
        measurements = [measurements]
    return ImuBatch.from_measurements(list(measurements))


def _empty(kind: str, dim: int, skipped: int, calib: bool) -> ResidualBlock:
    return ResidualBlock(
        kind=kind,
        residual=np.zeros((0, dim)),
        start=np.zeros(0, dtype=int),
        jac_knots=np.zeros((0, dim, 4, KNOT_WIDTH)),
        jac_calib=np.zeros((0, dim, CALIB_WIDTH)) if calib else None,
        index=np.zeros(0, dtype=int),
        skipped=skipped,
    )


def _bias_block(cb: np.ndarray, channel: slice) -> np.ndarray:
    """Knot Jacobian block of one 3-channel bias given knot coefficients (N, K)."""
    block = np.zeros((cb.shape[0], 3, cb.shape[1], 6))
    block[..., channel] = np.einsum("nk,ab->nakb", cb, np.eye(3))
    return block


def accel_residual(
    state, measurements, calib: Optional[Calibration] = None, strict: bool = True
) -> ResidualBlock:
    """
    Accelerometer residuals ``R(r)^T (s_ddot + g) + b_acc - a_meas``.

    Parameters
    ----------
    state : WindowState
        Knots and calibration of the window.
    measurements : ImuBatch, ImuMeasurement or sequence of them
        IMU samples; only the accelerometer part is used.
    calib : Calibration, optional
        Gravity to evaluate with; defaults to ``state.calib``.
    strict : bool, default True
        Raise OutOfWindow instead of skipping samples outside the span.

    Returns
    -------
    ResidualBlock
        Three residual rows per sample with knot and gravity-direction
        Jacobians.
    """
    batch = _as_imu_batch(measurements)
    calib = state.calib if calib is None else calib
    rows = window_rows(state.grid, batch.t, strict)
    skipped = len(batch) - len(rows)
    if len(rows) == 0:
        return _empty("accel", 3, skipped, calib=True)

    w = locate(state.grid, batch.t[rows])
    rot = state.rotation
    seg = RotationSegment(rot, w)
    r_inv = quat.inverse(seg.value)
    specific = interp_acc(state.position, w) + calib.gravity
    bias = interp_vec(state.bias, w)
    residual = quat.rotate(r_inv, specific) + bias[:, _ACC] - batch.accel[rows]

    rt = quat.rotation_matrix(r_inv)
    d_rot = quat.jac_rotate(r_inv, specific) @ quat.CONJUGATE
    jq = jac_quat_knots(rot, w, seg)

    count = len(rows)
    jac_knots = np.zeros((count, 3, 4, KNOT_WIDTH))
    jac_knots[..., KNOT_Q] = np.einsum("nac,nkcd->nakd", d_rot, jq)
    jac_knots[..., KNOT_P] = np.einsum("nab,nk->nakb", rt, jac_acc_knots(w))
    jac_knots[..., KNOT_B] = _bias_block(jac_vec_knots(w), _ACC)

    jac_calib = np.zeros((count, 3, CALIB_WIDTH))
    jac_calib[..., CALIB_G] = calib.g_mag * rt
    return ResidualBlock("accel", residual, w.seg - 2, jac_knots, jac_calib, rows, skipped)


def gyro_residual(state, measurements, strict: bool = True) -> ResidualBlock:
    """
    Gyroscope residuals ``omega(t) + b_gyro - omega_meas``.

    The angular velocity comes from the recursive evaluation on the
    quaternion spline.
    """
    batch = _as_imu_batch(measurements)
    rows = window_rows(state.grid, batch.t, strict)
    skipped = len(batch) - len(rows)
    if len(rows) == 0:
        return _empty("gyro", 3, skipped, calib=False)

    w = locate(state.grid, batch.t[rows])
    rot = state.rotation
    seg = RotationSegment(rot, w)
    omega = seg.angular_velocities()[3]
    bias = interp_vec(state.bias, w)
    residual = omega + bias[:, _GYRO] - batch.gyro[rows]

    count = len(rows)
    jac_knots = np.zeros((count, 3, 4, KNOT_WIDTH))
    jac_knots[..., KNOT_Q] = np.moveaxis(jac_angvel_knots(rot, w, seg), 1, 2)
    jac_knots[..., KNOT_B] = _bias_block(jac_vec_knots(w), _GYRO)
    return ResidualBlock("gyro", residual, w.seg - 2, jac_knots, None, rows, skipped)


def bias_residual(state, t_k, t_k1, strict: bool = True) -> ResidualBlock:
    """
    Bias change ``b(t_k1) - b(t_k)`` between paired timestamps.

    ``t_k`` and ``t_k1`` are arrays of equal length with ``t_k < t_k1``. The
    Jacobian spans every knot from the first support of ``t_k`` to the last
    support of ``t_k1``, so consecutive IMU samples that straddle a segment
    boundary touch five knots.

    Examples
    --------
    Constant bias knots give a zero residual for any pair of timestamps.
    """
    t_k = np.atleast_1d(np.asarray(t_k, dtype=float))
    t_k1 = np.atleast_1d(np.asarray(t_k1, dtype=float))
    if t_k.shape != t_k1.shape:
        raise ValueError("Bias pairs need equally many start and end timestamps")
    if np.any(t_k1 <= t_k):
        raise ValueError("Bias pairs must be strictly increasing in time")

    inside = state.grid.contains(t_k) & state.grid.contains(t_k1)
    if strict and not np.all(inside):
        raise OutOfWindow(
            "Bias pair outside the window span",
            t=float(np.concatenate([t_k[~inside], t_k1[~inside]]).max()),
            span=state.grid.span,
        )
    rows = np.flatnonzero(inside)
    skipped = len(t_k) - len(rows)
    if len(rows) == 0:
        return _empty("bias", 6, skipped, calib=False)

    w0 = locate(state.grid, t_k[rows])
    w1 = locate(state.grid, t_k1[rows])
    bias = state.bias
    residual = interp_vec(bias, w1) - interp_vec(bias, w0)

    gap = w1.seg - w0.seg
    support = 4 + int(gap.max())
    # every row shares one support width, so rows near the last knot start earlier
    start = np.minimum(w0.seg - 2, state.grid.count - support)
    offset = (w0.seg - 2) - start
    count = len(rows)
    coeff = np.zeros((count, support))
    idx = np.arange(count)
    c0, c1 = jac_vec_knots(w0), jac_vec_knots(w1)
    for j in range(4):
        coeff[idx, offset + j] -= c0[:, j]
        coeff[idx, offset + gap + j] += c1[:, j]

    jac_knots = np.zeros((count, 6, support, KNOT_WIDTH))
    jac_knots[..., KNOT_B] = np.einsum("nk,ab->nakb", coeff, np.eye(6))
    return ResidualBlock("bias", residual, start, jac_knots, None, rows, skipped)


def consecutive_pairs(t: np.ndarray):
    """Pairs of consecutive strictly increasing timestamps ``(t_k, t_k1)``."""
    t = np.asarray(t, dtype=float)
    if len(t) < 2:
        return np.zeros(0), np.zeros(0)
    t_k, t_k1 = t[:-1], t[1:]
    increasing = t_k1 > t_k
    return t_k[increasing], t_k1[increasing]
