"""
UWB ranging residuals.

The tag sits at ``nu`` in the body frame, so in the world frame it is at
``y = R(r(t)) nu + s(t)`` and in the UWB frame at ``z = R(q_WU) y + t_WU``.
A ToA residual compares ``|z - a|`` with the measured range; a TDoA residual
compares the difference of the distances to two anchors with the measured
range difference.
"""

import logging
from typing import Optional

import numpy as np

from ..exceptions import DegenerateGeometry, UnknownAnchor
from ..geometry import quaternion as quat
from ..spline import (
    RotationSegment,
    interp_vec,
    jac_quat_knots,
    jac_vec_knots,
    locate,
)
from .block import (
    CALIB_Q,
    CALIB_T,
    CALIB_WIDTH,
    KNOT_P,
    KNOT_Q,
    KNOT_WIDTH,
    ResidualBlock,
    window_rows,
)
from .measurements import (
    AnchorMap,
    Calibration,
    TdoaBatch,
    ToaBatch,
    UwbTdoaMeasurement,
    UwbToaMeasurement,
)

logger = logging.getLogger(__name__)

#: Tag-anchor distances below this are treated as coincident.
MIN_DISTANCE = 1e-9


def _as_batch(measurements, batch_cls, single_cls):
    if isinstance(measurements, batch_cls):
        return measurements
    if isinstance(measurements, single_cls):
        measurements = [measurements]
    return batch_cls.from_measurements(list(measurements))


def _require_anchors(anchors: Optional[AnchorMap]) -> AnchorMap:
    if anchors is None:
        raise UnknownAnchor("No anchor map supplied for UWB residuals")
    return anchors


def _empty(kind: str, skipped: int) -> ResidualBlock:
    return ResidualBlock(
        kind=kind,
        residual=np.zeros((0, 1)),
        start=np.zeros(0, dtype=int),
        jac_knots=np.zeros((0, 1, 4, KNOT_WIDTH)),
        jac_calib=np.zeros((0, 1, CALIB_WIDTH)),
        index=np.zeros(0, dtype=int),
        skipped=skipped,
    )


def tag_in_uwb(state, w, calib: Calibration):
    """
    Tag position in the UWB frame with its Jacobians.

    Returns
    -------
    z : np.ndarray
        Shape (N, 3).
    dz_knots : np.ndarray
        Shape (N, 3, 4, 13), ambient knot layout.
    dz_calib : np.ndarray
        Shape (N, 3, 10), ambient calibration layout.
    """
    rot, pos = state.rotation, state.position
    seg = RotationSegment(rot, w)
    jq = jac_quat_knots(rot, w, seg)
    cp = jac_vec_knots(w)

    y = quat.rotate(seg.value, calib.tag_offset) + interp_vec(pos, w)
    z = calib.to_uwb(y)
    r_wu = quat.rotation_matrix(calib.q_WU)
    dy_dr = quat.jac_rotate(seg.value, calib.tag_offset)

    count = len(z)
    dz_knots = np.zeros((count, 3, 4, KNOT_WIDTH))
    dz_knots[..., KNOT_Q] = np.einsum("ab,nbc,nkcd->nakd", r_wu, dy_dr, jq)
    dz_knots[..., KNOT_P] = np.einsum("ab,nk->nakb", r_wu, cp)

    dz_calib = np.zeros((count, 3, CALIB_WIDTH))
    dz_calib[..., CALIB_Q] = quat.jac_rotate(calib.q_WU, y)
    dz_calib[..., CALIB_T] = np.eye(3)
    return z, dz_knots, dz_calib


def _unit_vectors(diff: np.ndarray):
    dist = np.linalg.norm(diff, axis=-1)
    safe = np.where(dist < MIN_DISTANCE, 1.0, dist)
    return dist, diff / safe[:, None]


def _drop_degenerate(degenerate: np.ndarray, strict: bool, kind: str) -> np.ndarray:
    n_bad = int(np.count_nonzero(degenerate))
    if n_bad and strict:
        raise DegenerateGeometry(f"Tag coincides with an anchor in {kind} batch", count=n_bad)
    if n_bad:
        logger.debug("Skipping %d degenerate %s measurements", n_bad, kind)
    return ~degenerate


def toa_residual(
    state,
    measurements,
    calib: Optional[Calibration] = None,
    anchors: Optional[AnchorMap] = None,
    strict: bool = True,
) -> ResidualBlock:
    """
    Range residuals ``|z(t) - a| - range``.

    Parameters
    ----------
    state : WindowState
        Knots and calibration of the window.
    measurements : ToaBatch, UwbToaMeasurement or sequence of them
        Range measurements.
    calib : Calibration, optional
        Calibration to evaluate with; defaults to ``state.calib``.
    anchors : AnchorMap
        Anchor positions in the UWB frame.
    strict : bool, default True
        Raise on out-of-window or degenerate measurements instead of
        skipping and counting them.

    Returns
    -------
    ResidualBlock
        One scalar residual per usable measurement.

    Raises
    ------
    UnknownAnchor, OutOfWindow, DegenerateGeometry
    """
    batch = _as_batch(measurements, ToaBatch, UwbToaMeasurement)
    calib = state.calib if calib is None else calib
    positions = _require_anchors(anchors).positions(batch.anchor)

    rows = window_rows(state.grid, batch.t, strict)
    skipped = len(batch) - len(rows)
    if len(rows) == 0:
        return _empty("toa", skipped)

    w = locate(state.grid, batch.t[rows])
    z, dz_knots, dz_calib = tag_in_uwb(state, w, calib)
    dist, u = _unit_vectors(z - positions[rows])
    keep = _drop_degenerate(dist < MIN_DISTANCE, strict, "toa")
    skipped += int(np.count_nonzero(~keep))

    residual = (dist - batch.range[rows])[:, None]
    jac_knots = np.einsum("na,nakc->nkc", u, dz_knots)[:, None]
    jac_calib = np.einsum("na,nac->nc", u, dz_calib)[:, None]
    block = ResidualBlock("toa", residual, w.seg - 2, jac_knots, jac_calib, rows, skipped)
    return block.take(keep)


def tdoa_residual(
    state,
    measurements,
    calib: Optional[Calibration] = None,
    anchors: Optional[AnchorMap] = None,
    strict: bool = True,
) -> ResidualBlock:
    """
    Range-difference residuals ``|z - a_i| - |z - a_j| - ddist``.

    Swapping the anchors and negating ``ddist`` negates the residual.

    Raises
    ------
    UnknownAnchor, OutOfWindow, DegenerateGeometry
    """
    batch = _as_batch(measurements, TdoaBatch, UwbTdoaMeasurement)
    calib = state.calib if calib is None else calib
    anchors = _require_anchors(anchors)
    pos_i = anchors.positions(batch.anchor_i)
    pos_j = anchors.positions(batch.anchor_j)

    rows = window_rows(state.grid, batch.t, strict)
    skipped = len(batch) - len(rows)
    if len(rows) == 0:
        return _empty("tdoa", skipped)

    w = locate(state.grid, batch.t[rows])
    z, dz_knots, dz_calib = tag_in_uwb(state, w, calib)
    dist_i, u_i = _unit_vectors(z - pos_i[rows])
    dist_j, u_j = _unit_vectors(z - pos_j[rows])
    keep = _drop_degenerate(
        (dist_i < MIN_DISTANCE) | (dist_j < MIN_DISTANCE), strict, "tdoa"
    )
    skipped += int(np.count_nonzero(~keep))

    residual = (dist_i - dist_j - batch.ddist[rows])[:, None]
    du = u_i - u_j
    jac_knots = np.einsum("na,nakc->nkc", du, dz_knots)[:, None]
    jac_calib = np.einsum("na,nac->nc", du, dz_calib)[:, None]
    block = ResidualBlock("tdoa", residual, w.seg - 2, jac_knots, jac_calib, rows, skipped)
    return block.take(keep)
