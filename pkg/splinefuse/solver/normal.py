"""
Assembly of the Gauss-Newton normal equations of a window.

Residual blocks are whitened, their ambient Jacobians lifted to tangent
coordinates, and ``J^T J`` / ``J^T r`` accumulated into a dense matrix.
Rows that share the same supporting knots are summed before they are
scattered, so the scatter cost grows with the number of segments rather
than the number of measurements.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import NoiseModel
from ..geometry import quaternion as quat
from ..geometry.sphere import sphere_basis
from ..residuals import (
    MeasurementSet,
    ResidualBlock,
    accel_residual,
    bias_residual,
    consecutive_pairs,
    gyro_residual,
    orientation_residual,
    tdoa_residual,
    toa_residual,
    whiten,
)
from ..residuals.block import CALIB_G, CALIB_Q, CALIB_T, KNOT_B, KNOT_P, KNOT_Q
from .layout import ParameterLayout

logger = logging.getLogger(__name__)


def residual_blocks(
    state,
    measurements: MeasurementSet,
    noise: NoiseModel,
    strict: bool = False,
) -> List[ResidualBlock]:
    """Evaluate and whiten every residual kind present in ``measurements``."""
    m = measurements
    blocks = []
    if m.toa is not None and len(m.toa):
        blocks.append(toa_residual(state, m.toa, anchors=m.anchors, strict=strict))
    if m.tdoa is not None and len(m.tdoa):
        blocks.append(tdoa_residual(state, m.tdoa, anchors=m.anchors, strict=strict))
    if m.imu is not None and len(m.imu):
        if "accel" in m.imu_terms:
            blocks.append(accel_residual(state, m.imu, strict=strict))
        if "gyro" in m.imu_terms:
            blocks.append(gyro_residual(state, m.imu, strict=strict))
        if "bias" in m.imu_terms:
            t_k, t_k1 = consecutive_pairs(m.imu.t)
            if len(t_k):
                blocks.append(bias_residual(state, t_k, t_k1, strict=strict))
    if m.orientation is not None and len(m.orientation):
        blocks.append(orientation_residual(state, m.orientation, strict=strict))
    return [whiten(block, noise) for block in blocks]


def lift_calibration(jac_calib: np.ndarray, calib) -> np.ndarray:
    """Map ambient calibration Jacobians (..., 10) to tangent columns (..., 8)."""
    return np.concatenate(
        [
            jac_calib[..., CALIB_Q] @ quat.tangent_basis(calib.q_WU),
            jac_calib[..., CALIB_T],
            jac_calib[..., CALIB_G] @ sphere_basis(calib.g_dir),
        ],
        axis=-1,
    )


def lift_block(
    block: ResidualBlock, state, layout: ParameterLayout
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Tangent-space Jacobian of a block and the global column of each entry.

    Returns
    -------
    jac : np.ndarray
        Shape (N, m, C).
    cols : np.ndarray
        Shape (N, C); ``-1`` marks fixed parameters.
    """
    count, dim, support = block.count, block.dim, block.support
    knot_idx = block.start[:, None] + np.arange(support)
    parts = []
    for name in layout.blocks:
        if name == "q":
            basis = quat.tangent_basis(state.q[knot_idx])
            parts.append(np.einsum("nmkc,nkcd->nmkd", block.jac_knots[..., KNOT_Q], basis))
        elif name == "p":
            parts.append(block.jac_knots[..., KNOT_P])
        else:
            parts.append(block.jac_knots[..., KNOT_B])
    jac = np.concatenate(parts, axis=-1).reshape(count, dim, support * layout.width)
    cols = layout.columns[knot_idx].reshape(count, support * layout.width)

    if layout.calibrating and block.jac_calib is not None:
        jac = np.concatenate([jac, lift_calibration(block.jac_calib, state.calib)], axis=-1)
        calib_cols = np.broadcast_to(layout.calib_columns, (count, layout.n_calib_cols))
        cols = np.concatenate([cols, calib_cols], axis=-1)
    return jac, cols


@dataclass
class NormalSystem:
    """
    Normal equations ``H phi = -g`` of a window with cost ``sum |r|^2``.

    Partial systems over disjoint measurement sets of the same layout can be
    added together.
    """

    layout: ParameterLayout
    H: np.ndarray
    g: np.ndarray
    cost: float = 0.0
    support: int = 4
    counts: Dict[str, int] = field(default_factory=dict)
    skipped: int = 0

    @classmethod
    def zeros(cls, layout: ParameterLayout) -> "NormalSystem":
        n = layout.dim
        return cls(layout, np.zeros((n, n)), np.zeros(n))

    @property
    def n_residuals(self) -> int:
        return sum(self.counts.values())

    def add_block(self, block: ResidualBlock, state) -> "NormalSystem":
        """Accumulate one whitened residual block in place."""
        self.counts[block.kind] = self.counts.get(block.kind, 0) + block.count
        self.skipped += block.skipped
        if block.count == 0:
            return self
        self.support = max(self.support, block.support)

        jac, cols = lift_block(block, state, self.layout)
        residual = block.residual
        self.cost += float(np.sum(residual**2))

        order = np.argsort(block.start, kind="stable")
        starts = block.start[order]
        first = np.flatnonzero(np.r_[True, starts[1:] != starts[:-1]])
        jtj = np.add.reduceat(np.einsum("nmi,nmj->nij", jac[order], jac[order]), first)
        jtr = np.add.reduceat(np.einsum("nmi,nm->ni", jac[order], residual[order]), first)
        group_cols = cols[order][first]

        n = self.layout.dim
        size = n + 1
        idx = np.where(group_cols < 0, n, group_cols)
        flat = (idx[:, :, None] * size + idx[:, None, :]).ravel()
        hess = np.bincount(flat, weights=jtj.ravel(), minlength=size * size)
        grad = np.bincount(idx.ravel(), weights=jtr.ravel(), minlength=size)
        self.H += hess.reshape(size, size)[:n, :n]
        self.g += grad[:n]
        return self

    def __add__(self, other: "NormalSystem") -> "NormalSystem":
        if other.layout.dim != self.layout.dim:
            raise ValueError("Cannot add normal systems of different layouts")
        counts = dict(self.counts)
        for kind, n in other.counts.items():
            counts[kind] = counts.get(kind, 0) + n
        return NormalSystem(
            self.layout,
            self.H + other.H,
            self.g + other.g,
            self.cost + other.cost,
            max(self.support, other.support),
            counts,
            self.skipped + other.skipped,
        )


def assemble(
    state,
    measurements: MeasurementSet,
    noise: NoiseModel,
    layout: ParameterLayout,
    blocks: Optional[List[ResidualBlock]] = None,
) -> NormalSystem:
    """
    Build ``H = J^T J``, ``g = J^T r`` and the cost of a window.

    Out-of-window and degenerate measurements are skipped and counted in
    ``NormalSystem.skipped``.

    Parameters
    ----------
    state : WindowState
        Linearization point.
    measurements : MeasurementSet
        Measurements of the window.
    noise : NoiseModel
        Covariances and weights used for whitening.
    layout : ParameterLayout
        Free parameters.
    blocks : list of ResidualBlock, optional
        Pre-computed whitened blocks; evaluated from ``measurements`` if omitted.
    """
    if blocks is None:
        blocks = residual_blocks(state, measurements, noise, strict=False)
    system = NormalSystem.zeros(layout)
    for block in blocks:
        system.add_block(block, state)
    return system


def total_cost(state, measurements: MeasurementSet, noise: NoiseModel) -> float:
    """Sum of squared whitened residuals."""
    return sum(b.cost() for b in residual_blocks(state, measurements, noise))


def dense_jacobian(
    state, measurements: MeasurementSet, noise: NoiseModel, layout: ParameterLayout
) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked whitened residual vector and full tangent Jacobian (M x dim)."""
    rows_r, rows_j = [], []
    for block in residual_blocks(state, measurements, noise):
        if block.count == 0:
            continue
        jac, cols = lift_block(block, state, layout)
        full = np.zeros((block.count, block.dim, layout.dim + 1))
        idx = np.where(cols < 0, layout.dim, cols)
        np.add.at(full, (np.arange(block.count)[:, None], slice(None), idx), np.moveaxis(jac, 1, 2))
        rows_j.append(full[..., : layout.dim].reshape(-1, layout.dim))
        rows_r.append(block.residual.reshape(-1))
    if not rows_r:
        return np.zeros(0), np.zeros((0, layout.dim))
    return np.concatenate(rows_r), np.vstack(rows_j)
