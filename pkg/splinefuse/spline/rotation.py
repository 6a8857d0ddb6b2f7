"""
Cumulative cubic B-splines on the unit-quaternion manifold.

``r(t) = q_{i-2} ⊗ e_1 ⊗ e_2 ⊗ e_3`` with increments
``e_j = Exp(lambda_j delta_j)`` and knot differences
``delta_j = Log(q_{i+j-3}⁻¹ ⊗ q_{i+j-2})``. Body angular velocity follows the
recursion ``omega_k = R(e_k⁻¹) omega_{k-1} + 2 lambda_dot_k delta_k``.

Knot Jacobians are returned as dense local blocks for the four supporting
knots, with respect to the four ambient quaternion components; lifting them
to tangent perturbations is left to the solver.
"""

from dataclasses import dataclass

import numpy as np

from ..geometry import quaternion as quat
from .grid import BasisWeights, KnotGrid, locate


def canonical_signs(knots: np.ndarray) -> np.ndarray:
    """
    Flip knot signs so every adjacent pair has a non-negative dot product.

    This keeps each knot difference on the principal branch of the log map.
    """
    knots = np.array(knots, dtype=float)
    if len(knots) < 2:
        return knots
    dots = np.sum(knots[1:] * knots[:-1], axis=-1)
    flips = np.concatenate([[1.0], np.cumprod(np.where(dots < 0, -1.0, 1.0))])
    return knots * flips[:, None]


@dataclass
class QuaternionSpline:
    """Orientation spline with unit-quaternion ``knots`` of shape (grid.count, 4)."""

    grid: KnotGrid
    knots: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.shape != (self.grid.count, 4):
            raise ValueError(
                f"Expected {self.grid.count} quaternion knots, got shape {knots.shape}"
            )
        self.knots = canonical_signs(quat.normalize(knots))

    def append(self, q: np.ndarray) -> None:
        """Append a knot, flipping its sign to stay next to the previous knot."""
        q = quat.normalize(q)
        if np.dot(q, self.knots[-1]) < 0:
            q = -q
        self.knots = np.vstack([self.knots, q])
        self.grid = self.grid.extended(1)

    def orientation(self, t) -> np.ndarray:
        return interp_quat(self, locate(self.grid, t))

    def angular_velocity(self, t) -> np.ndarray:
        return interp_angvel(self, locate(self.grid, t))


class RotationSegment:
    """
    Intermediate quantities of one batch evaluation.

    Residuals that need the orientation, the angular velocity and their
    Jacobians at the same timestamps build one segment and pass it to each
    function.
    """

    def __init__(self, s: QuaternionSpline, w: BasisWeights):
        self.w = w
        self.local = s.knots[w.support()]  # (..., 4, 4)
        prev, succ = self.local[..., :-1, :], self.local[..., 1:, :]
        self.diff = quat.hamilton(quat.inverse(prev), succ)  # (..., 3, 4)
        self.delta = quat.log_map(self.diff)  # (..., 3, 3)
        self.tangent = w.lam[..., None] * self.delta
        self.incr = quat.exp_map(self.tangent)  # (..., 3, 4)

        prefix = [self.local[..., 0, :]]
        for k in range(3):
            prefix.append(quat.hamilton(prefix[-1], self.incr[..., k, :]))
        self.prefix = prefix  # prefix[k] = q_{i-2} ⊗ e_1 ⊗ ... ⊗ e_k

        suffix = [quat.identity(w.shape)]
        for k in (2, 1, 0):
            suffix.insert(0, quat.hamilton(self.incr[..., k, :], suffix[0]))
        self.suffix = suffix  # suffix[k] = e_{k+1} ⊗ ... ⊗ e_3

    @property
    def value(self) -> np.ndarray:
        return self.prefix[3]

    def angular_velocities(self):
        """Recursion states ``omega_0 = 0, omega_1, omega_2, omega_3``."""
        omegas = [np.zeros(self.w.shape + (3,))]
        for k in range(3):
            rotated = quat.rotate(quat.inverse(self.incr[..., k, :]), omegas[-1])
            omegas.append(rotated + 2.0 * self.w.dlam[..., k, None] * self.delta[..., k, :])
        return omegas

    def delta_jacobians(self):
        """
        Derivatives of each ``delta_j`` w.r.t. its two knots.

        Returns ``(d_first, d_second)``, each a list over j = 1..3 of (..., 3, 4)
        arrays: ``d_first[j-1]`` w.r.t. ``q_{i+j-3}`` and ``d_second[j-1]`` w.r.t.
        ``q_{i+j-2}``.
        """
        jl = quat.jac_log(self.diff)  # (..., 3, 3, 4)
        d_first, d_second = [], []
        for k in range(3):
            prev, succ = self.local[..., k, :], self.local[..., k + 1, :]
            d_second.append(jl[..., k, :, :] @ quat.left_matrix(quat.inverse(prev)))
            d_first.append(jl[..., k, :, :] @ quat.right_matrix(succ) @ quat.CONJUGATE)
        return d_first, d_second


def _assemble_knots(direct, per_delta, d_first, d_second):
    """
    Combine per-increment derivatives into the four local knot blocks.

    ``per_delta[j-1]`` is the derivative of the interpolated quantity w.r.t.
    ``delta_j``; ``direct`` is the derivative w.r.t. the first knot holding all
    increments fixed (``None`` when there is no such term).
    """
    blocks = []
    for j in range(4):
        block = 0.0 if direct is None or j != 0 else direct
        if j != 0:
            block = block + per_delta[j - 1] @ d_second[j - 1]
        if j != 3:
            block = block + per_delta[j] @ d_first[j]
        blocks.append(block)
    return np.stack(blocks, axis=-3)


def interp_quat(s: QuaternionSpline, w: BasisWeights) -> np.ndarray:
    """Interpolated orientation ``r(t)``; shape (..., 4)."""
    return RotationSegment(s, w).value


def interp_angvel(s: QuaternionSpline, w: BasisWeights) -> np.ndarray:
    """Body-frame angular velocity from the recursive scheme; shape (..., 3)."""
    return RotationSegment(s, w).angular_velocities()[3]


def jac_quat_knots(s: QuaternionSpline, w: BasisWeights, segment=None) -> np.ndarray:
    """
    Jacobian of ``r(t)`` w.r.t. the four supporting knots.

    Returns
    -------
    np.ndarray
        Shape (..., 4, 4, 4); block ``[..., j, :, :]`` is ``d r / d q_{i+j-2}``.
    """
    seg = segment if segment is not None else RotationSegment(s, w)
    jexp = quat.jac_exp(seg.tangent)  # (..., 3, 4, 3)
    per_delta = []
    for k in range(3):
        left = quat.left_matrix(seg.prefix[k])
        right = quat.right_matrix(seg.suffix[k + 1])
        per_delta.append(w.lam[..., k, None, None] * (left @ right @ jexp[..., k, :, :]))
    direct = quat.right_matrix(seg.suffix[0])
    d_first, d_second = seg.delta_jacobians()
    return _assemble_knots(direct, per_delta, d_first, d_second)


def jac_angvel_knots(s: QuaternionSpline, w: BasisWeights, segment=None) -> np.ndarray:
    """
    Jacobian of the angular velocity w.r.t. the four supporting knots.

    Returns
    -------
    np.ndarray
        Shape (..., 4, 3, 4); block ``[..., j, :, :]`` is ``d omega / d q_{i+j-2}``.
    """
    seg = segment if segment is not None else RotationSegment(s, w)
    omegas = seg.angular_velocities()
    jexp = quat.jac_exp(seg.tangent)

    # d omega / d omega_k as products of R(e^-1) matrices, k = 1..3
    rot_inv = quat.rotation_matrix(quat.inverse(seg.incr))  # (..., 3, 3, 3)
    chain = [None, None, np.broadcast_to(np.eye(3), w.shape + (3, 3))]
    for k in (1, 0):
        chain[k] = chain[k + 1] @ rot_inv[..., k + 1, :, :]

    per_delta = []
    for k in range(3):
        inv_incr = quat.inverse(seg.incr[..., k, :])
        d_rot = quat.jac_rotate(inv_incr, omegas[k]) @ quat.CONJUGATE @ jexp[..., k, :, :]
        d_omega = w.lam[..., k, None, None] * d_rot
        d_omega = d_omega + 2.0 * w.dlam[..., k, None, None] * np.eye(3)
        per_delta.append(chain[k] @ d_omega)
    d_first, d_second = seg.delta_jacobians()
    return _assemble_knots(None, per_delta, d_first, d_second)
