"""
Uniform cumulative cubic B-splines on R^n and on unit quaternions.
"""

from .euclidean import (
    EuclideanSpline,
    interp_acc,
    interp_vec,
    interp_vel,
    jac_acc_knots,
    jac_vec_knots,
    jac_vel_knots,
)
from .grid import BASIS_MATRIX, BasisWeights, KnotGrid, basis_from_u, locate
from .rotation import (
    QuaternionSpline,
    RotationSegment,
    canonical_signs,
    interp_angvel,
    interp_quat,
    jac_angvel_knots,
    jac_quat_knots,
)

__all__ = [
    "BASIS_MATRIX",
    "KnotGrid",
    "BasisWeights",
    "basis_from_u",
    "locate",
    "EuclideanSpline",
    "interp_vec",
    "interp_vel",
    "interp_acc",
    "jac_vec_knots",
    "jac_vel_knots",
    "jac_acc_knots",
    "QuaternionSpline",
    "RotationSegment",
    "canonical_signs",
    "interp_quat",
    "interp_angvel",
    "jac_quat_knots",
    "jac_angvel_knots",
]
