"""
Quaternion geometry for continuous-time motion estimation.

This module provides unit-quaternion arithmetic, the exponential and
logarithm maps between S^3 and its tangent space at identity, and their
closed-form Jacobians.
"""

from .quaternion import (
    CONJUGATE,
    exp_map,
    from_axis_angle,
    geodesic_angle,
    hamilton,
    identity,
    inverse,
    jac_exp,
    jac_log,
    jac_rotate,
    left_matrix,
    log_map,
    normalize,
    plus,
    right_matrix,
    rotate,
    rotation_matrix,
    skew,
    tangent_basis,
)
from .sphere import angle_between, sphere_basis, sphere_plus

__all__ = [
    "CONJUGATE",
    "identity",
    "normalize",
    "skew",
    "hamilton",
    "inverse",
    "left_matrix",
    "right_matrix",
    "rotate",
    "rotation_matrix",
    "exp_map",
    "log_map",
    "jac_exp",
    "jac_log",
    "jac_rotate",
    "tangent_basis",
    "plus",
    "from_axis_angle",
    "geodesic_angle",
    "sphere_basis",
    "sphere_plus",
    "angle_between",
]
