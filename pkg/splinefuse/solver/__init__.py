"""
Sliding-window nonlinear least squares.
"""

from .layout import CALIB_DIM, ParameterLayout
from .levenberg import SolveStats, check_calibration, lm_step, retract, solve
from .linear import BandedFactor, calibration_condition, solve_arrowhead
from .normal import (
    NormalSystem,
    assemble,
    dense_jacobian,
    lift_block,
    residual_blocks,
    total_cost,
)

__all__ = [
    "CALIB_DIM",
    "ParameterLayout",
    "NormalSystem",
    "assemble",
    "dense_jacobian",
    "lift_block",
    "residual_blocks",
    "total_cost",
    "BandedFactor",
    "solve_arrowhead",
    "calibration_condition",
    "SolveStats",
    "lm_step",
    "retract",
    "solve",
    "check_calibration",
]
