"""
Cumulative cubic B-splines over R^n.

Used for positions and for the stacked accelerometer/gyroscope bias. Knot
differences ``delta_j = p_{i+j-2} - p_{i+j-3}`` are blended with the
cumulative basis, ``s(t) = p_{i-2} + sum_j lambda_j delta_j``.
"""

from dataclasses import dataclass

import numpy as np

from .grid import BasisWeights, KnotGrid, locate


@dataclass
class EuclideanSpline:
    """Spline over R^n with ``knots`` of shape (grid.count, n)."""

    grid: KnotGrid
    knots: np.ndarray

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        if self.knots.ndim != 2 or len(self.knots) != self.grid.count:
            raise ValueError(
                f"Expected {self.grid.count} knots, got array of shape {self.knots.shape}"
            )

    @property
    def dim(self) -> int:
        return self.knots.shape[1]

    def local_knots(self, w: BasisWeights) -> np.ndarray:
        """Supporting knots for each timestamp, shape (..., 4, n)."""
        return self.knots[w.support()]

    def value(self, t) -> np.ndarray:
        return interp_vec(self, locate(self.grid, t))

    def velocity(self, t) -> np.ndarray:
        return interp_vel(self, locate(self.grid, t))

    def acceleration(self, t) -> np.ndarray:
        return interp_acc(self, locate(self.grid, t))


def _deltas(local: np.ndarray) -> np.ndarray:
    return local[..., 1:, :] - local[..., :-1, :]


def _blend(weights: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    return np.einsum("...j,...jn->...n", weights, deltas)


def interp_vec(s: EuclideanSpline, w: BasisWeights) -> np.ndarray:
    """Spline value ``p_{i-2} + sum_j lambda_j delta_j``; shape (..., n)."""
    local = s.local_knots(w)
    return local[..., 0, :] + _blend(w.lam, _deltas(local))


def interp_vel(s: EuclideanSpline, w: BasisWeights) -> np.ndarray:
    """First time derivative ``sum_j lambda_dot_j delta_j``."""
    return _blend(w.dlam, _deltas(s.local_knots(w)))


def interp_acc(s: EuclideanSpline, w: BasisWeights) -> np.ndarray:
    """Second time derivative ``sum_j lambda_ddot_j delta_j``."""
    return _blend(w.ddlam, _deltas(s.local_knots(w)))


def _telescope(weights: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Coefficients ``I[j=0] first + I[j!=0] w_j - I[j!=3] w_{j+1}``, shape (..., 4)."""
    shape = weights.shape[:-1] + (4,)
    coeff = np.zeros(shape)
    coeff[..., 0] = first
    coeff[..., 1:] += weights
    coeff[..., :3] -= weights
    return coeff


def jac_vec_knots(w: BasisWeights) -> np.ndarray:
    """
    Scalar coefficient of each supporting knot in the spline value.

    ``d s / d p_{i+j-2} = coeff[..., j] * I``; coefficients sum to one.
    """
    return _telescope(w.lam, 1.0)


def jac_vel_knots(w: BasisWeights) -> np.ndarray:
    """Knot coefficients of the velocity; they sum to zero."""
    return _telescope(w.dlam, 0.0)


def jac_acc_knots(w: BasisWeights) -> np.ndarray:
    """Knot coefficients of the acceleration; they sum to zero."""
    return _telescope(w.ddlam, 0.0)
