"""
Linear solves of the damped normal equations.

The knot part of the normal matrix is banded and the calibration columns
border it, so the system is solved with a banded Cholesky factorization of
the knot block and a dense Schur complement on the calibration block.
"""

import logging
from typing import Tuple

import numpy as np
from scipy.linalg import (
    LinAlgError,
    cho_factor,
    cho_solve,
    cho_solve_banded,
    cholesky_banded,
)

from ..exceptions import SingularSystem

logger = logging.getLogger(__name__)


def upper_bandwidth(matrix: np.ndarray) -> int:
    """Largest ``j - i`` with a non-zero entry ``matrix[i, j]``."""
    rows, cols = np.nonzero(matrix)
    if rows.size == 0:
        return 0
    return int(max(np.max(cols - rows), 0))


def to_banded(matrix: np.ndarray, bandwidth: int) -> np.ndarray:
    """Upper banded storage ``ab[u + i - j, j] = A[i, j]`` used by LAPACK."""
    n = matrix.shape[0]
    ab = np.zeros((bandwidth + 1, n))
    for k in range(bandwidth + 1):
        ab[bandwidth - k, k:] = np.diagonal(matrix, k)
    return ab


class BandedFactor:
    """Cholesky factor of a symmetric positive definite banded matrix."""

    def __init__(self, matrix: np.ndarray, damping: float = 0.0):
        self.n = matrix.shape[0]
        self.bandwidth = upper_bandwidth(matrix)
        if self.n == 0:
            self._factor = None
            return
        ab = to_banded(matrix, self.bandwidth)
        ab[-1] += damping
        try:
            self._factor = cholesky_banded(ab, lower=False)
        except LinAlgError:
            raise SingularSystem(
                "Knot block of the normal matrix is not positive definite", damping=damping
            ) from None

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return np.zeros_like(rhs)
        return cho_solve_banded((self._factor, False), rhs)


def _split(H: np.ndarray, g: np.ndarray, n_knot: int):
    return (
        H[:n_knot, :n_knot],
        H[:n_knot, n_knot:],
        H[n_knot:, n_knot:],
        g[:n_knot],
        g[n_knot:],
    )


def solve_arrowhead(H: np.ndarray, g: np.ndarray, n_knot: int) -> np.ndarray:
    """
    Solve ``H x = g`` for a matrix with a banded leading ``n_knot`` block.

    Raises
    ------
    SingularSystem
        If the knot block or the Schur complement is not positive definite.
    """
    if H.shape[0] == 0:
        return np.zeros(0)
    hkk, hkc, hcc, gk, gc = _split(H, g, n_knot)
    knots = BandedFactor(hkk)
    if hcc.size == 0:
        return knots.solve(gk)

    inv_hkc = knots.solve(hkc) if n_knot else np.zeros_like(hkc)
    inv_gk = knots.solve(gk) if n_knot else np.zeros_like(gk)
    schur = hcc - hkc.T @ inv_hkc
    try:
        factor = cho_factor(schur)
    except LinAlgError:
        raise SingularSystem("Calibration Schur complement is not positive definite") from None
    xc = cho_solve(factor, gc - hkc.T @ inv_gk)
    xk = inv_gk - inv_hkc @ xc
    return np.concatenate([xk, xc])


def schur_complement(H: np.ndarray, n_knot: int, damping: float = 1e-9) -> np.ndarray:
    """
    Calibration block of ``H`` after eliminating the knot parameters.

    A relative ``damping`` is added to the knot diagonal so idle or
    unobserved knots do not make the elimination fail.
    """
    hkk, hkc, hcc, _, _ = _split(H, np.zeros(H.shape[0]), n_knot)
    if n_knot == 0:
        return hcc.copy()
    scale = max(float(np.max(np.abs(np.diagonal(hkk)))), 1.0)
    knots = BandedFactor(hkk, damping=damping * scale)
    return hcc - hkc.T @ knots.solve(hkc)


def calibration_condition(H: np.ndarray, n_knot: int, damping: float = 1e-9) -> float:
    """
    Condition number of the calibration Schur complement.

    Returns ``inf`` when the complement has a non-positive eigenvalue.
    """
    schur = schur_complement(H, n_knot, damping)
    if schur.size == 0:
        return 1.0
    eig = np.linalg.eigvalsh(0.5 * (schur + schur.T))
    if eig[0] <= 0.0:
        return float("inf")
    return float(eig[-1] / eig[0])


def damped(H: np.ndarray, lam: float, floor: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """Marquardt damping ``H + lam * diag(max(diag(H), floor))``."""
    diag = np.maximum(np.diagonal(H), floor)
    return H + lam * np.diag(diag), diag
