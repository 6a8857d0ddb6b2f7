"""
Residual weighting and UWB outlier gating.
"""

import logging
from dataclasses import replace
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from ..config import NoiseModel
from ..exceptions import NonSPDCovariance
from .block import ResidualBlock
from .measurements import MeasurementSet
from .uwb import tdoa_residual, toa_residual

logger = logging.getLogger(__name__)


def whitening_matrix(cov: np.ndarray, weight: float = 1.0, kind: str = None) -> np.ndarray:
    """
    ``sqrt(weight) * L^-1`` with ``cov = L L^T``.

    Raises
    ------
    NonSPDCovariance
        If ``cov`` is not symmetric positive definite or ``weight`` is not
        positive.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if not weight > 0:
        raise NonSPDCovariance(f"Residual weight must be positive, got {weight}", kind=kind)
    if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
        raise NonSPDCovariance("Covariance is not symmetric", kind=kind)
    try:
        lower = cholesky(cov, lower=True)
    except LinAlgError:
        raise NonSPDCovariance("Covariance is not positive definite", kind=kind) from None
    return np.sqrt(weight) * solve_triangular(lower, np.eye(len(cov)), lower=True)


def whiten(block: ResidualBlock, noise: NoiseModel, kind: str = None) -> ResidualBlock:
    """
    Scale residuals and Jacobians by ``sqrt(v) L^-1``.

    Afterwards the plain sum of squares of the residuals equals the
    weighted Mahalanobis cost of the raw residuals.

    Examples
    --------
    With unit covariance and weight the block is returned unchanged; a
    scalar covariance of 4 halves every residual.
    """
    kind = kind or block.kind
    scale = whitening_matrix(noise.covariance(kind), noise.weight(kind), kind)
    return replace(
        block,
        residual=block.residual @ scale.T,
        jac_knots=np.einsum("ab,nbkc->nakc", scale, block.jac_knots),
        jac_calib=(
            None
            if block.jac_calib is None
            else np.einsum("ab,nbc->nac", scale, block.jac_calib)
        ),
    )


def gate_outlier(predicted, measured, threshold: float):
    """
    Accept a range when ``|predicted - measured| <= threshold``.

    Works elementwise on arrays; the boundary itself is accepted.

    Examples
    --------
    >>> bool(gate_outlier(5.0, 5.5, 0.5))
    True
    >>> bool(gate_outlier(5.0, 5.6, 0.5))
    False
    """
    if not threshold > 0:
        raise ValueError(f"Gate threshold must be positive, got {threshold}")
    return np.abs(np.asarray(predicted) - np.asarray(measured)) <= threshold


def apply_gate(state, measurements: MeasurementSet, threshold: float) -> Tuple[MeasurementSet, int]:
    """
    Drop UWB measurements whose predicted value is off by more than ``threshold``.

    Prediction uses the current window estimate. Measurements outside the
    window are left for the solver to skip.

    Returns
    -------
    measurements : MeasurementSet
        Copy with rejected UWB rows removed.
    rejected : int
        Number of removed rows.
    """
    rejected = 0
    toa, tdoa = measurements.toa, measurements.tdoa
    if toa is not None and len(toa):
        block = toa_residual(state, toa, anchors=measurements.anchors, strict=False)
        measured = toa.range[block.index]
        accept = gate_outlier(block.residual[:, 0] + measured, measured, threshold)
        keep = np.ones(len(toa), dtype=bool)
        keep[block.index[~accept]] = False
        rejected += int(np.count_nonzero(~keep))
        toa = toa.take(keep)
    if tdoa is not None and len(tdoa):
        block = tdoa_residual(state, tdoa, anchors=measurements.anchors, strict=False)
        measured = tdoa.ddist[block.index]
        accept = gate_outlier(block.residual[:, 0] + measured, measured, threshold)
        keep = np.ones(len(tdoa), dtype=bool)
        keep[block.index[~accept]] = False
        rejected += int(np.count_nonzero(~keep))
        tdoa = tdoa.take(keep)
    if rejected:
        logger.debug("Gate rejected %d UWB measurements", rejected)
    return measurements.with_uwb(toa=toa, tdoa=tdoa), rejected
