"""
Uniform knot grids and cumulative cubic B-spline basis weights.

Segment ``i`` covers ``[t_i, t_{i+1})`` with ``t_i = t0 + i * dt`` and is
supported by the four knots ``i-2 .. i+1``. The valid interpolation span of a
grid with ``count`` knots is therefore ``[t0 + 2 dt, t0 + (count - 1) dt]``;
the right end maps onto the last segment with ``u = 1``.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import OutOfRange

#: Cumulative basis matrix; rows give lambda_1..3 as cubic polynomials in u.
BASIS_MATRIX = np.array(
    [
        [5.0, 3.0, -3.0, 1.0],
        [1.0, 3.0, 3.0, -2.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
) / 6.0

#: Offsets of the four supporting knots relative to the segment index.
SUPPORT = np.arange(-2, 2)

_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class KnotGrid:
    """Uniform knot grid: first knot time ``t0``, interval ``dt``, ``count`` knots."""

    t0: float
    dt: float
    count: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"Knot interval must be positive, got {self.dt}")
        if self.count < 4:
            raise ValueError(f"A cubic spline needs at least 4 knots, got {self.count}")

    def knot_time(self, index) -> np.ndarray:
        """Grid time of knot ``index``."""
        return self.t0 + np.asarray(index) * self.dt

    @property
    def span(self) -> Tuple[float, float]:
        """Closed interval of timestamps that can be interpolated."""
        return (self.t0 + 2 * self.dt, self.t0 + (self.count - 1) * self.dt)

    def contains(self, t) -> np.ndarray:
        """Boolean mask of timestamps inside :attr:`span`."""
        start, end = self.span
        t = np.asarray(t, dtype=float)
        tol = _EDGE_TOL * self.dt
        return (t >= start - tol) & (t <= end + tol)

    def extended(self, extra: int = 1) -> "KnotGrid":
        """Grid with ``extra`` knots appended on the right."""
        return KnotGrid(self.t0, self.dt, self.count + extra)

    def sliced(self, start: int, stop: int) -> "KnotGrid":
        """Sub-grid covering knots ``start .. stop - 1``."""
        return KnotGrid(self.t0 + start * self.dt, self.dt, stop - start)


@dataclass(frozen=True)
class BasisWeights:
    """
    Cumulative basis values for a batch of timestamps.

    ``lam``, ``dlam`` and ``ddlam`` have shape (..., 3) and hold the basis
    functions and their first and second time derivatives; ``u`` is the
    normalized time and ``seg`` the segment index, both of the timestamp
    shape. Residuals evaluated at the same timestamps share one instance.
    """

    lam: np.ndarray
    dlam: np.ndarray
    ddlam: np.ndarray
    u: np.ndarray
    seg: np.ndarray
    dt: float

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.u.shape

    def support(self) -> np.ndarray:
        """Indices of the four supporting knots, shape (..., 4)."""
        return self.seg[..., None] + SUPPORT

    def take(self, mask) -> "BasisWeights":
        """Weights restricted to a boolean mask or index array over the batch."""
        return BasisWeights(
            self.lam[mask],
            self.dlam[mask],
            self.ddlam[mask],
            self.u[mask],
            self.seg[mask],
            self.dt,
        )


def basis_from_u(u: np.ndarray, dt: float):
    """Evaluate ``lambda``, ``lambda_dot`` and ``lambda_ddot`` at normalized times ``u``."""
    u = np.asarray(u, dtype=float)
    one = np.ones_like(u)
    zero = np.zeros_like(u)
    powers = np.stack([one, u, u**2, u**3], axis=-1)
    d_powers = np.stack([zero, one, 2 * u, 3 * u**2], axis=-1) / dt
    dd_powers = np.stack([zero, zero, 2 * one, 6 * u], axis=-1) / dt**2
    return (
        powers @ BASIS_MATRIX.T,
        d_powers @ BASIS_MATRIX.T,
        dd_powers @ BASIS_MATRIX.T,
    )


def locate(grid: KnotGrid, t) -> BasisWeights:
    """
    Find the segment of each timestamp and evaluate the basis there.

    Parameters
    ----------
    grid : KnotGrid
        Knot grid of the spline.
    t : float or array-like
        Timestamp(s) in seconds.

    Returns
    -------
    BasisWeights
        Basis values with the shape of ``t``.

    Raises
    ------
    OutOfRange
        If any timestamp lies outside ``grid.span``.

    Examples
    --------
    >>> w = locate(KnotGrid(0.0, 0.1, 5), 0.2)
    >>> w.lam.round(6).tolist()
    [0.833333, 0.166667, 0.0]
    """
    t = np.asarray(t, dtype=float)
    inside = grid.contains(t)
    if not np.all(inside):
        bad = t[~inside] if t.ndim else t
        raise OutOfRange(
            "Timestamp outside the interpolation span",
            t=float(np.ravel(bad)[0]),
            span=grid.span,
        )
    x = (t - grid.t0) / grid.dt
    seg = np.floor(x).astype(int)
    seg = np.clip(seg, 2, grid.count - 2)
    u = np.clip(x - seg, 0.0, 1.0)
    lam, dlam, ddlam = basis_from_u(u, grid.dt)
    return BasisWeights(lam, dlam, ddlam, u, seg, grid.dt)
