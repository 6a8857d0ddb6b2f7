"""
Mapping between window parameters and tangent-space columns.

Columns are ordered knot by knot (quaternion tangent 3, position 3, bias 6,
for whichever blocks are estimated) followed by the calibration tail:
``q_WU`` tangent (3), ``t_WU`` (3) and the gravity direction on S^2 (2).
Knot-major ordering keeps the knot part of the normal matrix banded.
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..exceptions import ConfigurationError

BLOCK_SIZES: Dict[str, int] = {"q": 3, "p": 3, "b": 6}
CALIB_SIZES: Dict[str, int] = {"q_WU": 3, "t_WU": 3, "g_dir": 2}
CALIB_DIM = sum(CALIB_SIZES.values())


@dataclass
class ParameterLayout:
    """
    Free parameters of a window solve.

    Parameters
    ----------
    count : int
        Number of knots in the window (idle knots included).
    blocks : tuple of str
        Knot blocks that are estimated, a subset of ``("q", "p", "b")``.
    n_fixed : int
        Leading knots held constant (idle knots).
    fix_origin : bool
        Hold orientation and position of knot 0, which defines the world
        frame while the extrinsic is estimated.
    calibrating : bool
        Append the calibration tail.

    Examples
    --------
    >>> layout = ParameterLayout(10, n_fixed=3)
    >>> layout.dim
    84
    """

    count: int
    blocks: Tuple[str, ...] = ("q", "p", "b")
    n_fixed: int = 0
    fix_origin: bool = False
    calibrating: bool = False
    columns: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.blocks = tuple(b for b in ("q", "p", "b") if b in self.blocks)
        if not self.blocks:
            raise ConfigurationError("Layout needs at least one knot block")
        if not 0 <= self.n_fixed <= self.count:
            raise ConfigurationError(
                "Fixed knot count out of range", parameter="n_fixed", value=self.n_fixed
            )

        free = np.ones((self.count, self.width), dtype=bool)
        free[: self.n_fixed] = False
        if self.fix_origin and self.count:
            for name in ("q", "p"):
                if name in self.blocks:
                    free[0, self.block_slice(name)] = False
        columns = np.full(free.shape, -1, dtype=int)
        columns[free] = np.arange(np.count_nonzero(free))
        self.columns = columns

    @property
    def width(self) -> int:
        """Tangent columns per knot, fixed ones included."""
        return sum(BLOCK_SIZES[b] for b in self.blocks)

    def block_slice(self, name: str) -> slice:
        """Position of block ``name`` inside one knot's columns."""
        offset = 0
        for block in self.blocks:
            if block == name:
                return slice(offset, offset + BLOCK_SIZES[block])
            offset += BLOCK_SIZES[block]
        raise KeyError(name)

    @property
    def n_knot_cols(self) -> int:
        return int(np.count_nonzero(self.columns >= 0))

    @property
    def n_calib_cols(self) -> int:
        return CALIB_DIM if self.calibrating else 0

    @property
    def dim(self) -> int:
        return self.n_knot_cols + self.n_calib_cols

    @property
    def calib_columns(self) -> np.ndarray:
        return np.arange(self.n_knot_cols, self.dim)

    def calib_slice(self, name: str) -> slice:
        offset = self.n_knot_cols
        for key, size in CALIB_SIZES.items():
            if key == name:
                return slice(offset, offset + size)
            offset += size
        raise KeyError(name)

    def bandwidth(self, support: int) -> int:
        """
        Upper bandwidth of the knot part of the normal matrix when every
        residual touches at most ``support`` consecutive knots.
        """
        has_cols = (self.columns >= 0).any(axis=1)
        if not has_cols.any():
            return 0
        big = np.iinfo(int).max
        first = np.where(has_cols, np.where(self.columns >= 0, self.columns, big).min(axis=1), big)
        last = np.where(has_cols, self.columns.max(axis=1), -1)
        width = 0
        for i in range(self.count):
            stop = min(i + support, self.count)
            lo, hi = first[i:stop].min(), last[i:stop].max()
            if hi >= 0 and lo != big:
                width = max(width, int(hi - lo))
        return width
