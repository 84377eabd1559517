"""Hexagonal lattice geometry, indexing, and tensor storage.

Cells of a hexagon with side length ``L`` are addressed by skewed axial
coordinates ``(u, v)`` (row, column) with the origin at the top-left
cell.  A pair is a valid cell iff::

    0 <= u <= 2L-2   and   max(0, u-L+1) <= v <= min(2L-2, u+L-1)

so row lengths grow one per row from ``L`` up to ``2L-1`` and shrink
back to ``L``, for a total of ``3L(L-1)+1`` cells.  Storage within one
channel is column major: all valid cells of column ``v=0`` top to
bottom, then column ``v=1``, and so on.  Multi-channel tensors store
channels outermost.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "cell_count",
    "row_bounds",
    "col_bounds",
    "is_valid_cell",
    "flat_offset",
    "cells",
    "offset_table",
    "point_reflect",
    "reflect_permutation",
    "rot180_filter",
    "HexTensor",
    "pad_rings",
]

_FLOAT_DTYPES = (np.float32, np.float64)


def _check_side(side) -> None:
    if side != int(side) or int(side) < 1:
        raise ValueError(f"side length must be a positive integer, got {side!r}")


def cell_count(side: int) -> int:
    """Number of cells in a hexagon of the given side length."""
    _check_side(side)
    return 3 * side * (side - 1) + 1


def row_bounds(side: int, u: int) -> tuple[int, int]:
    """Inclusive column range (v_min, v_max) of row ``u``."""
    _check_side(side)
    if not 0 <= u <= 2 * side - 2:
        raise ValueError(f"row {u} out of range for side {side}")
    return max(0, u - side + 1), min(2 * side - 2, u + side - 1)


def col_bounds(side: int, v: int) -> tuple[int, int]:
    """Inclusive row range (u_min, u_max) of column ``v``."""
    _check_side(side)
    if not 0 <= v <= 2 * side - 2:
        raise ValueError(f"column {v} out of range for side {side}")
    return max(0, v - side + 1), min(2 * side - 2, v + side - 1)


def is_valid_cell(side: int, u: int, v: int) -> bool:
    _check_side(side)
    if not 0 <= u <= 2 * side - 2:
        return False
    return max(0, u - side + 1) <= v <= min(2 * side - 2, u + side - 1)


@lru_cache(maxsize=None)
def _col_starts(side: int) -> tuple[int, ...]:
    """Storage offset of the first cell of each column, plus the total."""
    starts = [0]
    for v in range(2 * side - 1):
        u_min, u_max = col_bounds(side, v)
        starts.append(starts[-1] + u_max - u_min + 1)
    return tuple(starts)


def flat_offset(side: int, u: int, v: int) -> int:
    """Column-major storage offset of cell (u, v) within one channel."""
    if not is_valid_cell(side, u, v):
        raise ValueError(f"({u}, {v}) is not a valid cell for side {side}")
    u_min, _ = col_bounds(side, v)
    return _col_starts(side)[v] + (u - u_min)


@lru_cache(maxsize=None)
def cells(side: int) -> np.ndarray:
    """All valid (u, v) pairs in storage order, as an (N, 2) int array."""
    _check_side(side)
    out = np.empty((cell_count(side), 2), dtype=np.int64)
    i = 0
    for v in range(2 * side - 1):
        u_min, u_max = col_bounds(side, v)
        for u in range(u_min, u_max + 1):
            out[i, 0] = u
            out[i, 1] = v
            i += 1
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def offset_table(side: int) -> np.ndarray:
    """(2L-1, 2L-1) lookup of storage offsets; -1 marks invalid (u, v)."""
    span = 2 * side - 1
    table = np.full((span, span), -1, dtype=np.int64)
    uv = cells(side)
    table[uv[:, 0], uv[:, 1]] = np.arange(len(uv))
    table.setflags(write=False)
    return table


def point_reflect(side: int, u: int, v: int) -> tuple[int, int]:
    """Reflect a cell through the hexagon center: (u, v) -> (2L-2-u, 2L-2-v)."""
    if not is_valid_cell(side, u, v):
        raise ValueError(f"({u}, {v}) is not a valid cell for side {side}")
    return 2 * side - 2 - u, 2 * side - 2 - v


@lru_cache(maxsize=None)
def reflect_permutation(side: int) -> np.ndarray:
    """Storage-order permutation realizing the central point reflection.

    The permutation is an involution, so it maps either direction.
    """
    uv = cells(side)
    span = 2 * side - 2
    perm = offset_table(side)[span - uv[:, 0], span - uv[:, 1]]
    perm = np.ascontiguousarray(perm)
    perm.setflags(write=False)
    return perm


def rot180_filter(side: int, values: np.ndarray) -> np.ndarray:
    """Point-reflect hex filter weights stored along the last axis.

    The hexagonal analogue of rotating a rectangular filter by 180
    degrees; applying it twice returns the input.
    """
    values = np.asarray(values)
    if values.shape[-1] != cell_count(side):
        raise ValueError(
            f"last axis has {values.shape[-1]} cells, expected {cell_count(side)}"
        )
    return values[..., reflect_permutation(side)]


@dataclass(frozen=True, eq=False)
class HexTensor:
    """Hexagon-shaped multi-channel array.

    ``data`` is (channels, cell_count(side)), column major within each
    channel, read-only after construction so values can be shared
    freely.
    """

    side: int
    channels: int
    data: np.ndarray

    def __post_init__(self):
        _check_side(self.side)
        if self.channels != int(self.channels) or self.channels < 1:
            raise ValueError(f"channels must be a positive integer, got {self.channels!r}")
        n = cell_count(self.side)
        arr = np.asarray(self.data)
        dtype = arr.dtype if arr.dtype in _FLOAT_DTYPES else np.float64
        if arr.size != self.channels * n:
            raise ValueError(
                f"data has {arr.size} elements, expected {self.channels}x{n}"
            )
        arr = arr.astype(dtype, copy=True).reshape(self.channels, n)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, side: int, channels: int = 1, dtype=np.float64) -> "HexTensor":
        return cls(side, channels, np.zeros((channels, cell_count(side)), dtype=dtype))

    @classmethod
    def filled(cls, side: int, channels: int, value: float, dtype=np.float64) -> "HexTensor":
        return cls(side, channels, np.full((channels, cell_count(side)), value, dtype=dtype))

    @property
    def cell_count(self) -> int:
        return self.data.shape[1]

    @property
    def dtype(self):
        return self.data.dtype

    def value(self, channel: int, u: int, v: int) -> float:
        return float(self.data[channel, flat_offset(self.side, u, v)])

    def astype(self, dtype) -> "HexTensor":
        return HexTensor(self.side, self.channels, self.data.astype(dtype))


@lru_cache(maxsize=None)
def _pad_scatter(side: int, rings: int) -> np.ndarray:
    """Destination offsets of the original cells inside the padded hexagon."""
    uv = cells(side)
    idx = offset_table(side + rings)[uv[:, 0] + rings, uv[:, 1] + rings]
    idx = np.ascontiguousarray(idx)
    idx.setflags(write=False)
    return idx


def pad_rings(t: HexTensor, rings: int) -> HexTensor:
    """Surround ``t`` with ``rings`` concentric rings of zero cells.

    Cell (u, v) moves to (u + rings, v + rings); the sum of all values
    is preserved.
    """
    if rings != int(rings) or rings < 0:
        raise ValueError(f"ring count must be a non-negative integer, got {rings!r}")
    if rings == 0:
        return t
    out_side = t.side + rings
    out = np.zeros((t.channels, cell_count(out_side)), dtype=t.dtype)
    out[:, _pad_scatter(t.side, rings)] = t.data
    return HexTensor(out_side, t.channels, out)
