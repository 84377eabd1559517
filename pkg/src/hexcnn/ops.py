"""Forward kernels: hexagonal convolution and pooling.

Convolution anchors the top-left cell of a hexagon-shaped window at
(stride*u, stride*v) for every output cell (u, v); window cells are the
anchor plus the filter's own cell offsets.  For exact-mode geometry
every window cell is guaranteed to be a valid input cell (hexagons are
closed under this index addition), which is asserted when a window
table is first built.

Accumulation per output cell runs channel major, then filter storage
order, so results do not depend on how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import HexTensor, cell_count, cells, offset_table, pad_rings
from .matmul import gemm

__all__ = [
    "HexFilterBank",
    "ConvGeometry",
    "ArgmaxMap",
    "valid_geometry",
    "full_geometry",
    "window_gather",
    "conv_valid",
    "conv_full",
    "maxpool",
    "avgpool",
]


@dataclass(frozen=True, eq=False)
class HexFilterBank:
    """Bank of hexagon-shaped filters: weights (filters, in_channels, cells).

    Every weight is a live filter tap; there are no packed zero corners.
    """

    filter_side: int
    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        n = cell_count(self.filter_side)
        w = np.asarray(self.weights)
        dtype = w.dtype if w.dtype in (np.float32, np.float64) else np.float64
        w = w.astype(dtype, copy=True)
        if w.ndim != 3 or w.shape[2] != n:
            raise ValueError(
                f"weights must be (filters, channels, {n}), got {w.shape}"
            )
        if w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError(f"need at least one filter and one channel, got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        b = self.bias
        b = np.zeros(w.shape[0], dtype=dtype) if b is None else np.asarray(b, dtype=dtype).copy()
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias must have shape ({w.shape[0]},), got {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "bias", b)

    @property
    def filters(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def cells_per_filter(self) -> int:
        return self.weights.shape[2]

    @classmethod
    def random(cls, rng, filters, in_channels, filter_side, scale=1.0) -> "HexFilterBank":
        w = rng.standard_normal((filters, in_channels, cell_count(filter_side))) * scale
        b = rng.standard_normal(filters) * scale
        return cls(filter_side, w, b)


@dataclass(frozen=True)
class ConvGeometry:
    input_side: int
    filter_side: int
    stride: int
    mode: str
    output_side: int
    exact: bool = True


def valid_geometry(
    input_side: int, filter_side: int, stride: int = 1, floor_mode: bool = False
) -> ConvGeometry:
    """Geometry of a valid-mode sliding window; rejects non-tiling strides.

    With ``floor_mode`` the trailing remainder is dropped instead.
    """
    if input_side < 1 or filter_side < 1:
        raise ValueError("side lengths must be positive")
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    if filter_side > input_side:
        raise ValueError(
            f"window side {filter_side} exceeds input side {input_side}"
        )
    span = input_side - filter_side
    if span % stride and not floor_mode:
        raise ValueError(
            f"stride {stride} does not tile input {input_side} with window {filter_side}"
        )
    out = span // stride + 1
    return ConvGeometry(input_side, filter_side, stride, "valid", out, span % stride == 0)


def full_geometry(input_side: int, filter_side: int) -> ConvGeometry:
    if input_side < 1 or filter_side < 1:
        raise ValueError("side lengths must be positive")
    return ConvGeometry(input_side, filter_side, 1, "full", input_side + filter_side - 1)


@lru_cache(maxsize=None)
def window_gather(
    input_side: int, filter_side: int, stride: int, output_side: int
) -> np.ndarray:
    """(patches, window_cells) storage offsets of every window, in order.

    Row p lists the input offsets of output cell p's window, filter
    storage order; within a window these are strictly increasing.
    """
    anchors = cells(output_side) * stride
    offs = cells(filter_side)
    table = offset_table(input_side)
    idx = table[
        anchors[:, None, 0] + offs[None, :, 0],
        anchors[:, None, 1] + offs[None, :, 1],
    ]
    if (idx < 0).any():
        raise AssertionError(
            "window escaped the input hexagon; geometry bookkeeping is broken"
        )
    idx = np.ascontiguousarray(idx)
    idx.setflags(write=False)
    return idx


def window_columns(t: HexTensor, geom: ConvGeometry) -> np.ndarray:
    """Window values as a (patches, channels*window_cells) matrix."""
    g = window_gather(geom.input_side, geom.filter_side, geom.stride, geom.output_side)
    win = t.data[:, g]  # (C, P, E)
    p = g.shape[0]
    return np.ascontiguousarray(win.transpose(1, 0, 2).reshape(p, -1))


def _filter_columns(bank: HexFilterBank) -> np.ndarray:
    return np.ascontiguousarray(bank.weights.reshape(bank.filters, -1).T)


def conv_valid(
    t: HexTensor,
    bank: HexFilterBank,
    stride: int = 1,
    floor_mode: bool = False,
    backend: str | None = None,
) -> HexTensor:
    """Valid hexagonal cross-correlation plus per-filter bias."""
    if bank.in_channels != t.channels:
        raise ValueError(
            f"filter bank expects {bank.in_channels} channels, input has {t.channels}"
        )
    geom = valid_geometry(t.side, bank.filter_side, stride, floor_mode)
    cols = window_columns(t, geom)
    wmat = _filter_columns(bank)
    y = gemm(cols, wmat) if backend is None else gemm(cols, wmat, backend=backend)
    y = y + bank.bias
    return HexTensor(geom.output_side, bank.filters, np.ascontiguousarray(y.T))


def conv_full(t: HexTensor, bank: HexFilterBank, backend: str | None = None) -> HexTensor:
    """Full convolution (every overlapping placement), output side L+Lk-1.

    Realized as valid convolution after 2*(Lk-1) rings of zero padding.
    """
    padded = pad_rings(t, 2 * (bank.filter_side - 1))
    return conv_valid(padded, bank, 1, backend=backend)


@dataclass(frozen=True, eq=False)
class ArgmaxMap:
    """Winning input offset of every max-pool window, per channel."""

    input_side: int
    window_side: int
    stride: int
    output_side: int
    winners: np.ndarray  # (channels, patches) flat input offsets

    def __post_init__(self):
        w = np.ascontiguousarray(self.winners, dtype=np.int64)
        w.setflags(write=False)
        object.__setattr__(self, "winners", w)

    @property
    def channels(self) -> int:
        return self.winners.shape[0]


def maxpool(
    t: HexTensor, window_side: int, stride: int, floor_mode: bool = False
) -> tuple[HexTensor, ArgmaxMap]:
    """Max over each hexagonal window; ties go to the smallest offset."""
    geom = valid_geometry(t.side, window_side, stride, floor_mode)
    g = window_gather(geom.input_side, window_side, stride, geom.output_side)
    win = t.data[:, g]  # (C, P, E)
    # argmax returns the first maximum; window offsets ascend, so the
    # smallest flat offset wins ties.
    e_star = win.argmax(axis=2)
    out = np.take_along_axis(win, e_star[:, :, None], axis=2)[:, :, 0]
    winners = g[np.arange(g.shape[0])[None, :], e_star]
    amap = ArgmaxMap(t.side, window_side, stride, geom.output_side, winners)
    return HexTensor(geom.output_side, t.channels, out), amap


def avgpool(
    t: HexTensor, window_side: int, stride: int, floor_mode: bool = False
) -> HexTensor:
    """Arithmetic mean over each hexagonal window."""
    geom = valid_geometry(t.side, window_side, stride, floor_mode)
    g = window_gather(geom.input_side, window_side, stride, geom.output_side)
    win = t.data[:, g]
    return HexTensor(geom.output_side, t.channels, win.mean(axis=2))
