"""ZeroOut baseline: hexagons embedded in parallelograms, rectangular
filters with structurally zeroed corners.

This module is the trusted reference for every hexagonal kernel and the
baseline measured by the benchmark CLI.  The convolution is a plain
nested-loop cross-correlation on purpose; keeping it simple is what
makes it an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import HexTensor, cells
from .instrument import add_macs
from .ops import HexFilterBank

__all__ = [
    "RectTensor",
    "ZeroOutFilterBank",
    "hex_mask",
    "embed_parallelogram",
    "extract_hex",
    "zeroout_filter",
    "zeroout_to_hex",
    "rect_conv_reference",
]


@dataclass(frozen=True, eq=False)
class RectTensor:
    """Dense (channels, height, width) array with an optional validity mask."""

    data: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3:
            raise ValueError(f"rect tensor must be (channels, h, w), got {d.shape}")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "data", d)
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != d.shape[1:]:
                raise ValueError("mask shape does not match the spatial extent")
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, "mask", m)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@lru_cache(maxsize=None)
def hex_mask(side: int) -> np.ndarray:
    """(2L-1, 2L-1) boolean mask of the embedded hexagon's cells."""
    span = 2 * side - 1
    m = np.zeros((span, span), dtype=bool)
    uv = cells(side)
    m[uv[:, 0], uv[:, 1]] = True
    m.setflags(write=False)
    return m


def embed_parallelogram(t: HexTensor) -> RectTensor:
    """Pad a hex tensor into a (2L-1) x (2L-1) parallelogram.

    Hex cell (u, v) lands at rectangular index (u, v); the remaining
    corner cells are zero and masked invalid.
    """
    span = 2 * t.side - 1
    out = np.zeros((t.channels, span, span))
    uv = cells(t.side)
    out[:, uv[:, 0], uv[:, 1]] = t.data
    return RectTensor(out, hex_mask(t.side))


def extract_hex(r: RectTensor, side: int) -> HexTensor:
    """Read the hexagon of the given side off rectangular indices (u, v)."""
    span = 2 * side - 1
    if r.height < span or r.width < span:
        raise ValueError(
            f"rect {r.height}x{r.width} cannot contain a hexagon of side {side}"
        )
    uv = cells(side)
    return HexTensor(side, r.channels, r.data[:, uv[:, 0], uv[:, 1]])


@dataclass(frozen=True, eq=False)
class ZeroOutFilterBank:
    """(filters, channels, 2Lk-1, 2Lk-1) weights with zeroed corner triangles."""

    hex_side: int
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        span = 2 * self.hex_side - 1
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 4 or w.shape[2:] != (span, span):
            raise ValueError(f"weights must be (F, C, {span}, {span}), got {w.shape}")
        if w[:, :, ~hex_mask(self.hex_side)].any():
            raise ValueError("corner positions must be zero")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        b = np.asarray(self.bias, dtype=np.float64).copy()
        b.setflags(write=False)
        object.__setattr__(self, "bias", b)

    @property
    def filters(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def span(self) -> int:
        return 2 * self.hex_side - 1


def zeroout_filter(bank: HexFilterBank) -> ZeroOutFilterBank:
    """Pack hex filters into rectangles, corner weights fixed at zero."""
    span = 2 * bank.filter_side - 1
    w = np.zeros((bank.filters, bank.in_channels, span, span))
    uv = cells(bank.filter_side)
    w[:, :, uv[:, 0], uv[:, 1]] = bank.weights
    return ZeroOutFilterBank(bank.filter_side, w, bank.bias)


def zeroout_to_hex(zbank: ZeroOutFilterBank) -> HexFilterBank:
    """Recover the hex bank; round-trips losslessly with zeroout_filter."""
    uv = cells(zbank.hex_side)
    return HexFilterBank(
        zbank.hex_side, zbank.weights[:, :, uv[:, 0], uv[:, 1]], zbank.bias
    )


def rect_conv_reference(
    r: RectTensor, zbank: ZeroOutFilterBank, stride: int = 1, mode: str = "valid"
) -> RectTensor:
    """Nested-loop rectangular cross-correlation plus bias.

    Window values are flattened column major so the accumulation visits
    cells in the same order as the hexagonal kernels (the zero corners
    are multiplied like any other tap, which is the point of measuring
    this baseline).
    """
    if zbank.in_channels != r.channels:
        raise ValueError(
            f"filter bank expects {zbank.in_channels} channels, input has {r.channels}"
        )
    if mode == "full":
        pad = zbank.span - 1
        padded = np.zeros(
            (r.channels, r.height + 2 * pad, r.width + 2 * pad)
        )
        padded[:, pad : pad + r.height, pad : pad + r.width] = r.data
        return rect_conv_reference(RectTensor(padded), zbank, stride, "valid")
    if mode != "valid":
        raise ValueError(f"unknown mode {mode!r}")
    k = zbank.span
    if r.height < k or r.width < k:
        raise ValueError(f"input {r.height}x{r.width} smaller than window {k}")
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    out_h = (r.height - k) // stride + 1
    out_w = (r.width - k) // stride + 1
    wmat = zbank.weights.transpose(0, 1, 3, 2).reshape(zbank.filters, -1)
    data = r.data
    out = np.empty((zbank.filters, out_h, out_w))
    for i in range(out_h):
        i0 = i * stride
        for j in range(out_w):
            j0 = j * stride
            window = data[:, i0 : i0 + k, j0 : j0 + k]
            out[:, i, j] = wmat @ window.transpose(0, 2, 1).reshape(-1)
    out += zbank.bias[:, None, None]
    add_macs(out_h * out_w * zbank.filters * zbank.in_channels * k * k)
    return RectTensor(out)
