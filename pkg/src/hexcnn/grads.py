"""Backward kernels: error propagation and gradients for conv and pool layers.

The input gradient of a strided valid convolution is computed as its
exact adjoint: scatter the error onto the dense anchor grid, then run a
full convolution against the channel-transposed, point-reflected filter
bank.  Filter gradients are the valid cross-correlation of the layer
input with the error, and bias gradients are plain error sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import (
    HexTensor,
    cell_count,
    cells,
    offset_table,
    reflect_permutation,
)
from .ops import ArgmaxMap, HexFilterBank, conv_full, valid_geometry, window_columns

__all__ = [
    "LayerGradients",
    "upsample_stride",
    "transpose_reflect",
    "conv_backward",
    "conv_backward_input",
    "conv_backward_filter",
    "maxpool_backward",
    "avgpool_backward",
    "apply_activation_backward",
]

ACTIVATIONS = ("identity", "relu")


@dataclass(frozen=True, eq=False)
class LayerGradients:
    """Gradient bundle of one conv layer; shapes mirror the forward pass."""

    d_input: HexTensor
    d_weights: np.ndarray | None = None
    d_bias: np.ndarray | None = None


def conv_backward(
    t: HexTensor, delta: HexTensor, bank: HexFilterBank, stride: int = 1
) -> LayerGradients:
    """Input, weight, and bias gradients of one valid convolution."""
    dw, db = conv_backward_filter(t, delta, stride, bank.filter_side)
    d_in = conv_backward_input(delta, bank, stride, t.side)
    return LayerGradients(d_in, dw, db)


@lru_cache(maxsize=None)
def _anchor_scatter(output_side: int, stride: int, target_side: int) -> np.ndarray:
    uv = cells(output_side) * stride
    idx = offset_table(target_side)[uv[:, 0], uv[:, 1]]
    if (idx < 0).any():
        raise AssertionError("stride anchor fell outside the target hexagon")
    idx = np.ascontiguousarray(idx)
    idx.setflags(write=False)
    return idx


def upsample_stride(delta: HexTensor, stride: int, target_side: int) -> HexTensor:
    """Scatter values onto the dense anchor grid: (u, v) -> (s*u, s*v).

    All other cells are zero, so the total mass is preserved.
    """
    expected = (delta.side - 1) * stride + 1
    if target_side != expected:
        raise ValueError(
            f"target side {target_side} does not match dense anchor grid {expected}"
        )
    if stride == 1:
        return delta
    out = np.zeros((delta.channels, cell_count(target_side)), dtype=delta.dtype)
    out[:, _anchor_scatter(delta.side, stride, target_side)] = delta.data
    return HexTensor(target_side, delta.channels, out)


def transpose_reflect(bank: HexFilterBank) -> HexFilterBank:
    """Swap filter/channel roles and point-reflect each filter; zero bias."""
    perm = reflect_permutation(bank.filter_side)
    w = bank.weights[:, :, perm].transpose(1, 0, 2)
    return HexFilterBank(bank.filter_side, w)


@lru_cache(maxsize=None)
def _embed_offsets(small_side: int, big_side: int) -> np.ndarray:
    # hex(small) index pairs are all valid cells of hex(big); keep (u, v).
    uv = cells(small_side)
    idx = offset_table(big_side)[uv[:, 0], uv[:, 1]]
    idx = np.ascontiguousarray(idx)
    idx.setflags(write=False)
    return idx


def conv_backward_input(
    delta: HexTensor, bank: HexFilterBank, stride: int, input_side: int
) -> HexTensor:
    """Error propagated to the convolution input (the adjoint map)."""
    dense_side = (delta.side - 1) * stride + 1
    reach = dense_side + bank.filter_side - 1
    if reach > input_side:
        raise ValueError(
            f"error of side {delta.side} at stride {stride} does not fit input {input_side}"
        )
    if reach != input_side and (input_side - bank.filter_side) % stride == 0:
        raise ValueError("error side does not match the forward geometry")
    up = upsample_stride(delta, stride, dense_side)
    d_in = conv_full(up, transpose_reflect(bank))
    if d_in.side == input_side:
        return d_in
    # floor-mode forward: windows never reached past hex(reach); the rest
    # of the input receives zero gradient.
    out = np.zeros((d_in.channels, cell_count(input_side)), dtype=d_in.dtype)
    out[:, _embed_offsets(d_in.side, input_side)] = d_in.data
    return HexTensor(input_side, d_in.channels, out)


def conv_backward_filter(
    t: HexTensor, delta: HexTensor, stride: int, filter_side: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Weight and bias gradients of a valid convolution.

    Returns (d_weights, d_bias) with d_weights shaped like the filter
    bank weights (filters, channels, cells).
    """
    if filter_side is None:
        filter_side = t.side - stride * (delta.side - 1)
        if filter_side < 1:
            raise ValueError("error side is too large for this input and stride")
    geom = valid_geometry(t.side, filter_side, stride, floor_mode=True)
    if geom.output_side != delta.side:
        raise ValueError(
            f"error side {delta.side} does not match forward output {geom.output_side}"
        )
    cols = window_columns(t, geom)  # (P, C*E)
    dw = delta.data @ cols  # (F, C*E)
    d_weights = dw.reshape(delta.channels, t.channels, cell_count(filter_side))
    d_bias = delta.data.sum(axis=1)
    return d_weights, d_bias


def maxpool_backward(delta: HexTensor, amap: ArgmaxMap) -> HexTensor:
    """Route each error value back to the cell that won its window."""
    if delta.side != amap.output_side or delta.channels != amap.channels:
        raise ValueError("error shape does not match the argmax map")
    out = np.zeros((delta.channels, cell_count(amap.input_side)), dtype=delta.dtype)
    rows = np.arange(delta.channels)[:, None]
    np.add.at(out, (rows, amap.winners), delta.data)
    return HexTensor(amap.input_side, delta.channels, out)


def avgpool_backward(
    delta: HexTensor, window_side: int, stride: int, input_side: int
) -> HexTensor:
    """Spread each error value uniformly over its window."""
    geom = valid_geometry(input_side, window_side, stride, floor_mode=True)
    if geom.output_side != delta.side:
        raise ValueError(
            f"error side {delta.side} does not match forward output {geom.output_side}"
        )
    from .ops import window_gather

    g = window_gather(input_side, window_side, stride, delta.side)
    share = delta.data / g.shape[1]
    out = np.zeros((delta.channels, cell_count(input_side)), dtype=delta.dtype)
    rows = np.arange(delta.channels)[:, None, None]
    np.add.at(out, (rows, g[None, :, :]), share[:, :, None])
    return HexTensor(input_side, delta.channels, out)


def apply_activation_backward(delta: HexTensor, preact: HexTensor, kind: str) -> HexTensor:
    """Hadamard product of the error with the activation derivative."""
    if delta.side != preact.side or delta.channels != preact.channels:
        raise ValueError("error and pre-activation shapes differ")
    if kind == "identity":
        return delta
    if kind == "relu":
        return HexTensor(delta.side, delta.channels, delta.data * (preact.data > 0))
    raise ValueError(f"unknown activation {kind!r}")
