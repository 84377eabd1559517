"""Square-lattice inputs on hexagonal grids: resampling, minimal covering,
and padding-overhead accounting.

The hex lattice lives in the image plane (x right, y down) with axial
basis e_v = (1, 0) and e_u = (-1/2, sqrt(3)/2), scaled by a configurable
step.  The 120-degree pair keeps all six lattice neighbors, including
the (u+1, v+1) diagonal, exactly one step apart, so the cell region of a
side-L hexagon maps to a regular hexagon in the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import HexTensor, cell_count, cells

__all__ = [
    "SquareImage",
    "HexLatticeGeometry",
    "OverheadReport",
    "min_cover_side",
    "cell_centers",
    "square_to_hex",
    "overhead_report",
]

# Asymptotic padded-area constants (fractions of the x*x square) quoted
# for reference alongside the exact cell counts; the cell counts are the
# numbers this library actually allocates.
HEX_PAD_AREA_LIMIT = 0.563
ZEROOUT_PAD_AREA_LIMIT = 0.577


@dataclass(frozen=True, eq=False)
class SquareImage:
    """Dense (channels, height, width) image, pixel pitch 1."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim == 2:
            d = d[None, :, :]
        if d.ndim != 3 or d.shape[1] < 1 or d.shape[2] < 1:
            raise ValueError(f"image must be (channels, h, w), got {d.shape}")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class HexLatticeGeometry:
    """Plane embedding of the axial lattice; scale is the cell pitch."""

    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def min_cover_side(x: int) -> int:
    """Smallest hexagon side whose region covers an x-by-x pixel square."""
    if x != int(x) or x < 1:
        raise ValueError(f"square side must be a positive integer, got {x!r}")
    return (3 * x + 1 + 3) // 4  # ceil((3x+1)/4)


def cell_centers(
    side: int, geom: HexLatticeGeometry, center: tuple[float, float]
) -> np.ndarray:
    """(N, 2) plane positions (x, y) of all cells, hexagon centered at ``center``."""
    uv = cells(side).astype(np.float64)
    c = side - 1
    du = uv[:, 0] - c
    dv = uv[:, 1] - c
    x = center[0] + geom.scale * (dv - 0.5 * du)
    y = center[1] + geom.scale * (math.sqrt(3.0) / 2.0) * du
    return np.stack([x, y], axis=1)


def square_to_hex(
    img: SquareImage, side: int, geom: HexLatticeGeometry = HexLatticeGeometry()
) -> HexTensor:
    """Bilinearly sample the image at each cell center.

    The hexagon is centered on the image center; positions outside the
    image read as zero.
    """
    if side != int(side) or side < 1:
        raise ValueError(f"side must be a positive integer, got {side!r}")
    center = ((img.width - 1) / 2.0, (img.height - 1) / 2.0)
    pos = cell_centers(side, geom, center)
    x, y = pos[:, 0], pos[:, 1]
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0

    def tap(yy, xx):
        inside = (yy >= 0) & (yy < img.height) & (xx >= 0) & (xx < img.width)
        vals = img.data[:, yy.clip(0, img.height - 1), xx.clip(0, img.width - 1)]
        return np.where(inside[None, :], vals, 0.0)

    out = (
        tap(y0, x0) * ((1 - fy) * (1 - fx))[None, :]
        + tap(y0, x0 + 1) * ((1 - fy) * fx)[None, :]
        + tap(y0 + 1, x0) * (fy * (1 - fx))[None, :]
        + tap(y0 + 1, x0 + 1) * (fy * fx)[None, :]
    )
    return HexTensor(side, img.channels, out)


@dataclass(frozen=True)
class OverheadReport:
    """Cell counts and padding overheads for covering an x-by-x square."""

    square_side: int
    hex_side: int
    hex_cells: int
    zeroout_cells: int
    quasih_cells: int
    hex_pad_fraction: float
    zeroout_pad_fraction: float
    hex_pad_area_limit: float = HEX_PAD_AREA_LIMIT
    zeroout_pad_area_limit: float = ZEROOUT_PAD_AREA_LIMIT


def overhead_report(x: int) -> OverheadReport:
    """Input-footprint comparison for an x-by-x square input.

    Pad fractions are exact cell-count ratios relative to the x*x
    pixels; the asymptotic plane-area constants are carried alongside
    for reference (they assume a different lattice density, so the two
    scales are not expected to agree).
    """
    y = min_cover_side(x)
    hex_cells = cell_count(y)
    zeroout_cells = (2 * y - 1) ** 2
    quasih_cells = (2 * x - 1) * math.ceil(math.sqrt(3.0) * x)
    pixels = x * x
    return OverheadReport(
        square_side=x,
        hex_side=y,
        hex_cells=hex_cells,
        zeroout_cells=zeroout_cells,
        quasih_cells=quasih_cells,
        hex_pad_fraction=(hex_cells - pixels) / pixels,
        zeroout_pad_fraction=(zeroout_cells - pixels) / pixels,
    )
