"""Rectangular grid model: regions, domains and the quadtree partition.

Coordinates are pixel positions. An image of side 2**p + 1 carries a grid
whose vertices sit on integer pixels, so every region corner and every
split midpoint is an exact pixel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivisibilityError, MinSizeError, RangeError

# Below this side length the per-region overhead exceeds raw storage.
MIN_REGION_CELL = 4


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def contains(self, x, y, eps: float = 1e-9) -> bool:
        return bool(
            np.all(x >= self.x0 - eps) and np.all(x <= self.x1 + eps)
            and np.all(y >= self.y0 - eps) and np.all(y <= self.y1 + eps)
        )

    def contains_rect(self, other: "Rect", eps: float = 1e-9) -> bool:
        return (
            other.x0 >= self.x0 - eps and other.x1 <= self.x1 + eps
            and other.y0 >= self.y0 - eps and other.y1 <= self.y1 + eps
        )

    def center(self) -> tuple[float, float]:
        return (self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0


@dataclass(frozen=True)
class GridDataSet:
    """Values z[i, j] anchored at grid coordinates (xs[i], ys[j])."""

    xs: np.ndarray
    ys: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "z", z)
        if xs.ndim != 1 or ys.ndim != 1 or len(xs) < 2 or len(ys) < 2:
            raise RangeError("grid needs at least 2 coordinates per axis")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise RangeError("grid coordinates must be strictly increasing")
        if z.shape != (len(xs), len(ys)):
            raise RangeError(f"z shape {z.shape} != ({len(xs)}, {len(ys)})")
        if not np.all(np.isfinite(z)) or z.min() < 0 or z.max() > 255:
            raise RangeError("z values must be finite and within [0, 255]")

    @property
    def m(self) -> int:
        return len(self.xs) - 1

    @property
    def n(self) -> int:
        return len(self.ys) - 1

    def region_rect(self, i: int, j: int) -> Rect:
        """Rect of the (i, j) region, 1-based indices."""
        if not (1 <= i <= self.m and 1 <= j <= self.n):
            raise RangeError(f"region index ({i}, {j}) out of range")
        return Rect(self.xs[i - 1], self.ys[j - 1], self.xs[i], self.ys[j])


@dataclass(frozen=True)
class Region:
    """One range block E(i, j); indices are 1-based on its own lattice."""

    ix: int
    iy: int
    rect: Rect


@dataclass(frozen=True)
class Domain:
    """One domain block, strictly larger than the regions it may serve."""

    id: int
    rect: Rect
    corner_grid_indices: tuple[tuple[int, int], ...]


def tau(i: int, j: int, m: int, n: int | None = None) -> int:
    """Row-major enumeration of the (i, j) region lattice, 1-based."""
    if i < 1 or i > m or j < 1 or (n is not None and j > n):
        raise RangeError(f"tau({i}, {j}) out of range for m={m}, n={n}")
    return (j - 1) * m + i


def tau_inv(k: int, m: int, n: int | None = None) -> tuple[int, int]:
    """Inverse of :func:`tau`."""
    if k < 1 or (n is not None and k > m * n):
        raise RangeError(f"tau_inv({k}) out of range for m={m}, n={n}")
    return (k - 1) % m + 1, (k - 1) // m + 1


def quadrants(region: Region, min_region_cell: int = MIN_REGION_CELL) -> list[Region]:
    """Four equal quadrants of a region, in row-major (x fastest) order."""
    r = region.rect
    w, h = r.width, r.height
    if w % 2 or h % 2:
        raise MinSizeError(f"region {r} has odd sides, cannot split")
    if w < 2 * min_region_cell or h < 2 * min_region_cell:
        raise MinSizeError(
            f"split of {int(w)}x{int(h)} region would go below {min_region_cell} px"
        )
    xm = r.x0 + w // 2
    ym = r.y0 + h // 2
    return [
        Region(2 * region.ix - 1, 2 * region.iy - 1, Rect(r.x0, r.y0, xm, ym)),
        Region(2 * region.ix, 2 * region.iy - 1, Rect(xm, r.y0, r.x1, ym)),
        Region(2 * region.ix - 1, 2 * region.iy, Rect(r.x0, ym, xm, r.y1)),
        Region(2 * region.ix, 2 * region.iy, Rect(xm, ym, r.x1, r.y1)),
    ]


@dataclass
class Partition:
    """Leaf regions tiling the image, plus registered grid coordinates.

    ``regions`` stays in canonical order: splitting replaces a leaf by its
    four children in place, which keeps the list in quadtree preorder.
    """

    width: int
    height: int
    cell: int
    m: int
    n: int
    regions: list[Region]
    domains: list[Domain] = field(default_factory=list)
    x_coords: set[float] = field(default_factory=set)
    y_coords: set[float] = field(default_factory=set)
    min_region_cell: int = MIN_REGION_CELL

    def split_region(self, region: Region) -> list[Region]:
        """Replace ``region`` by its four equal quadrants.

        The new midpoint coordinates (x mid, y mid and hence the center)
        are registered as grid coordinates.
        """
        children = quadrants(region, self.min_region_cell)
        self.x_coords.add(children[0].rect.x1)
        self.y_coords.add(children[0].rect.y1)
        pos = self.regions.index(region)
        self.regions[pos:pos + 1] = children
        return children


def build_partition(width: int, height: int, cell: int) -> Partition:
    """Uniform top-level partition of a width x height image into cells."""
    if cell < 2:
        raise DivisibilityError(f"cell must be >= 2, got {cell}")
    if (width - 1) % cell or (height - 1) % cell:
        raise DivisibilityError(
            f"image extent {width - 1}x{height - 1} is not divisible by cell {cell}"
        )
    m = (width - 1) // cell
    n = (height - 1) // cell
    regions = [
        Region(i, j, Rect((i - 1) * cell, (j - 1) * cell, i * cell, j * cell))
        for j in range(1, n + 1)
        for i in range(1, m + 1)
    ]
    xs = {float(i * cell) for i in range(m + 1)}
    ys = {float(j * cell) for j in range(n + 1)}
    return Partition(width, height, cell, m, n, regions, x_coords=xs, y_coords=ys)
