"""Encoder: domain pool, per-region similarity search, quadtree splitting.

Every region is matched against a pool of strictly larger domains under
up to 4 axis-flip orientations. The match error is the RMS between the
region's pixels and the pixels predicted by the map built from the pair
(bilinear corner surfaces plus the sampled contraction-factor field).
Regions whose best error exceeds the tolerance are split into quadrants
and re-matched, down to a fixed floor where the best candidate is kept
regardless.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyPool, RangeError
from .field import ContractivityField, field_from_pair
from .grid import (
    MIN_REGION_CELL,
    Domain,
    Rect,
    Region,
    build_partition,
    quadrants,
)
from .rifs import BilinearPatch, paint_region, region_transform_parts

ORIENTATIONS = (0, 1, 2, 3)  # bit 0 = flip x, bit 1 = flip y


def orientation_flips(orientation: int) -> tuple[bool, bool]:
    if orientation not in ORIENTATIONS:
        raise RangeError(f"orientation must be 0..3, got {orientation}")
    return bool(orientation & 1), bool(orientation & 2)


@dataclass(frozen=True)
class EncoderConfig:
    region_cell: int = 32
    domain_factor: int = 2
    domain_stride: int | None = None  # defaults to the domain side
    tolerance: float = 8.0
    d_max: float = 0.95
    delta: int = 4
    max_split_depth: int = 3
    search_orientations: bool = True

    @property
    def domain_side(self) -> int:
        return self.domain_factor * self.region_cell

    @property
    def stride(self) -> int:
        return self.domain_side if self.domain_stride is None else self.domain_stride

    def validate(self) -> "EncoderConfig":
        c = self.region_cell
        if c < MIN_REGION_CELL or c & (c - 1):
            raise RangeError(f"region_cell must be a power of two >= {MIN_REGION_CELL}")
        if self.domain_factor < 2:
            raise RangeError("domain_factor must be an integer >= 2")
        if self.stride < 1 or self.stride % self.region_cell:
            raise RangeError("domain_stride must be a positive multiple of region_cell")
        if self.tolerance <= 0:
            raise RangeError("tolerance must be positive")
        if not 0 < self.d_max < 1:
            raise RangeError("d_max must lie in (0, 1)")
        if self.max_split_depth < 0:
            raise RangeError("max_split_depth must be >= 0")
        floor = max(MIN_REGION_CELL, self.region_cell >> self.max_split_depth)
        if self.delta < 2 or floor % self.delta:
            raise RangeError(
                f"delta must be >= 2 and divide the smallest region side {floor}"
            )
        return self


@dataclass(frozen=True)
class RegionCode:
    """Compressed record of one leaf region."""

    region_rect: Rect
    domain_id: int
    orientation: int
    field: ContractivityField


@dataclass
class CompressedImage:
    """Everything the decoder needs: geometry, vertex values, leaf codes.

    ``tree`` holds one preorder bit list per top-level region (1 = split
    into 4 children, 0 = leaf); ``codes`` follows the same traversal.
    ``vertex_plane`` maps live grid vertex (x, y) to its stored value.
    """

    width: int
    height: int
    cell: int
    a: int
    delta: int
    d_max: float
    tree: list[list[int]]
    codes: list[RegionCode]
    vertex_plane: dict[tuple[int, int], float]

    def vertex(self, x: int, y: int) -> float:
        from .errors import CorruptCode

        try:
            return self.vertex_plane[(int(x), int(y))]
        except KeyError:
            raise CorruptCode(f"vertex ({x}, {y}) missing from vertex plane") from None

    def leaves(self) -> list[tuple[Rect, int, RegionCode]]:
        """(rect, depth, code) triples in canonical preorder."""
        out: list[tuple[Rect, int, RegionCode]] = []
        m = (self.width - 1) // self.cell
        n = (self.height - 1) // self.cell
        code_iter = iter(self.codes)
        for top in range(m * n):
            i, j = top % m, top // m
            rect = Rect(i * self.cell, j * self.cell,
                        (i + 1) * self.cell, (j + 1) * self.cell)
            bits = iter(self.tree[top])
            self._walk(rect, 0, bits, code_iter, out)
        return out

    def _walk(self, rect, depth, bits, code_iter, out):
        from .errors import CorruptCode

        try:
            bit = next(bits)
        except StopIteration:
            raise CorruptCode("quadtree bits exhausted early") from None
        if bit == 0:
            out.append((rect, depth, next(code_iter)))
            return
        w, h = rect.width, rect.height
        if w < 2 * MIN_REGION_CELL or h < 2 * MIN_REGION_CELL or w % 2 or h % 2:
            raise CorruptCode(f"split below minimum region size at {rect}")
        xm, ym = rect.x0 + w // 2, rect.y0 + h // 2
        for child in (Rect(rect.x0, rect.y0, xm, ym), Rect(xm, rect.y0, rect.x1, ym),
                      Rect(rect.x0, ym, xm, rect.y1), Rect(xm, ym, rect.x1, rect.y1)):
            self._walk(child, depth + 1, bits, code_iter, out)


def canonical_pool_shape(width: int, height: int, cell: int, a: int) -> tuple[int, int]:
    """Domains of side a*cell anchored on the cell lattice: count per axis."""
    side = a * cell
    nx = (width - 1 - side) // cell + 1
    ny = (height - 1 - side) // cell + 1
    return max(nx, 0), max(ny, 0)


def canonical_domain_rect(width: int, height: int, cell: int, a: int,
                          domain_id: int) -> Rect:
    from .errors import CorruptCode

    nx, ny = canonical_pool_shape(width, height, cell, a)
    if not 0 <= domain_id < nx * ny:
        raise CorruptCode(f"domain id {domain_id} outside pool of {nx * ny}")
    i, j = domain_id % nx, domain_id // nx
    side = a * cell
    return Rect(i * cell, j * cell, i * cell + side, j * cell + side)


def build_domain_pool(image: np.ndarray, config: EncoderConfig) -> list[Domain]:
    """Domains of side a*cell on a stride lattice, ids taken from the
    canonical (stride = cell) enumeration so they survive serialization."""
    height, width = image.shape
    cell, side, stride = config.region_cell, config.domain_side, config.stride
    nx, ny = canonical_pool_shape(width, height, cell, config.domain_factor)
    if nx == 0 or ny == 0:
        raise EmptyPool(f"no {side}x{side} domain fits in {width}x{height}")
    step = stride // cell
    pool = []
    for j in range(0, ny, step):
        for i in range(0, nx, step):
            rect = Rect(i * cell, j * cell, i * cell + side, j * cell + side)
            corners = ((i, j), (i + side // cell, j),
                       (i, j + side // cell), (i + side // cell, j + side // cell))
            pool.append(Domain(id=j * nx + i, rect=rect, corner_grid_indices=corners))
    return pool


def _corner_patch(image: np.ndarray, rect: Rect) -> BilinearPatch:
    x0, y0, x1, y1 = int(rect.x0), int(rect.y0), int(rect.x1), int(rect.y1)
    return BilinearPatch.from_corners(
        rect, image[y0, x0], image[y0, x1], image[y1, x0], image[y1, x1]
    )


def region_error(image: np.ndarray, region: Region | Rect, domain: Domain | Rect,
                 orientation: int, config: EncoderConfig) -> tuple[float, ContractivityField]:
    """RMS over all region pixels between the image and the pixels the
    (domain, orientation) map predicts, together with the fitted field."""
    rrect = region if isinstance(region, Rect) else region.rect
    drect = domain if isinstance(domain, Rect) else domain.rect
    flip_x, flip_y = orientation_flips(orientation)
    fld = field_from_pair(image, rrect, drect, flip_x, flip_y,
                          config.delta, config.d_max)
    g = _corner_patch(image, drect)
    h = _corner_patch(image, rrect)
    parts = region_transform_parts(rrect, drect, flip_x, flip_y, g, h, fld)
    predicted = paint_region(image, parts)
    actual = image[int(rrect.y0):int(rrect.y1) + 1, int(rrect.x0):int(rrect.x1) + 1]
    rms = float(np.sqrt(np.mean((actual - predicted) ** 2)))
    return rms, fld


def _best_match(image: np.ndarray, region: Region, pool: list[Domain],
                config: EncoderConfig) -> tuple[RegionCode, float]:
    orientations = ORIENTATIONS if config.search_orientations else (0,)
    best: tuple[float, int, int, ContractivityField] | None = None
    for domain in pool:
        for orientation in orientations:
            rms, fld = region_error(image, region, domain, orientation, config)
            key = (rms, domain.id, orientation)
            if best is None or key < (best[0], best[1], best[2]):
                best = (rms, domain.id, orientation, fld)
    rms, domain_id, orientation, fld = best
    return RegionCode(region.rect, domain_id, orientation, fld), rms


def match_region(image: np.ndarray, region: Region, pool: list[Domain],
                 config: EncoderConfig) -> tuple[RegionCode, float] | None:
    """Exhaustive pool x orientation scan; None when even the best
    candidate misses the tolerance. Ties break on lowest domain id, then
    lowest orientation code."""
    if not pool:
        raise EmptyPool("domain pool is empty")
    code, rms = _best_match(image, region, pool, config)
    if rms > config.tolerance:
        return None
    return code, rms


def _can_split(region: Region) -> bool:
    r = region.rect
    return (r.width >= 2 * MIN_REGION_CELL and r.height >= 2 * MIN_REGION_CELL
            and r.width % 2 == 0 and r.height % 2 == 0)


def _encode_region(image, region, pool, config, depth, bits, codes):
    matched = match_region(image, region, pool, config)
    if matched is None and depth < config.max_split_depth and _can_split(region):
        bits.append(1)
        for child in quadrants(region):
            _encode_region(image, child, pool, config, depth + 1, bits, codes)
        return
    if matched is None:
        matched = _best_match(image, region, pool, config)  # floor: keep best
    bits.append(0)
    codes.append(matched[0])


def _worker_count() -> int:
    raw = os.environ.get("RIFS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def encode(image: np.ndarray, config: EncoderConfig | None = None) -> CompressedImage:
    """Compress a 2**p + 1 sided grayscale image into an RIFS model."""
    config = (config or EncoderConfig()).validate()
    image = np.asarray(image, dtype=float)
    height, width = image.shape
    for side in (width, height):
        extent = side - 1
        if extent < 2 or extent & (extent - 1):
            raise DimensionError(f"image sides must be 2**p + 1, got {width}x{height}")
    partition = build_partition(width, height, config.region_cell)
    pool = build_domain_pool(image, config)
    partition.domains = pool

    tops = list(partition.regions)

    def encode_top(region: Region) -> tuple[list[int], list[RegionCode]]:
        bits: list[int] = []
        codes: list[RegionCode] = []
        _encode_region(image, region, pool, config, 0, bits, codes)
        return bits, codes

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            results = list(pool_exec.map(encode_top, tops))
    else:
        results = [encode_top(r) for r in tops]

    tree = [bits for bits, _ in results]
    codes = [code for _, leaf_codes in results for code in leaf_codes]

    vertices: dict[tuple[int, int], float] = {}
    stub = CompressedImage(width, height, config.region_cell, config.domain_factor,
                           config.delta, config.d_max, tree, codes, vertices)
    for rect, _, _ in stub.leaves():
        for x in (int(rect.x0), int(rect.x1)):
            for y in (int(rect.y0), int(rect.y1)):
                vertices[(x, y)] = float(image[y, x])
    return stub
