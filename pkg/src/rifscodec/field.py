"""Vertical contraction-factor fields sampled from image data.

For a region/domain pair the deviation of the image from the bilinear
surface through the block's 4 corners is sampled on a small lattice on
both blocks; the per-sample ratio region/domain, clamped below 1, is the
factor field. The field is evaluated between samples by bilinear
interpolation, and is exactly 0 at the block corners so that the maps
built from it pin the corner data points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRect, RangeError, SamplingError, ShapeMismatch
from .grid import Rect


@dataclass(frozen=True)
class DistanceGrid:
    """Absolute vertical deviations sampled on a (dx+1) x (dy+1) lattice.

    ``samples[k, l]`` belongs to the point (rect.x0 + k*step_x,
    rect.y0 + l*step_y).
    """

    rect: Rect
    samples: np.ndarray
    step_x: float
    step_y: float


@dataclass(frozen=True)
class ContractivityField:
    """Signed factor samples on a region; bilinear between samples.

    ``ratios[k, l]`` follows the same layout as :class:`DistanceGrid`.
    Well-formed fields have all four corner entries exactly 0 and
    magnitudes clamped below 1.
    """

    ratios: np.ndarray
    rect: Rect


def _corner_reference(image: np.ndarray, rect: Rect, xs: np.ndarray,
                      ys: np.ndarray) -> np.ndarray:
    """Bilinear surface through the rect's 4 corner image values, sampled
    at the lattice xs x ys; returned x-major (shape (len(xs), len(ys)))."""
    x0, y0, x1, y1 = int(rect.x0), int(rect.y0), int(rect.x1), int(rect.y1)
    c00 = image[y0, x0]
    c10 = image[y0, x1]
    c01 = image[y1, x0]
    c11 = image[y1, x1]
    u = (np.asarray(xs, dtype=float) - x0) / (x1 - x0)
    v = (np.asarray(ys, dtype=float) - y0) / (y1 - y0)
    return (
        np.outer(1 - u, 1 - v) * c00
        + np.outer(u, 1 - v) * c10
        + np.outer(1 - u, v) * c01
        + np.outer(u, v) * c11
    )


def _lattice(rect: Rect, delta_x: int, delta_y: int) -> tuple[np.ndarray, np.ndarray, int, int]:
    if delta_x < 2 or delta_y < 2:
        raise SamplingError(f"need at least 2 sample intervals, got {delta_x}, {delta_y}")
    w, h = int(rect.width), int(rect.height)
    if w % delta_x or h % delta_y:
        raise SamplingError(
            f"rect sides {w}x{h} not divisible by sample counts {delta_x}x{delta_y}"
        )
    sx, sy = w // delta_x, h // delta_y
    xs = int(rect.x0) + sx * np.arange(delta_x + 1)
    ys = int(rect.y0) + sy * np.arange(delta_y + 1)
    return xs, ys, sx, sy


def deviation_grid(image: np.ndarray, rect: Rect, delta_x: int, delta_y: int) -> np.ndarray:
    """Signed vertical deviations I - B on the sample lattice, x-major."""
    xs, ys, _, _ = _lattice(rect, delta_x, delta_y)
    values = image[np.ix_(ys, xs)].T
    return values - _corner_reference(image, rect, xs, ys)


def distance_grid(image: np.ndarray, rect: Rect, delta_x: int, delta_y: int) -> DistanceGrid:
    """Absolute deviation samples; the 4 corner entries are 0 by construction."""
    xs, ys, sx, sy = _lattice(rect, delta_x, delta_y)
    dev = deviation_grid(image, rect, delta_x, delta_y)
    return DistanceGrid(rect, np.abs(dev), float(sx), float(sy))


def resample_on_zero(image: np.ndarray, rect: Rect, k: int, l: int,
                     delta_x: int, delta_y: int) -> float:
    """Re-measure a zero deviation sample after nudging it toward the center.

    Up to two single-pixel shifts are tried; 0.0 is returned if the
    deviation stays zero, and the caller then zeroes the ratio entry.
    """
    return abs(_resample_deviation(image, rect, k, l, delta_x, delta_y))


def _resample_deviation(image: np.ndarray, rect: Rect, k: int, l: int,
                        delta_x: int, delta_y: int) -> float:
    xs, ys, _, _ = _lattice(rect, delta_x, delta_y)
    corner = (k in (0, delta_x)) and (l in (0, delta_y))
    if corner:
        raise RangeError("corner samples are fixed at 0 and never resampled")
    x, y = float(xs[k]), float(ys[l])
    cx, cy = rect.center()
    for _ in range(2):
        x += float(np.sign(cx - x))
        y += float(np.sign(cy - y))
        value = image[int(round(y)), int(round(x))]
        ref = _corner_reference(image, rect, np.array([x]), np.array([y]))[0, 0]
        dev = float(value - ref)
        if dev != 0.0:
            return dev
    return 0.0


def ratio_field(hr: DistanceGrid, hd: DistanceGrid, d_max: float,
                sign_grid: np.ndarray) -> ContractivityField:
    """Elementwise region/domain deviation ratios, signed and clamped.

    ``hd`` must already be aligned to the region's sample order (the
    caller reindexes it for flipped orientations). Zero denominators
    left after resampling yield a 0 entry.
    """
    if not 0 < d_max < 1:
        raise RangeError(f"d_max must be in (0, 1), got {d_max}")
    if hr.samples.shape != hd.samples.shape or hr.samples.shape != sign_grid.shape:
        raise ShapeMismatch(
            f"sample shapes differ: {hr.samples.shape} vs {hd.samples.shape} "
            f"vs {sign_grid.shape}"
        )
    num = np.abs(hr.samples)
    den = np.abs(hd.samples)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(den > 0, sign_grid * num / np.where(den > 0, den, 1.0), 0.0)
    ratios = np.clip(ratios, -d_max, d_max)
    ratios[0, 0] = ratios[0, -1] = ratios[-1, 0] = ratios[-1, -1] = 0.0
    return ContractivityField(ratios, hr.rect)


def field_from_pair(image: np.ndarray, region: Rect, domain: Rect,
                    flip_x: bool, flip_y: bool, delta: int,
                    d_max: float) -> ContractivityField:
    """Full per-pair field construction: sample both blocks, align the
    domain samples to the mapped orientation, resample zero denominators,
    attach deviation signs and form the clamped ratio field."""
    dev_r = deviation_grid(image, region, delta, delta)
    dev_d = deviation_grid(image, domain, delta, delta)
    if flip_x:
        dev_d = dev_d[::-1, :]
    if flip_y:
        dev_d = dev_d[:, ::-1]
    dev_d = dev_d.copy()

    # A zero denominator under a nonzero numerator is re-measured near the
    # original sample; the shift happens in domain coordinates.
    zero_k, zero_l = np.nonzero(dev_d == 0.0)
    for u, v in zip(zero_k, zero_l):
        if (u in (0, delta)) and (v in (0, delta)):
            continue
        kd = delta - u if flip_x else int(u)
        ld = delta - v if flip_y else int(v)
        dev_d[u, v] = _resample_deviation(image, domain, kd, ld, delta, delta)

    signs = np.sign(dev_r) * np.sign(dev_d)
    hr = DistanceGrid(region, np.abs(dev_r), region.width / delta, region.height / delta)
    hd = DistanceGrid(domain, np.abs(dev_d), domain.width / delta, domain.height / delta)
    return ratio_field(hr, hd, d_max, signs)


def eval_field(f: ContractivityField, x, y):
    """Bilinear interpolation of the ratio samples; broadcasts over arrays."""
    if not f.rect.contains(x, y):
        raise OutOfRect(f"({x}, {y}) outside field rect {f.rect}")
    nx, ny = f.ratios.shape
    tx = (np.asarray(x, dtype=float) - f.rect.x0) / (f.rect.width / (nx - 1))
    ty = (np.asarray(y, dtype=float) - f.rect.y0) / (f.rect.height / (ny - 1))
    kx = np.clip(np.floor(tx).astype(int), 0, nx - 2)
    ky = np.clip(np.floor(ty).astype(int), 0, ny - 2)
    fx = tx - kx
    fy = ty - ky
    r = f.ratios
    return (
        r[kx, ky] * (1 - fx) * (1 - fy)
        + r[kx + 1, ky] * fx * (1 - fy)
        + r[kx, ky + 1] * (1 - fx) * fy
        + r[kx + 1, ky + 1] * fx * fy
    )
