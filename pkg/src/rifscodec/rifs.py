"""Maps, metric and transition structure of the recurrent IFS.

Each map w = (L, F) pairs a per-axis affine contraction L from a domain
block onto a region block with a vertical map
F(x, y, z) = d(L(x, y)) * (z - g(x, y)) + h(L(x, y)),
where g and h are the bilinear surfaces through the corner data of the
domain and the region. Because d vanishes at region corners, w sends the
4 corner data points of its domain exactly onto the region's corner data
points, which is what makes the attractor interpolate the grid.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyRow,
    InvalidTransition,
    NotContractive,
    OutOfRect,
    RangeError,
    SamplingError,
)
from .field import ContractivityField, eval_field
from .grid import Rect


def _rect_of(obj) -> Rect:
    return obj if isinstance(obj, Rect) else obj.rect


@dataclass(frozen=True)
class PlanarMap:
    """Axis-separable affine contraction from a domain onto a region."""

    source: Rect
    target: Rect
    flip_x: bool
    flip_y: bool
    a_x: float
    a_y: float

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.flip_x:
            xo = self.target.x1 - self.a_x * (x - self.source.x0)
        else:
            xo = self.target.x0 + self.a_x * (x - self.source.x0)
        if self.flip_y:
            yo = self.target.y1 - self.a_y * (y - self.source.y0)
        else:
            yo = self.target.y0 + self.a_y * (y - self.source.y0)
        return xo, yo


def make_planar_map(domain, region, flip_x: bool = False,
                    flip_y: bool = False) -> PlanarMap:
    """Contraction of the domain rect onto the region rect, optionally
    reflected per axis. The domain must be strictly larger on both axes."""
    src = _rect_of(domain)
    tgt = _rect_of(region)
    a_x = tgt.width / src.width
    a_y = tgt.height / src.height
    if not (0 < a_x < 1 and 0 < a_y < 1):
        raise NotContractive(f"planar ratios ({a_x}, {a_y}) must lie in (0, 1)")
    return PlanarMap(src, tgt, flip_x, flip_y, a_x, a_y)


@dataclass(frozen=True)
class BilinearPatch:
    """Bilinear surface pinned to 4 corner values of a rectangle.

    ``corner_values[ix, iy]`` belongs to corner (x_ix, y_iy).
    """

    rect: Rect
    corner_values: np.ndarray

    @classmethod
    def from_corners(cls, rect: Rect, z00: float, z10: float,
                     z01: float, z11: float) -> "BilinearPatch":
        return cls(rect, np.array([[z00, z01], [z10, z11]], dtype=float))


def eval_bilinear(p: BilinearPatch, x, y):
    """Evaluate the patch; exact at corners, broadcasts over arrays."""
    if not p.rect.contains(x, y):
        raise OutOfRect(f"({x}, {y}) outside patch rect {p.rect}")
    u = (np.asarray(x, dtype=float) - p.rect.x0) / p.rect.width
    v = (np.asarray(y, dtype=float) - p.rect.y0) / p.rect.height
    c = p.corner_values
    return (
        c[0, 0] * (1 - u) * (1 - v)
        + c[1, 0] * u * (1 - v)
        + c[0, 1] * (1 - u) * v
        + c[1, 1] * u * v
    )


@dataclass(frozen=True)
class RifsMap:
    """One w = (L, F): planar contraction plus vertical map."""

    planar: PlanarMap
    d: ContractivityField
    g: BilinearPatch
    h: BilinearPatch

    @property
    def source(self) -> Rect:
        return self.planar.source

    @property
    def target(self) -> Rect:
        return self.planar.target


def eval_w(map: RifsMap, x, y, z):
    """Apply the map to (x, y, z); (x, y) must lie in the domain rect."""
    if not map.source.contains(x, y):
        raise OutOfRect(f"({x}, {y}) outside domain rect {map.source}")
    xo, yo = map.planar(x, y)
    zo = eval_field(map.d, xo, yo) * (np.asarray(z, dtype=float)
                                      - eval_bilinear(map.g, x, y)) \
        + eval_bilinear(map.h, xo, yo)
    return xo, yo, zo


def rho(p, q, theta: float) -> float:
    """Taxicab metric with a weighted vertical term."""
    if theta <= 0:
        raise RangeError(f"theta must be positive, got {theta}")
    return (abs(p[0] - q[0]) + abs(p[1] - q[1]) + theta * abs(p[2] - q[2]))


@dataclass(frozen=True)
class MetricParams:
    """Weight and contractivity summary of the system's metric."""

    theta: float
    a: float
    s: float
    L_F: float


def contractivity_params(planar_ratios: Sequence[float], L_F: float) -> MetricParams:
    """Metric weight and contractivity estimate from the planar ratios and
    the Lipschitz estimate of the vertical maps."""
    ratios = list(planar_ratios)
    if not ratios or any(not 0 < r < 1 for r in ratios):
        raise RangeError("planar ratios must be nonempty and inside (0, 1)")
    if L_F <= 0:
        raise RangeError(f"L_F must be positive, got {L_F}")
    max_r = max(ratios)
    a = (1 + max_r) / 2
    theta = (1 - max_r) / (2 * L_F)
    return MetricParams(theta=theta, a=a, s=max(a, L_F), L_F=L_F)


def estimate_lipschitz(maps: Sequence[RifsMap], probes: int = 9,
                       z_levels: Sequence[float] = (0.0, 127.5, 255.0)) -> float:
    """Sampled difference-quotient estimate of max Lipschitz constant of
    the vertical maps, probed on a probes x probes grid per map."""
    worst = 0.0
    for m in maps:
        xs = np.linspace(m.source.x0, m.source.x1, probes)
        ys = np.linspace(m.source.y0, m.source.y1, probes)
        X, Y = xs[None, :], ys[:, None]
        Xo, Yo = m.planar(X, Y)
        d_vals = eval_field(m.d, Xo, Yo)
        g_vals = eval_bilinear(m.g, X, Y)
        h_vals = eval_bilinear(m.h, Xo, Yo)
        dx = xs[1] - xs[0]
        dy = ys[1] - ys[0]
        levels = [d_vals * (z - g_vals) + h_vals for z in z_levels]
        for F in levels:
            worst = max(worst, np.abs(np.diff(F, axis=1)).max() / dx)
            worst = max(worst, np.abs(np.diff(F, axis=0)).max() / dy)
        for Fa, Fb, za, zb in zip(levels, levels[1:], z_levels, z_levels[1:]):
            worst = max(worst, np.abs(Fb - Fa).max() / abs(zb - za))
    return worst


def verify_contraction(map: RifsMap, theta: float, trials: int,
                       seed: int = 0) -> float:
    """Largest observed rho(w p, w q) / rho(p, q) over random point pairs
    in the domain (z in [0, 255]); below 1 for a well-formed map."""
    if trials < 1:
        raise RangeError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    src = map.source
    xs = rng.uniform(src.x0, src.x1, size=(2, trials))
    ys = rng.uniform(src.y0, src.y1, size=(2, trials))
    zs = rng.uniform(0.0, 255.0, size=(2, trials))
    dist = (np.abs(xs[0] - xs[1]) + np.abs(ys[0] - ys[1])
            + theta * np.abs(zs[0] - zs[1]))
    x0o, y0o, z0o = eval_w(map, xs[0], ys[0], zs[0])
    x1o, y1o, z1o = eval_w(map, xs[1], ys[1], zs[1])
    dist_o = (np.abs(x0o - x1o) + np.abs(y0o - y1o) + theta * np.abs(z0o - z1o))
    ok = dist > 0
    if not np.any(ok):
        return 0.0
    return float((dist_o[ok] / dist[ok]).max())


def build_connection_matrix(regions, assignments) -> np.ndarray:
    """c[k, l] = 1 when region l's rect lies inside the domain assigned to
    region k. ``regions`` may be a Partition or a region sequence;
    ``assignments`` maps each region (or its index) to its domain."""
    region_list = list(getattr(regions, "regions", regions))
    n = len(region_list)
    if hasattr(assignments, "keys"):
        domains = [assignments[r] for r in region_list]
    else:
        domains = list(assignments)
    if len(domains) != n:
        raise RangeError("every region needs an assigned domain")
    C = np.zeros((n, n), dtype=np.int8)
    for k in range(n):
        drect = _rect_of(domains[k])
        for l in range(n):
            if drect.contains_rect(_rect_of(region_list[l])):
                C[k, l] = 1
    return C


def stochastic_uniform(C: np.ndarray) -> np.ndarray:
    """Row-normalize a 0/1 connection matrix into transition probabilities."""
    C = np.asarray(C)
    sums = C.sum(axis=1)
    if np.any(sums == 0):
        raise EmptyRow(f"rows {np.nonzero(sums == 0)[0].tolist()} have no successor")
    return C / sums[:, None]


def is_irreducible(P: np.ndarray) -> bool:
    """True when the digraph of positive entries is strongly connected."""
    A = np.asarray(P) > 0
    n = A.shape[0]
    if n == 1:
        return True

    def reach(adj) -> np.ndarray:
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.nonzero(adj[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        return seen

    return bool(reach(A).all() and reach(A.T).all())


@dataclass(frozen=True)
class MapGraph:
    """Connection matrix with its stochastic companion."""

    C: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.C)
        P = np.asarray(self.P)
        if C.shape != P.shape or C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise RangeError("C and P must be square and of equal shape")
        if np.abs(P.sum(axis=1) - 1).max() > 1e-12:
            raise RangeError("P rows must sum to 1")
        if np.any((P > 0) != (C == 1)):
            raise RangeError("positivity pattern of P must match C")


def _patch_coeffs(p: BilinearPatch):
    c = p.corner_values
    w, h = p.rect.width, p.rect.height
    gx = (c[1, 0] - c[0, 0]) / w
    gy = (c[0, 1] - c[0, 0]) / h
    gxy = (c[1, 1] - c[1, 0] - c[0, 1] + c[0, 0]) / (w * h)
    return p.rect.x0, p.rect.y0, float(c[0, 0]), float(gx), float(gy), float(gxy)


def chaos_game(maps: Sequence[RifsMap], P: np.ndarray, q0, n: int,
               burn_in: int, seed: int = 0) -> np.ndarray:
    """Random orbit of the system under the transition matrix P.

    The next map index is drawn from the current state's row of P;
    transitions are only legal along connection edges (region of the
    sampled map inside the current state's domain), anything else raises
    InvalidTransition. Before applying the sampled map the point is
    re-based into that map's domain rect (a clamp; a no-op whenever the
    point already lies inside). The first ``burn_in`` points are
    discarded.
    """
    if not maps:
        raise RangeError("need at least one map")
    if burn_in > n:
        raise RangeError("burn_in cannot exceed n")
    P = np.asarray(P, dtype=float)
    N = len(maps)
    if P.shape != (N, N):
        raise RangeError(f"P shape {P.shape} does not match {N} maps")

    conn = np.zeros((N, N), dtype=bool)
    for k in range(N):
        for l in range(N):
            conn[k, l] = maps[k].source.contains_rect(maps[l].target)
    cum = [list(np.cumsum(P[k])) for k in range(N)]

    # Flattened per-map scalars keep the hot loop in plain Python floats.
    plan = []
    for m in maps:
        pm = m.planar
        if pm.flip_x:
            bx, ax = pm.target.x1 + pm.a_x * pm.source.x0, -pm.a_x
        else:
            bx, ax = pm.target.x0 - pm.a_x * pm.source.x0, pm.a_x
        if pm.flip_y:
            by, ay = pm.target.y1 + pm.a_y * pm.source.y0, -pm.a_y
        else:
            by, ay = pm.target.y0 - pm.a_y * pm.source.y0, pm.a_y
        nx, ny = m.d.ratios.shape
        plan.append((
            (pm.source.x0, pm.source.y0, pm.source.x1, pm.source.y1),
            (bx, ax, by, ay),
            _patch_coeffs(m.g),
            _patch_coeffs(m.h),
            (m.d.rect.x0, m.d.rect.y0,
             (nx - 1) / m.d.rect.width, (ny - 1) / m.d.rect.height,
             nx, ny, m.d.ratios.tolist()),
        ))

    x, y, z = float(q0[0]), float(q0[1]), float(q0[2])
    state = 0
    for idx, m in enumerate(maps):
        if m.target.contains(x, y):
            state = idx
            break

    rng = np.random.default_rng(seed)
    draws = rng.random(n)
    out = np.empty((max(n - burn_in, 0), 3))
    for i in range(n):
        l = bisect.bisect_left(cum[state], draws[i])
        if l >= N:
            l = N - 1
        if not conn[state, l]:
            raise InvalidTransition(
                f"transition {state} -> {l} has no connection edge; P is corrupt"
            )
        (sx0, sy0, sx1, sy1), (bx, ax, by, ay), gco, hco, dfo = plan[l]
        if x < sx0: x = sx0
        elif x > sx1: x = sx1
        if y < sy0: y = sy0
        elif y > sy1: y = sy1
        gx0, gy0, g0, gdx, gdy, gdxy = gco
        gval = g0 + gdx * (x - gx0) + gdy * (y - gy0) + gdxy * (x - gx0) * (y - gy0)
        xo = bx + ax * x
        yo = by + ay * y
        dx0, dy0, inv_sx, inv_sy, nx, ny, rows = dfo
        tx = (xo - dx0) * inv_sx
        ty = (yo - dy0) * inv_sy
        kx = int(tx)
        if kx > nx - 2: kx = nx - 2
        ky = int(ty)
        if ky > ny - 2: ky = ny - 2
        fx = tx - kx
        fy = ty - ky
        r0 = rows[kx]
        r1 = rows[kx + 1]
        dval = (r0[ky] * (1 - fx) * (1 - fy) + r1[ky] * fx * (1 - fy)
                + r0[ky + 1] * (1 - fx) * fy + r1[ky + 1] * fx * fy)
        hx0, hy0, h0, hdx, hdy, hdxy = hco
        hval = h0 + hdx * (xo - hx0) + hdy * (yo - hy0) + hdxy * (xo - hx0) * (yo - hy0)
        z = dval * (z - gval) + hval
        x, y = xo, yo
        state = l
        if i >= burn_in:
            out[i - burn_in, 0] = x
            out[i - burn_in, 1] = y
            out[i - burn_in, 2] = z
    return out


def rasterize_cloud(points: np.ndarray, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Average orbit z values per pixel. Returns (raster, covered mask);
    uncovered pixels are 0."""
    raster = np.zeros((height, width))
    counts = np.zeros((height, width))
    if len(points):
        ix = np.clip(np.rint(points[:, 0]).astype(int), 0, width - 1)
        iy = np.clip(np.rint(points[:, 1]).astype(int), 0, height - 1)
        np.add.at(raster, (iy, ix), points[:, 2])
        np.add.at(counts, (iy, ix), 1.0)
    covered = counts > 0
    raster[covered] /= counts[covered]
    return raster, covered


def region_transform_parts(region: Rect, domain: Rect, flip_x: bool, flip_y: bool,
                           g: BilinearPatch, h: BilinearPatch,
                           d: ContractivityField):
    """Precomputed arrays for painting every pixel of a region from its
    domain: source gather indices plus the pixel-resolved g, h and d grids.
    Region pixels and their preimages must both be integer pixels."""
    rx0, ry0, rx1, ry1 = (int(region.x0), int(region.y0),
                          int(region.x1), int(region.y1))
    dx0, dy0, dx1, dy1 = (int(domain.x0), int(domain.y0),
                          int(domain.x1), int(domain.y1))
    if (dx1 - dx0) % (rx1 - rx0) or (dy1 - dy0) % (ry1 - ry0):
        raise SamplingError(
            f"domain {domain} is not an integer multiple of region {region}"
        )
    sx = (dx1 - dx0) // (rx1 - rx0)
    sy = (dy1 - dy0) // (ry1 - ry0)
    rxs = np.arange(rx0, rx1 + 1)
    rys = np.arange(ry0, ry1 + 1)
    if flip_x:
        dxs = dx0 + sx * (rx1 - rxs)
    else:
        dxs = dx0 + sx * (rxs - rx0)
    if flip_y:
        dys = dy0 + sy * (ry1 - rys)
    else:
        dys = dy0 + sy * (rys - ry0)
    g_pix = eval_bilinear(g, dxs[None, :], dys[:, None])
    h_pix = eval_bilinear(h, rxs[None, :], rys[:, None])
    d_pix = eval_field(d, rxs[None, :], rys[:, None])
    return dxs, dys, g_pix, h_pix, d_pix


def paint_region(src: np.ndarray, parts) -> np.ndarray:
    """Predicted region pixel block given a source buffer and transform parts."""
    dxs, dys, g_pix, h_pix, d_pix = parts
    block = src[np.ix_(dys, dxs)]
    return d_pix * (block - g_pix) + h_pix
