"""Closed regions, raster medial axis, projections onto the axis and cross-sections.

Conventions used throughout the package: boundaries are counter-clockwise,
"left" of a direction means a positive cross product, and signed curvature
is positive for left (counter-clockwise) turns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from skimage.draw import polygon2mask
from skimage.morphology import skeletonize

from .errors import DisconnectedAxis, InvalidRegion, RegionTooThin, SectionDegenerate

SMOOTH_WINDOW = 5
RECENTER_WINDOW = 15
CURV_STRIDE = 2
STRAIGHT_CURVATURE = 1e-4
DEFAULT_ALPHA = 0.05
CORNER_SLOPE = 0.35
AXIS_SPACING = 2.0  # axis sample spacing, in raster cells


# --------------------------------------------------------------------------
# polygon primitives


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def is_simple(poly: np.ndarray) -> bool:
    """True when no two non-adjacent edges of the closed polygon intersect."""
    n = len(poly)
    if n < 3:
        return False
    a = poly
    b = np.roll(poly, -1, axis=0)
    d = b - a
    if np.any(np.hypot(d[:, 0], d[:, 1]) == 0):
        return False
    # o1[i, j]: side of a_j w.r.t. edge i; o3[i, j]: side of a_i w.r.t. edge j
    o1 = _cross(d[:, None, :], a[None, :, :] - a[:, None, :])
    o2 = _cross(d[:, None, :], b[None, :, :] - a[:, None, :])
    o3 = o1.T
    o4 = _cross(d[None, :, :], b[:, None, :] - a[None, :, :])
    hit = (o1 * o2 < 0) & (o3 * o4 < 0)
    idx = np.arange(n)
    adjacent = (
        (idx[:, None] == idx[None, :])
        | ((idx[:, None] + 1) % n == idx[None, :])
        | ((idx[None, :] + 1) % n == idx[:, None])
    )
    return not bool(np.any(hit & ~adjacent))


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Crossing-number test, vectorized over points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = poly
    b = np.roll(poly, -1, axis=0)
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    ay, by = a[None, :, 1], b[None, :, 1]
    ax, bx = a[None, :, 0], b[None, :, 0]
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = ax + (py - ay) * (bx - ax) / (by - ay)
    inside = np.count_nonzero(straddle & (px < xcross), axis=1) % 2 == 1
    return inside


def distance_to_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the polygon boundary."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = poly
    d = np.roll(poly, -1, axis=0) - a
    l2 = np.einsum("ij,ij->i", d, d)
    rel = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / l2, 0.0, 1.0)
    diff = rel - t[..., None] * d[None, :, :]
    return np.sqrt(np.min(np.einsum("pij,pij->pi", diff, diff), axis=1))


def ray_distance(origin, direction, poly: np.ndarray) -> float:
    """Distance along a unit ray to the first boundary crossing, inf if none."""
    o = np.asarray(origin, dtype=float)
    r = np.asarray(direction, dtype=float)
    a = poly
    e = np.roll(poly, -1, axis=0) - a
    denom = _cross(r, e)
    ao = a - o
    with np.errstate(divide="ignore", invalid="ignore"):
        t = _cross(ao, e) / denom
        u = _cross(ao, r) / denom
    ok = (denom != 0) & (t > 1e-12) & (u >= 0.0) & (u <= 1.0)
    if not np.any(ok):
        return float("inf")
    return float(np.min(t[ok]))


# --------------------------------------------------------------------------
# region


@dataclass(frozen=True, eq=False)
class ClosedRegion:
    """Simple closed polygon, stored counter-clockwise, with optional start/goal hints."""

    boundary: np.ndarray
    start_hint: np.ndarray | None = None
    goal_hint: np.ndarray | None = None

    def __post_init__(self):
        poly = np.asarray(self.boundary, dtype=float)
        if poly.ndim != 2 or poly.shape[1] != 2:
            raise InvalidRegion("boundary must be a list of [x, y] pairs")
        if len(poly) > 1 and np.array_equal(poly[0], poly[-1]):
            poly = poly[:-1]
        keep = np.any(np.roll(poly, -1, axis=0) != poly, axis=1)
        poly = poly[keep]
        if len(poly) < 3 or not np.all(np.isfinite(poly)):
            raise InvalidRegion("boundary needs at least 3 finite distinct vertices")
        area = signed_area(poly)
        if area == 0:
            raise InvalidRegion("boundary has zero area")
        if area < 0:
            poly = poly[::-1].copy()
        if not is_simple(poly):
            raise InvalidRegion("boundary self-intersects")
        poly.setflags(write=False)
        object.__setattr__(self, "boundary", poly)
        for name in ("start_hint", "goal_hint"):
            hint = getattr(self, name)
            if hint is None:
                continue
            hint = np.asarray(hint, dtype=float).reshape(2)
            if not (self.contains(hint) or self.distance(hint) < 1e-9 * self.scale):
                raise InvalidRegion(f"{name} lies outside the boundary")
            object.__setattr__(self, name, hint)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.boundary.min(axis=0)
        hi = self.boundary.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @property
    def scale(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return max(x1 - x0, y1 - y0)

    @property
    def short_side(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return min(x1 - x0, y1 - y0)

    @property
    def area(self) -> float:
        return signed_area(self.boundary)

    def default_resolution(self) -> float:
        return self.short_side / 100.0

    def contains(self, point) -> bool:
        return bool(points_in_polygon(np.asarray(point, dtype=float)[None, :], self.boundary)[0])

    def distance(self, point) -> float:
        return float(distance_to_polygon(np.asarray(point, dtype=float)[None, :], self.boundary)[0])

    def transformed(self, rotation: float = 0.0, offset=(0.0, 0.0)) -> "ClosedRegion":
        c, s = np.cos(rotation), np.sin(rotation)
        rot = np.array([[c, -s], [s, c]])
        off = np.asarray(offset, dtype=float)

        def tf(p):
            return None if p is None else rot @ p + off

        return ClosedRegion(self.boundary @ rot.T + off, tf(self.start_hint), tf(self.goal_hint))

    def to_dict(self) -> dict:
        out = {"boundary": [[float(x), float(y)] for x, y in self.boundary]}
        if self.start_hint is not None:
            out["start"] = [float(v) for v in self.start_hint]
        if self.goal_hint is not None:
            out["goal"] = [float(v) for v in self.goal_hint]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ClosedRegion":
        unknown = set(data) - {"boundary", "start", "goal"}
        if unknown:
            raise InvalidRegion(f"unknown shape keys: {sorted(unknown)}")
        if "boundary" not in data:
            raise InvalidRegion("shape is missing 'boundary'")
        return cls(np.asarray(data["boundary"], dtype=float), data.get("start"), data.get("goal"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "ClosedRegion":
        return cls.from_dict(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# medial axis


class AxisProjection(NamedTuple):
    point: np.ndarray
    arclen: float
    tangent: np.ndarray
    side: int  # +1 left, -1 right, 0 on the axis
    distance: float


class CrossSection(NamedTuple):
    left: np.ndarray
    right: np.ndarray
    axis_point: np.ndarray
    arclen: float

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.left - self.right)))


@dataclass(frozen=True, eq=False)
class MedialAxis:
    """Ordered centerline samples from start S to goal G.

    ``curvature`` is the signed inverse radius (0 where the axis is straight);
    ``curv_radius`` is its reciprocal with +/-inf on straight samples.
    """

    points: np.ndarray
    arclen: np.ndarray
    tangent: np.ndarray
    halfwidth: np.ndarray
    curvature: np.ndarray
    resolution: float
    _seg_a: np.ndarray = field(init=False, repr=False)
    _seg_d: np.ndarray = field(init=False, repr=False)
    _seg_l2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("points", "arclen", "tangent", "halfwidth", "curvature"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        a = self.points[:-1]
        d = self.points[1:] - a
        object.__setattr__(self, "_seg_a", a)
        object.__setattr__(self, "_seg_d", d)
        object.__setattr__(self, "_seg_l2", np.einsum("ij,ij->i", d, d))

    def __len__(self):
        return len(self.points)

    @property
    def total_length(self) -> float:
        return float(self.arclen[-1])

    @property
    def curv_radius(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            r = 1.0 / self.curvature
        return np.where(self.curvature == 0, np.inf, r)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def goal(self) -> np.ndarray:
        return self.points[-1]

    def point_at(self, s: float) -> np.ndarray:
        return np.array([np.interp(s, self.arclen, self.points[:, 0]),
                         np.interp(s, self.arclen, self.points[:, 1])])

    def tangent_at(self, s: float) -> np.ndarray:
        t = np.array([np.interp(s, self.arclen, self.tangent[:, 0]),
                      np.interp(s, self.arclen, self.tangent[:, 1])])
        return t / np.hypot(*t)

    def halfwidth_at(self, s: float) -> float:
        return float(np.interp(s, self.arclen, self.halfwidth))

    def curvature_at(self, s: float) -> float:
        return float(np.interp(s, self.arclen, self.curvature))


def nearest_axis_point(axis: MedialAxis, point) -> AxisProjection:
    """Project a point onto the axis polyline (interpolating between samples)."""
    p = np.asarray(point, dtype=float)
    rel = p - axis._seg_a
    t = np.clip(np.einsum("ij,ij->i", rel, axis._seg_d) / axis._seg_l2, 0.0, 1.0)
    proj = axis._seg_a + t[:, None] * axis._seg_d
    diff = p - proj
    d2 = np.einsum("ij,ij->i", diff, diff)
    k = int(np.argmin(d2))
    tk = float(t[k])
    P = proj[k]
    seg = axis._seg_d[k]
    seglen = float(np.sqrt(axis._seg_l2[k]))
    arclen = float(axis.arclen[k] + tk * (axis.arclen[k + 1] - axis.arclen[k]))
    tan = (1.0 - tk) * axis.tangent[k] + tk * axis.tangent[k + 1]
    tan = tan / np.hypot(*tan)
    dist = float(np.sqrt(d2[k]))
    c = float(seg[0] * diff[k][1] - seg[1] * diff[k][0]) / seglen
    if dist <= 1e-12 or abs(c) <= 1e-12:
        side = 0
    else:
        side = 1 if c > 0 else -1
    return AxisProjection(P, arclen, tan, side, dist)


def curvature_to_kappa(curv_radius: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Signed curvature feature in (-1, 1) from a signed radius (positive = left turn).

    Left curves map to negative values, right curves to positive ones.
    """
    if not np.isfinite(curv_radius) or abs(1.0 / curv_radius) < STRAIGHT_CURVATURE:
        return 0.0
    mag = (2.0 / np.pi) * np.arctan(alpha / np.sqrt(abs(curv_radius)))
    return float(-np.sign(curv_radius) * mag)


def curvature_feature(axis: MedialAxis, arclen: float, alpha: float = DEFAULT_ALPHA) -> float:
    k = axis.curvature_at(float(np.clip(arclen, 0.0, axis.total_length)))
    if abs(k) < STRAIGHT_CURVATURE:
        return 0.0
    return curvature_to_kappa(1.0 / k, alpha)


def cross_section(region: ClosedRegion, axis: MedialAxis, arclen: float, through=None) -> CrossSection:
    """Boundary-to-boundary segment perpendicular to the axis tangent at ``arclen``.

    Rays start from ``through`` when given (used for posture fitting), else from
    the axis point itself.
    """
    s = float(np.clip(arclen, 0.0, axis.total_length))
    P = axis.point_at(s)
    t = axis.tangent_at(s)
    n = np.array([-t[1], t[0]])
    origin = P if through is None else np.asarray(through, dtype=float)
    limit = 10.0 * axis.halfwidth_at(s)
    dl = ray_distance(origin, n, region.boundary)
    dr = ray_distance(origin, -n, region.boundary)
    if not (dl <= limit and dr <= limit):
        raise SectionDegenerate(f"cross-section at arclen {s:.4g} does not close within {limit:.4g}")
    return CrossSection(origin + dl * n, origin - dr * n, P, s)


def _signed_curvature(points: np.ndarray, stride: int = CURV_STRIDE) -> np.ndarray:
    m = len(points)
    idx = np.arange(m)
    i0 = np.clip(idx - stride, 0, m - 1)
    i2 = np.clip(idx + stride, 0, m - 1)
    i1 = np.where((i0 == idx) | (i2 == idx), (i0 + i2) // 2, idx)
    a, b, c = points[i0], points[i1], points[i2]
    ab = np.hypot(*(b - a).T)
    bc = np.hypot(*(c - b).T)
    ca = np.hypot(*(a - c).T)
    cr = _cross(b - a, c - a)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = 2.0 * cr / (ab * bc * ca)
    k = np.where(np.isfinite(k), k, 0.0)
    if m > 2 * stride + 1:
        # end samples lack a full window; reuse the nearest full-window estimate
        k[:stride] = k[stride]
        k[m - stride:] = k[m - stride - 1]
    return np.where(np.abs(k) < STRAIGHT_CURVATURE, 0.0, k)


def build_axis(points, region: ClosedRegion, resolution: float) -> MedialAxis:
    """Turn an ordered centerline polyline into a MedialAxis.

    Halfwidths are exact distances to the polygon; samples that are not
    strictly inside the region are dropped.
    """
    pts = np.asarray(points, dtype=float)
    inside = points_in_polygon(pts, region.boundary)
    hw = distance_to_polygon(pts, region.boundary)
    keep = inside & (hw > 0)
    pts, hw = pts[keep], hw[keep]
    if len(pts) >= 2:
        step = np.hypot(*np.diff(pts, axis=0).T)
        dup = np.concatenate([[False], step <= 1e-12])
        pts, hw = pts[~dup], hw[~dup]
    if len(pts) < 4:
        raise RegionTooThin(f"medial axis has only {len(pts)} samples")
    seg = np.hypot(*np.diff(pts, axis=0).T)
    arclen = np.concatenate([[0.0], np.cumsum(seg)])
    tan = np.gradient(pts, arclen, axis=0)
    tan /= np.hypot(tan[:, 0], tan[:, 1])[:, None]
    return MedialAxis(pts, arclen, tan, hw, _signed_curvature(pts), float(resolution))


def _resample(pts: np.ndarray, spacing: float) -> np.ndarray:
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(int(np.ceil(s[-1] / spacing)), 1) + 1
    u = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(u, s, pts[:, 0]), np.interp(u, s, pts[:, 1])])


def _recenter(pts: np.ndarray, region: ClosedRegion, max_shift: float) -> np.ndarray:
    """Move samples towards the midpoint of their exact normal section.

    Removes the half-cell bias of the raster skeleton.  Shifts are capped so a
    section that runs out through a cap cannot drag a sample away, and the
    shift field is smoothed so it cannot add point noise.
    """
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    tan = np.gradient(pts, s, axis=0)
    tan /= np.hypot(tan[:, 0], tan[:, 1])[:, None]
    normal = np.column_stack([-tan[:, 1], tan[:, 0]])
    shift = np.zeros(len(pts))
    for i, (p, n) in enumerate(zip(pts, normal)):
        half = 0.5 * (ray_distance(p, n, region.boundary) - ray_distance(p, -n, region.boundary))
        if np.isfinite(half) and abs(half) <= max_shift:
            shift[i] = half
    shift = _smooth(np.column_stack([shift, shift]), RECENTER_WINDOW)[:, 0]
    return pts + shift[:, None] * normal


def _smooth(pts: np.ndarray, window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the ends."""
    m = len(pts)
    half = window // 2
    csum = np.vstack([np.zeros((1, 2)), np.cumsum(pts, axis=0)])
    idx = np.arange(m)
    h = np.minimum(np.minimum(idx, m - 1 - idx), half)
    return (csum[idx + h + 1] - csum[idx - h]) / (2 * h + 1)[:, None]


_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _skeleton_graph(skel: np.ndarray):
    rows, cols = np.nonzero(skel)
    ids = -np.ones(skel.shape, dtype=np.int64)
    ids[rows, cols] = np.arange(len(rows))
    src, dst, w = [], [], []
    ny, nx = skel.shape
    for dr, dc in _OFFSETS:
        r2, c2 = rows + dr, cols + dc
        ok = (r2 >= 0) & (r2 < ny) & (c2 >= 0) & (c2 < nx)
        nb = np.full(len(rows), -1)
        nb[ok] = ids[r2[ok], c2[ok]]
        hit = nb >= 0
        src.append(np.nonzero(hit)[0])
        dst.append(nb[hit])
        w.append(np.full(hit.sum(), np.hypot(dr, dc)))
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    w = np.concatenate(w)
    n = len(rows)
    graph = coo_matrix((w, (src, dst)), shape=(n, n)).tocsr()
    degree = np.bincount(src, minlength=n)
    return rows, cols, ids, graph, degree


def _trim_corner_tails(path, rows, cols, dist_px, window: int = 3):
    """Drop end runs where the inscribed radius collapses steeply (corner branches).

    Along a branch into a corner the radius grows at least sin(45 deg) per unit
    length; round caps and gentle tapers stay far below ``CORNER_SLOPE``.
    """
    pr, pc = rows[path], cols[path]
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(pr), np.diff(pc)))])
    hw = dist_px[pr, pc]
    n = len(path)

    def slope(i, j):
        return (hw[j] - hw[i]) / max(abs(s[j] - s[i]), 1e-12)

    lo = 0
    while lo + window < n and slope(lo, lo + window) >= CORNER_SLOPE:
        lo += 1
    hi = n - 1
    while hi - window > lo and slope(hi, hi - window) >= CORNER_SLOPE:
        hi -= 1
    if hi - lo < 3:
        return path
    return path[lo:hi + 1]


def compute_medial_axis(region: ClosedRegion, resolution: float | None = None) -> MedialAxis:
    """Approximate medial axis from a raster distance transform and skeleton.

    The skeleton path between the chosen end points loses its corner tails,
    smoothed with a 5-sample moving average, resampled every two cells,
    recentered on exact cross-sections and smoothed again.  S and G come
    from the region's hints, or from the two skeleton ends with the largest
    geodesic separation.
    """
    res = region.default_resolution() if resolution is None else float(resolution)
    if res <= 0 or res > region.short_side / 20.0 + 1e-12:
        raise ValueError(f"resolution {res} must be in (0, short side / 20]")
    x0, y0, x1, y1 = region.bbox
    ox, oy = x0 - 2 * res, y0 - 2 * res
    nx = int(np.ceil((x1 - x0) / res)) + 5
    ny = int(np.ceil((y1 - y0) / res)) + 5
    rc = np.column_stack([(region.boundary[:, 1] - oy) / res - 0.5,
                          (region.boundary[:, 0] - ox) / res - 0.5])
    mask = polygon2mask((ny, nx), rc)
    if mask.sum() < 9:
        raise RegionTooThin("region covers fewer than 9 raster cells")
    dist_px = ndimage.distance_transform_edt(mask)
    skel = skeletonize(mask)
    rows, cols, ids, graph, degree = _skeleton_graph(skel)
    if len(rows) < 2:
        raise RegionTooThin("skeleton is a single cell")

    world = np.column_stack([ox + (cols + 0.5) * res, oy + (rows + 0.5) * res])
    ends = np.nonzero(degree == 1)[0]
    if region.start_hint is not None or region.goal_hint is not None:
        pool = ends if len(ends) >= 2 else np.arange(len(rows))

        def nearest(h):
            return int(pool[np.argmin(np.hypot(*(world[pool] - h).T))])

        src = nearest(region.start_hint) if region.start_hint is not None else None
        dst = nearest(region.goal_hint) if region.goal_hint is not None else None
        if src is None or dst is None:
            known = src if src is not None else dst
            dd = dijkstra(graph, indices=known)
            dd[~np.isfinite(dd)] = -1
            other = int(pool[np.argmax(dd[pool])])
            src, dst = (known, other) if src is not None else (other, known)
    else:
        if len(ends) < 2:
            raise RegionTooThin("skeleton has no distinct end points")
        dd = dijkstra(graph, indices=ends[:64])
        sub = dd[:, ends]
        sub[~np.isfinite(sub)] = -1
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        src, dst = int(ends[i]), int(ends[j])
    dd, pred = dijkstra(graph, indices=src, return_predecessors=True)
    if not np.isfinite(dd[dst]) or src == dst:
        raise DisconnectedAxis("no skeleton path between start and goal")
    path = [dst]
    while path[-1] != src:
        path.append(int(pred[path[-1]]))
    path = np.array(path[::-1])
    path = _trim_corner_tails(path, rows, cols, dist_px)

    pts = _smooth(world[path])
    pts = _smooth(_resample(pts, AXIS_SPACING * res))
    pts = _smooth(_recenter(pts, region, 2.0 * res))
    return build_axis(pts, region, res)
