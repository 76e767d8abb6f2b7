"""Brush footprints, the movement action, automatic posture fitting and coverage."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from skimage.draw import polygon2mask

from .errors import OutsideRegion, SectionDegenerate
from .geometry import ClosedRegion, MedialAxis, cross_section, nearest_axis_point

BETA = 0.5
ETA = 0.05
R_MIN_CELLS = 2.0


def wrap_angle(x: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.pi - (math.pi - x) % (2.0 * math.pi)


@dataclass(frozen=True)
class Footprint:
    """Tip ``Q`` plus tuft disc (center ``C``, radius ``r``)."""

    center: tuple[float, float]
    radius: float
    tip: tuple[float, float]

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"footprint radius must be positive, got {self.radius}")
        if math.dist(self.center, self.tip) < self.radius * (1 - 1e-9):
            raise ValueError("footprint tip lies inside the tuft disc")

    @property
    def heading(self) -> float:
        return math.atan2(self.tip[1] - self.center[1], self.tip[0] - self.center[0])

    def translated(self, dx: float, dy: float) -> "Footprint":
        return Footprint((self.center[0] + dx, self.center[1] + dy), self.radius,
                         (self.tip[0] + dx, self.tip[1] + dy))

    def contains(self, x, y) -> np.ndarray:
        """Vectorized membership test for the teardrop (disc plus tangent triangle)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cx, cy = self.center
        qx, qy = self.tip
        r = self.radius
        inside = (x - cx) ** 2 + (y - cy) ** 2 <= r * r
        length = math.hypot(qx - cx, qy - cy)
        if length <= r * (1 + 1e-12):
            return inside
        half = math.acos(r / length)
        h = self.heading
        t1 = (cx + r * math.cos(h + half), cy + r * math.sin(h + half))
        t2 = (cx + r * math.cos(h - half), cy + r * math.sin(h - half))
        return inside | _in_triangle(x, y, (qx, qy), t1, t2)

    def outline(self, n: int = 48) -> np.ndarray:
        """Closed teardrop outline polygon (counter-clockwise)."""
        cx, cy = self.center
        r = self.radius
        length = math.dist(self.center, self.tip)
        if length <= r * (1 + 1e-12):
            a = np.linspace(0, 2 * np.pi, n, endpoint=False)
            return np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)])
        half = math.acos(r / length)
        h = self.heading
        a = np.linspace(h + half, h - half + 2 * np.pi, n)
        arc = np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)])
        return np.vstack([arc, [self.tip]])


def _in_triangle(x, y, a, b, c):
    def side(p, q):
        return (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])

    s1, s2, s3 = side(a, b), side(b, c), side(c, a)
    neg = (s1 < 0) | (s2 < 0) | (s3 < 0)
    pos = (s1 > 0) | (s2 > 0) | (s3 > 0)
    return ~(neg & pos)


@dataclass(frozen=True)
class BrushState:
    footprint: Footprint
    velocity_dir: float
    step_index: int = 0


class RasterGrid:
    """Cell grid over a region's bounding box; cell size = geometry resolution."""

    def __init__(self, region: ClosedRegion, resolution: float, margin: int = 2):
        x0, y0, x1, y1 = region.bbox
        self.resolution = float(resolution)
        self.origin = (x0 - margin * resolution, y0 - margin * resolution)
        self.nx = int(math.ceil((x1 - x0) / resolution)) + 2 * margin + 1
        self.ny = int(math.ceil((y1 - y0) / resolution)) + 2 * margin + 1
        rc = np.column_stack([(region.boundary[:, 1] - self.origin[1]) / resolution - 0.5,
                              (region.boundary[:, 0] - self.origin[0]) / resolution - 0.5])
        self.inside = polygon2mask((self.ny, self.nx), rc)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ny, self.nx

    def footprint_cells(self, fp: Footprint) -> np.ndarray:
        """Flat indices of in-region cells whose centers fall inside the footprint."""
        res = self.resolution
        ox, oy = self.origin
        cx, cy = fp.center
        qx, qy = fp.tip
        r = fp.radius
        lo_x, hi_x = min(cx - r, qx), max(cx + r, qx)
        lo_y, hi_y = min(cy - r, qy), max(cy + r, qy)
        j0 = max(int(math.floor((lo_x - ox) / res - 0.5)), 0)
        j1 = min(int(math.ceil((hi_x - ox) / res - 0.5)), self.nx - 1)
        i0 = max(int(math.floor((lo_y - oy) / res - 0.5)), 0)
        i1 = min(int(math.ceil((hi_y - oy) / res - 0.5)), self.ny - 1)
        if j1 < j0 or i1 < i0:
            return np.empty(0, dtype=np.int64)
        jj = np.arange(j0, j1 + 1)
        ii = np.arange(i0, i1 + 1)
        X = ox + (jj[None, :] + 0.5) * res
        Y = oy + (ii[:, None] + 0.5) * res
        hit = fp.contains(X, Y) & self.inside[i0:i1 + 1, j0:j1 + 1]
        ri, rj = np.nonzero(hit)
        return (ri + i0) * self.nx + (rj + j0)


class CoverageMask:
    """Per-episode record of covered cells; cells only ever flip to covered."""

    def __init__(self, grid: RasterGrid):
        self.grid = grid
        self.covered = np.zeros(grid.ny * grid.nx, dtype=bool)

    def copy(self) -> "CoverageMask":
        out = CoverageMask.__new__(CoverageMask)
        out.grid = self.grid
        out.covered = self.covered.copy()
        return out

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.covered))

    def new_fraction(self, fp: Footprint, cells: np.ndarray | None = None) -> float:
        cells = self.grid.footprint_cells(fp) if cells is None else cells
        if len(cells) == 0:
            return 0.0
        return float(np.count_nonzero(~self.covered[cells])) / len(cells)

    def stamp(self, fp: Footprint, eta: float = ETA) -> int:
        """Mark the footprint covered and return the coverage label l."""
        cells = self.grid.footprint_cells(fp)
        frac = self.new_fraction(fp, cells)
        self.covered[cells] = True
        return int(len(cells) > 0 and frac >= eta)


def fit_posture(region: ClosedRegion, axis: MedialAxis, center, r_min: float | None = None) -> Footprint | None:
    """Tuft disc tangent to the nearer wall, tip on the farther wall.

    Returns None when the cross-section is degenerate or the radius would
    drop below ``r_min``; callers then keep the previous posture.
    """
    c = np.asarray(center, dtype=float)
    if not region.contains(c):
        raise OutsideRegion(f"center {c.tolist()} is outside the region")
    r_min = R_MIN_CELLS * axis.resolution if r_min is None else r_min
    proj = nearest_axis_point(axis, c)
    try:
        sec = cross_section(region, axis, proj.arclen, through=c)
    except SectionDegenerate:
        return None
    dl = float(np.hypot(*(sec.left - c)))
    dr = float(np.hypot(*(sec.right - c)))
    if dl > dr:
        r, q = dr, sec.left
    else:
        # ties put the tip on the right wall
        r, q = dl, sec.right
    if r < r_min:
        return None
    return Footprint((float(c[0]), float(c[1])), r, (float(q[0]), float(q[1])))


def initial_state(region: ClosedRegion, axis: MedialAxis) -> BrushState:
    """Footprint centered on the first axis sample, moving towards G."""
    fp = fit_posture(region, axis, axis.start)
    if fp is None:
        raise SectionDegenerate("cannot fit a footprint at the start point")
    t = axis.tangent[0]
    return BrushState(fp, math.atan2(t[1], t[0]), 0)


def step(region: ClosedRegion, axis: MedialAxis, state: BrushState, a: float, coverage: CoverageMask,
         beta: float = BETA, eta: float = ETA) -> tuple[BrushState, bool, int]:
    """Move by ``beta * r`` at angle ``a`` relative to the axis tangent at the nearest point.

    Returns ``(next_state, blocked, l)``.  A move whose new center leaves the
    region is blocked and leaves the footprint untouched.
    """
    fp = state.footprint
    proj = nearest_axis_point(axis, fp.center)
    direction = math.atan2(proj.tangent[1], proj.tangent[0]) + a
    length = beta * fp.radius
    dx, dy = length * math.cos(direction), length * math.sin(direction)
    new_center = (fp.center[0] + dx, fp.center[1] + dy)
    if not region.contains(new_center) or region.distance(new_center) <= 0.0:
        return replace(state, step_index=state.step_index + 1), True, 0
    new_fp = fit_posture(region, axis, new_center)
    if new_fp is None:
        new_fp = fp.translated(dx, dy)
    nxt = BrushState(new_fp, wrap_angle(direction), state.step_index + 1)
    return nxt, False, coverage.stamp(new_fp, eta)
