"""Vector (SVG subset) and raster (binary PGM) output of footprint trajectories."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .brush import Footprint, wrap_angle
from .errors import EmptyTrajectory
from .geometry import ClosedRegion, MedialAxis

INTERP_SPACING = 0.25
SVG_TAGS = {"svg", "g", "path", "circle", "polygon"}
SVG_NS = "http://www.w3.org/2000/svg"


@dataclass(frozen=True)
class RenderOptions:
    """Canvas width in pixels; height follows the aspect ratio unless given.

    ``bounds`` (x0, y0, x1, y1) fixes the world window; by default it is the
    region's bounding box, or the trajectory's when no region is known.
    ``end_ink`` switches on the linear ink fade along the stroke.
    """

    width: int = 512
    height: int | None = None
    pad: int = 8
    bounds: tuple[float, float, float, float] | None = None
    end_ink: float | None = None
    show_axis: bool = False

    def __post_init__(self):
        if self.width < 2 * self.pad + 2:
            raise ValueError("canvas too narrow for its padding")
        if self.end_ink is not None and not 0.0 <= self.end_ink <= 1.0:
            raise ValueError("end_ink must lie in [0, 1]")


@dataclass(frozen=True)
class Viewport:
    x0: float
    y0: float
    scale: float
    width: int
    height: int
    pad: int

    @classmethod
    def fit(cls, bounds, opts: RenderOptions) -> "Viewport":
        x0, y0, x1, y1 = bounds
        span_x = max(x1 - x0, 1e-9)
        span_y = max(y1 - y0, 1e-9)
        inner_w = opts.width - 2 * opts.pad
        if opts.height is None:
            scale = inner_w / span_x
            height = int(math.ceil(span_y * scale)) + 2 * opts.pad
        else:
            scale = min(inner_w / span_x, (opts.height - 2 * opts.pad) / span_y)
            height = opts.height
        return cls(x0, y0, scale, opts.width, height, opts.pad)

    def to_pixel(self, pts) -> np.ndarray:
        """World (x, y) to image (column, row) coordinates, y pointing down."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        col = self.pad + (pts[:, 0] - self.x0) * self.scale
        row = self.height - self.pad - (pts[:, 1] - self.y0) * self.scale
        return np.column_stack([col, row])

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """World coordinates of every pixel center, each shaped (height, width)."""
        cols = np.arange(self.width) + 0.5
        rows = np.arange(self.height) + 0.5
        X = self.x0 + (cols[None, :] - self.pad) / self.scale
        Y = self.y0 + (self.height - self.pad - rows[:, None]) / self.scale
        return np.broadcast_to(X, (self.height, self.width)), np.broadcast_to(Y, (self.height, self.width))


@dataclass(eq=False)
class StrokeImage:
    svg: str
    raster: np.ndarray | None
    viewport: Viewport

    def pgm_bytes(self) -> bytes:
        if self.raster is None:
            raise ValueError("image has no raster part")
        h, w = self.raster.shape
        return b"P5\n%d %d\n255\n" % (w, h) + self.raster.astype(np.uint8).tobytes()

    def save_svg(self, path) -> None:
        Path(path).write_text(self.svg)

    def save_pgm(self, path) -> None:
        Path(path).write_bytes(self.pgm_bytes())


def read_pgm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or parts[2] != b"255":
        raise ValueError("not an 8-bit binary PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def lerp_footprint(a: Footprint, b: Footprint, t: float) -> Footprint:
    """Blend center and radius linearly, the tip in polar form around the center.

    Interpolating the tip's heading and reach keeps the tip outside the disc,
    which a straight blend of tip coordinates does not guarantee.
    """
    cx = a.center[0] + t * (b.center[0] - a.center[0])
    cy = a.center[1] + t * (b.center[1] - a.center[1])
    r = a.radius + t * (b.radius - a.radius)
    la = math.dist(a.center, a.tip)
    lb = math.dist(b.center, b.tip)
    reach = max(la + t * (lb - la), r)
    h = a.heading + t * wrap_angle(b.heading - a.heading)
    return Footprint((cx, cy), r, (cx + reach * math.cos(h), cy + reach * math.sin(h)))


def interpolate(trajectory: list[Footprint], spacing: float = INTERP_SPACING) -> list[Footprint]:
    """Insert ceil(gap / (spacing * r)) footprints between consecutive ones."""
    if not trajectory:
        raise EmptyTrajectory("trajectory is empty")
    out = [trajectory[0]]
    for a, b in zip(trajectory, trajectory[1:]):
        gap = math.dist(a.center, b.center)
        n = int(math.ceil(gap / (spacing * min(a.radius, b.radius))))
        out.extend(lerp_footprint(a, b, k / (n + 1)) for k in range(1, n + 1))
        out.append(b)
    return out


def ink_levels(footprints: list[Footprint], end_ink: float | None) -> np.ndarray:
    if end_ink is None or len(footprints) == 1:
        return np.ones(len(footprints))
    c = np.array([fp.center for fp in footprints])
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(c, axis=0).T))])
    if s[-1] == 0:
        return np.ones(len(footprints))
    return 1.0 - (1.0 - end_ink) * s / s[-1]


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _points(px: np.ndarray) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in px)


def _path(px: np.ndarray, closed: bool) -> str:
    cmds = [f"M{_fmt(px[0, 0])} {_fmt(px[0, 1])}"]
    cmds += [f"L{_fmt(x)} {_fmt(y)}" for x, y in px[1:]]
    return " ".join(cmds) + (" Z" if closed else "")


def _svg_document(vp: Viewport, body: list[str]) -> str:
    head = (f'<svg xmlns="{SVG_NS}" version="1.1" width="{vp.width}" height="{vp.height}" '
            f'viewBox="0 0 {vp.width} {vp.height}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _trajectory_bounds(footprints: list[Footprint]) -> tuple[float, float, float, float]:
    xs, ys = [], []
    for fp in footprints:
        xs += [fp.center[0] - fp.radius, fp.center[0] + fp.radius, fp.tip[0]]
        ys += [fp.center[1] - fp.radius, fp.center[1] + fp.radius, fp.tip[1]]
    return min(xs), min(ys), max(xs), max(ys)


def rasterize(footprints: list[Footprint], inks: np.ndarray, vp: Viewport) -> np.ndarray:
    """8-bit raster, white background (255) and black ink (0); overlaps keep the darkest ink."""
    X, Y = vp.pixel_centers()
    ink = np.zeros((vp.height, vp.width))
    for fp, level in zip(footprints, inks):
        lo = vp.to_pixel([(min(fp.center[0] - fp.radius, fp.tip[0]), max(fp.center[1] + fp.radius, fp.tip[1]))])[0]
        hi = vp.to_pixel([(max(fp.center[0] + fp.radius, fp.tip[0]), min(fp.center[1] - fp.radius, fp.tip[1]))])[0]
        c0, r0 = max(int(math.floor(lo[0])), 0), max(int(math.floor(lo[1])), 0)
        c1, r1 = min(int(math.ceil(hi[0])), vp.width), min(int(math.ceil(hi[1])), vp.height)
        if c1 <= c0 or r1 <= r0:
            continue
        hit = fp.contains(X[r0:r1, c0:c1], Y[r0:r1, c0:c1])
        window = ink[r0:r1, c0:c1]
        window[hit] = np.maximum(window[hit], level)
    return np.round(255.0 * (1.0 - ink)).astype(np.uint8)


def render_stroke(trajectory: list[Footprint], opts: RenderOptions = RenderOptions(),
                  region: ClosedRegion | None = None, axis: MedialAxis | None = None) -> StrokeImage:
    """Interpolate the footprints and fill their union; optionally outline the region."""
    fps = interpolate(trajectory)
    inks = ink_levels(fps, opts.end_ink)
    if opts.bounds is not None:
        bounds = opts.bounds
    elif region is not None:
        bounds = region.bbox
    else:
        bounds = _trajectory_bounds(fps)
    vp = Viewport.fit(bounds, opts)
    body = []
    if region is not None:
        body.append(f'<polygon points="{_points(vp.to_pixel(region.boundary))}" fill="none" '
                    f'stroke="#808080" stroke-width="1"/>')
    body.append('<g fill="#000000" stroke="none">')
    for fp, level in zip(fps, inks):
        body.append(f'<path d="{_path(vp.to_pixel(fp.outline()), True)}" fill-opacity="{_fmt(level)}"/>')
    body.append("</g>")
    if opts.show_axis and axis is not None:
        body.append(f'<path d="{_path(vp.to_pixel(axis.points), False)}" fill="none" stroke="#3060c0" '
                    f'stroke-width="1"/>')
    return StrokeImage(_svg_document(vp, body), rasterize(fps, inks, vp), vp)


@dataclass(frozen=True)
class StepRecord:
    reward: float
    blocked: bool


def _reward_color(value: float, top: float) -> str:
    t = 0.0 if top <= 0 else min(max(value / top, 0.0), 1.0)
    r = int(round(200 * (1 - t)))
    g = int(round(200 * (1 - t) + 120 * t))
    b = int(round(200 * (1 - t) + 60 * t))
    return f"#{r:02x}{g:02x}{b:02x}"


def render_debug(trajectory: list[Footprint], region: ClosedRegion, axis: MedialAxis,
                 trace: list[StepRecord], opts: RenderOptions = RenderOptions()) -> StrokeImage:
    """Boundary, axis and per-step footprint outlines colored by reward.

    ``trace[t]`` describes the move into ``trajectory[t + 1]``.  Blocked steps
    get a red outline and a red marker at the center.
    """
    vp = Viewport.fit(opts.bounds or region.bbox, opts)
    body = [f'<polygon points="{_points(vp.to_pixel(region.boundary))}" fill="none" stroke="#000000" '
            f'stroke-width="1"/>',
            f'<path d="{_path(vp.to_pixel(axis.points), False)}" fill="none" stroke="#3060c0" '
            f'stroke-width="1"/>']
    if trace:
        top = max(rec.reward for rec in trace)
        body.append('<g stroke-width="1">')
        body.append(f'<path d="{_path(vp.to_pixel(trajectory[0].outline()), True)}" fill="none" stroke="#000000"/>')
        for fp, rec in zip(trajectory[1:], trace):
            px = vp.to_pixel(fp.outline())
            if rec.blocked:
                c = vp.to_pixel([fp.center])[0]
                body.append(f'<path d="{_path(px, True)}" fill="none" stroke="#d00000"/>')
                body.append(f'<circle cx="{_fmt(c[0])}" cy="{_fmt(c[1])}" r="3" fill="#d00000"/>')
            else:
                color = _reward_color(rec.reward, top)
                body.append(f'<path d="{_path(px, True)}" fill="{color}" fill-opacity="0.4" stroke="{color}"/>')
        body.append("</g>")
    return StrokeImage(_svg_document(vp, body), None, vp)


def render_learning_curve(returns, width: int = 480, height: int = 320) -> str:
    """Average return against iteration as an SVG line chart with axes."""
    returns = np.asarray(returns, dtype=float)
    pad = 32
    n = len(returns)
    lo = min(0.0, float(returns.min())) if n else 0.0
    hi = float(returns.max()) if n else 1.0
    hi = hi if hi > lo else lo + 1.0
    xs = pad + (np.arange(n) / max(n - 1, 1)) * (width - 2 * pad)
    ys = height - pad - (returns - lo) / (hi - lo) * (height - 2 * pad)
    vp = Viewport(0.0, 0.0, 1.0, width, height, pad)
    body = [f'<path d="M{pad} {pad} L{pad} {height - pad} L{width - pad} {height - pad}" fill="none" '
            f'stroke="#000000" stroke-width="1"/>']
    if n:
        body.append(f'<path d="{_path(np.column_stack([xs, ys]), False)}" fill="none" stroke="#3060c0" '
                    f'stroke-width="2"/>')
    return _svg_document(vp, body)


def validate_svg(text: str) -> ET.Element:
    """Parse and check the output grammar: only svg, g, path, circle and polygon."""
    root = ET.fromstring(text)
    for el in root.iter():
        tag = el.tag.split("}")[-1]
        if tag not in SVG_TAGS:
            raise ValueError(f"element <{tag}> outside the supported subset")
        if tag == "circle":
            for key in ("cx", "cy", "r"):
                float(el.attrib[key])
        elif tag == "polygon":
            pts = el.attrib["points"].split()
            if len(pts) < 3:
                raise ValueError("polygon needs at least three points")
            for p in pts:
                x, y = p.split(",")
                float(x), float(y)
        elif tag == "path":
            if not el.attrib["d"].startswith("M"):
                raise ValueError("path data must start with a move")
    if root.tag.split("}")[-1] != "svg":
        raise ValueError("root element must be <svg>")
    return root
