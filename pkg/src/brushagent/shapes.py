"""Procedural stroke shapes: swept centerlines with a width profile.

Stand-in for a digitized stroke library.  Each preset is a centerline plus a
half-width profile over arc length; ``generate_shape`` sweeps it into a
closed region with start/goal hints at the two ends of the centerline.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IncompatibleJoint, InvalidRegion, SelfIntersecting
from .geometry import ClosedRegion, is_simple

CAP_POINTS = 12
JOINT_ANGLE_TOL = np.deg2rad(15.0)
JOINT_WIDTH_TOL = 0.15


@dataclass(frozen=True, eq=False)
class ShapeSpec:
    centerline: np.ndarray
    width_profile: Callable[[np.ndarray], np.ndarray]
    preset_id: str
    caps: str = "round"

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.centerline, axis=0).T)))


def trace_path(segments, start=(0.0, 0.0), heading_deg=0.0, spacing=0.05) -> np.ndarray:
    """Polyline from ("line", length) and ("arc", radius, turn_deg) pieces.

    Positive turns are to the left.
    """
    pos = np.asarray(start, dtype=float)
    h = np.deg2rad(heading_deg)
    pts = [pos.copy()]
    for seg in segments:
        if seg[0] == "line":
            length = float(seg[1])
            n = max(int(np.ceil(length / spacing)), 1)
            for k in range(1, n + 1):
                pts.append(pos + (k / n) * length * np.array([np.cos(h), np.sin(h)]))
            pos = pts[-1].copy()
        elif seg[0] == "arc":
            radius, turn = float(seg[1]), np.deg2rad(seg[2])
            sgn = 1.0 if turn > 0 else -1.0
            center = pos + radius * np.array([np.cos(h + sgn * np.pi / 2), np.sin(h + sgn * np.pi / 2)])
            a0 = h - sgn * np.pi / 2
            n = max(int(np.ceil(radius * abs(turn) / spacing)), 2)
            for k in range(1, n + 1):
                a = a0 + turn * k / n
                pts.append(center + radius * np.array([np.cos(a), np.sin(a)]))
            pos = pts[-1].copy()
            h += turn
        else:
            raise ValueError(f"unknown path piece {seg[0]!r}")
    return np.array(pts)


def _arclen(pts: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])


def _tangents(pts: np.ndarray) -> np.ndarray:
    t = np.gradient(pts, _arclen(pts), axis=0)
    return t / np.hypot(t[:, 0], t[:, 1])[:, None]


def _cap(center, r, a0, a1):
    a = np.linspace(a0, a1, CAP_POINTS + 2)[1:-1]
    return center + r * np.column_stack([np.cos(a), np.sin(a)])


def generate_shape(spec: ShapeSpec, samples_per_side: int = 150) -> ClosedRegion:
    """Sweep the width profile along the centerline and close the outline."""
    s_src = _arclen(spec.centerline)
    u = np.linspace(0.0, s_src[-1], samples_per_side)
    c = np.column_stack([np.interp(u, s_src, spec.centerline[:, 0]),
                         np.interp(u, s_src, spec.centerline[:, 1])])
    hw = np.asarray(spec.width_profile(u), dtype=float)
    if np.any(hw <= 0) or not np.all(np.isfinite(hw)):
        raise InvalidRegion(f"{spec.preset_id}: width profile must stay positive")
    t = _tangents(c)
    n = np.column_stack([-t[:, 1], t[:, 0]])
    left = c + hw[:, None] * n
    right = c - hw[:, None] * n
    parts = [right]
    if spec.caps == "round":
        a_end = np.arctan2(-n[-1, 1], -n[-1, 0])
        parts.append(_cap(c[-1], hw[-1], a_end, a_end + np.pi))
    parts.append(left[::-1])
    if spec.caps == "round":
        a_start = np.arctan2(n[0, 1], n[0, 0])
        parts.append(_cap(c[0], hw[0], a_start, a_start + np.pi))
    elif spec.caps != "flat":
        raise ValueError(f"unknown cap style {spec.caps!r}")
    boundary = np.vstack(parts)
    if not is_simple(boundary):
        raise SelfIntersecting(f"{spec.preset_id}: swept outline self-intersects")
    return ClosedRegion(boundary, c[0], c[-1])


def combine_shapes(upper: ShapeSpec, common: ShapeSpec, lower: ShapeSpec) -> ClosedRegion:
    return generate_shape(join_specs([upper, common, lower]))


def join_specs(specs: list[ShapeSpec]) -> ShapeSpec:
    """Chain centerlines end to start (translating each piece) and splice widths."""
    lines = [np.asarray(specs[0].centerline, dtype=float)]
    offsets = [0.0]
    for prev, spec in zip(specs, specs[1:]):
        a = lines[-1]
        b = np.asarray(spec.centerline, dtype=float)
        ta = _tangents(a)[-1]
        tb = _tangents(b)[0]
        angle = abs(np.arctan2(ta[0] * tb[1] - ta[1] * tb[0], ta @ tb))
        if angle > JOINT_ANGLE_TOL:
            raise IncompatibleJoint(
                f"{prev.preset_id}->{spec.preset_id}: tangent mismatch {np.rad2deg(angle):.1f} deg")
        wa = float(prev.width_profile(np.array([prev.length]))[0])
        wb = float(spec.width_profile(np.array([0.0]))[0])
        if abs(wa - wb) > JOINT_WIDTH_TOL * max(wa, wb):
            raise IncompatibleJoint(f"{prev.preset_id}->{spec.preset_id}: width {wa:.3g} vs {wb:.3g}")
        offsets.append(offsets[-1] + prev.length)
        lines.append(b - b[0] + a[-1])
    centerline = np.vstack([lines[0]] + [ln[1:] for ln in lines[1:]])
    bounds = np.array(offsets[1:])

    def width(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        piece = np.searchsorted(bounds, s, side="right")
        out = np.empty_like(s)
        for k, spec in enumerate(specs):
            sel = piece == k
            if np.any(sel):
                out[sel] = spec.width_profile(s[sel] - offsets[k])
        return out

    return ShapeSpec(centerline, width, "+".join(s.preset_id for s in specs), specs[0].caps)


def _const(w):
    return lambda s: np.full(np.shape(s), float(w))


def _linear(w0, w1, length):
    return lambda s: w0 + (w1 - w0) * np.clip(np.asarray(s) / length, 0.0, 1.0)


def _bump(base, amp, length):
    return lambda s: base + amp * np.sin(np.pi * np.clip(np.asarray(s) / length, 0.0, 1.0))


def _spec(name, segments, width_fn, caps="round", heading=0.0):
    line = trace_path(segments, heading_deg=heading)
    length = float(_arclen(line)[-1])
    return ShapeSpec(line, width_fn(length), name, caps)


def _wave():
    x = np.linspace(0.0, 16.0, 321)
    line = np.column_stack([x, 1.0 * np.sin(2 * np.pi * x / 8.0)])
    return ShapeSpec(line, _const(0.8), "wave")


PRESETS: dict[str, Callable[[], ShapeSpec]] = {
    "straight": lambda: _spec("straight", [("line", 12.0)], lambda L: _const(1.0)),
    "taper": lambda: _spec("taper", [("line", 12.0)], lambda L: _linear(1.2, 0.3, L)),
    "flare": lambda: _spec("flare", [("line", 12.0)], lambda L: _linear(0.4, 1.2, L)),
    "c_arc_tight": lambda: _spec("c_arc_tight", [("arc", 4.0, 150.0)], lambda L: _const(0.8)),
    "c_arc_wide": lambda: _spec("c_arc_wide", [("arc", 8.0, 90.0)], lambda L: _const(1.0)),
    "s_curve": lambda: _spec("s_curve", [("arc", 5.0, 90.0), ("arc", 5.0, -90.0)], lambda L: _const(0.8)),
    "hook": lambda: _spec("hook", [("line", 8.0), ("arc", 2.5, 160.0)], lambda L: _const(0.8)),
    "wave": _wave,
    "both_taper": lambda: _spec("both_taper", [("line", 12.0)], lambda L: _bump(0.3, 0.9, L)),
    "crescent": lambda: _spec("crescent", [("arc", 6.0, 120.0)], lambda L: _bump(0.2, 1.0, L)),
    "thick_thin_thick": lambda: _spec("thick_thin_thick", [("line", 12.0)], lambda L: _bump(1.2, -0.7, L)),
    "quarter_ring": lambda: _spec("quarter_ring", [("arc", 5.0, 90.0)], lambda L: _const(1.0), caps="flat",
                                  heading=90.0),
}

# upper / common / lower pieces for shape combination, all joined heading downwards
UPPERS: dict[str, Callable[[], ShapeSpec]] = {
    "u_straight": lambda: _spec("u_straight", [("line", 4.0)], lambda L: _const(0.8), heading=-90.0),
    "u_hook": lambda: _spec("u_hook", [("line", 2.0), ("arc", 2.5, -90.0)], lambda L: _const(0.8)),
    "u_bend": lambda: _spec("u_bend", [("arc", 5.0, -45.0)], lambda L: _linear(0.5, 0.8, L), heading=-45.0),
}
COMMONS: dict[str, Callable[[], ShapeSpec]] = {
    "c_straight": lambda: _spec("c_straight", [("line", 5.0)], lambda L: _const(0.8), heading=-90.0),
}
LOWERS: dict[str, Callable[[], ShapeSpec]] = {
    "l_straight": lambda: _spec("l_straight", [("line", 4.0)], lambda L: _linear(0.8, 0.4, L), heading=-90.0),
    "l_curve_left": lambda: _spec("l_curve_left", [("arc", 4.0, 60.0)], lambda L: _linear(0.8, 0.4, L),
                                  heading=-90.0),
    "l_curve_right": lambda: _spec("l_curve_right", [("arc", 4.0, -60.0)], lambda L: _linear(0.8, 0.4, L),
                                   heading=-90.0),
}


def preset(name: str) -> ShapeSpec:
    for table in (PRESETS, UPPERS, COMMONS, LOWERS):
        if name in table:
            return table[name]()
    raise KeyError(f"unknown preset {name!r}")


def preset_region(name: str) -> ClosedRegion:
    return generate_shape(preset(name))


def combinations(uppers, commons, lowers):
    """All upper x common x lower joins, as (name, region) pairs."""
    out = []
    for u, c, l in itertools.product(uppers, commons, lowers):
        spec = join_specs([preset(u), preset(c), preset(l)])
        out.append((spec.preset_id, generate_shape(spec)))
    return out
