import math
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brushagent.brush import Footprint, fit_posture
from brushagent.errors import EmptyTrajectory
from brushagent.geometry import points_in_polygon
from brushagent.render import (RenderOptions, StepRecord, interpolate, ink_levels, lerp_footprint, read_pgm,
                               render_debug, render_learning_curve, render_stroke, validate_svg)

GOLDEN = Path(__file__).parent / "golden"


def axis_trajectory(ctx, stride=0.5):
    ax = ctx.axis
    out, s = [], 0.0
    while s <= ax.total_length:
        out.append(fit_posture(ctx.region, ax, ax.point_at(s)))
        s += stride * ax.halfwidth_at(s)
    return out


def pixel_stats(img, region):
    X, Y = img.viewport.pixel_centers()
    inside = points_in_polygon(np.column_stack([X.ravel(), Y.ravel()]), region.boundary).reshape(X.shape)
    ink = img.raster < 255
    return (ink & inside).sum() / inside.sum(), (ink & ~inside).sum() / ink.sum()


footprints = st.builds(
    lambda cx, cy, r, reach, h: Footprint((cx, cy), r, (cx + reach * r * math.cos(h), cy + reach * r * math.sin(h))),
    st.floats(-5, 5), st.floats(-5, 5), st.floats(0.05, 2), st.floats(1.0, 4.0), st.floats(-math.pi, math.pi))


class TestInterpolation:
    def test_identical_pair(self):
        fp = Footprint((0.0, 0.0), 1.0, (0.0, -1.0))
        assert interpolate([fp, fp]) == [fp, fp]

    def test_count(self):
        a = Footprint((0.0, 0.0), 1.0, (0.0, -1.0))
        b = Footprint((1.1, 0.0), 1.0, (1.1, -1.0))
        assert len(interpolate([a, b])) == 2 + math.ceil(1.1 / 0.25)

    @given(footprints, footprints, st.floats(0, 1))
    def test_invariant_kept(self, a, b, t):
        fp = lerp_footprint(a, b, t)
        assert math.dist(fp.center, fp.tip) >= fp.radius * (1 - 1e-9)

    def test_empty(self):
        with pytest.raises(EmptyTrajectory):
            render_stroke([])

    def test_fade(self):
        fps = [Footprint((x, 0.0), 1.0, (x, -1.0)) for x in range(5)]
        ink = ink_levels(fps, 0.2)
        assert ink[0] == 1.0 and ink[-1] == pytest.approx(0.2)
        assert np.all(np.diff(ink) < 0)


class TestStroke:
    def test_single_footprint(self):
        img = render_stroke([Footprint((0.0, 0.0), 1.0, (2.0, 0.0))])
        root = validate_svg(img.svg)
        assert sum(el.tag.endswith("path") for el in root.iter()) == 1
        assert img.raster.min() == 0

    def test_straight_coverage(self, contexts):
        ctx = contexts["straight"]
        img = render_stroke(axis_trajectory(ctx), RenderOptions(), ctx.region)
        covered, outside = pixel_stats(img, ctx.region)
        assert covered >= 0.90
        assert outside <= 0.05

    def test_canvas_size(self, contexts):
        ctx = contexts["straight"]
        img = render_stroke(axis_trajectory(ctx), RenderOptions(width=300, height=120), ctx.region)
        assert img.raster.shape == (120, 300)
        assert read_pgm(img.pgm_bytes()).shape == (120, 300)
        np.testing.assert_array_equal(read_pgm(img.pgm_bytes()), img.raster)

    def test_deterministic(self, contexts):
        ctx = contexts["s_curve"]
        traj = axis_trajectory(ctx)
        a = render_stroke(traj, RenderOptions(end_ink=0.3), ctx.region)
        b = render_stroke(list(traj), RenderOptions(end_ink=0.3), ctx.region)
        assert a.svg == b.svg and a.pgm_bytes() == b.pgm_bytes()

    def test_golden(self):
        traj = [Footprint((0.0, 0.0), 1.0, (0.0, -1.0)), Footprint((0.6, 0.1), 0.9, (0.6, -1.0)),
                Footprint((1.2, 0.3), 0.8, (1.3, -0.9))]
        img = render_stroke(traj, RenderOptions(width=64, end_ink=0.4))
        files = {"stroke.svg": img.svg.encode(), "stroke.pgm": img.pgm_bytes()}
        for name, data in files.items():
            path = GOLDEN / name
            if os.environ.get("UPDATE_GOLDEN"):
                path.write_bytes(data)
            assert path.read_bytes() == data, name


class TestDebug:
    def test_empty_trace(self, contexts):
        ctx = contexts["straight"]
        root = validate_svg(render_debug([], ctx.region, ctx.axis, []).svg)
        tags = [el.tag.split("}")[-1] for el in root.iter()]
        assert tags == ["svg", "polygon", "path"]

    def test_blocked_marked(self, contexts):
        ctx = contexts["straight"]
        traj = axis_trajectory(ctx)[:4]
        trace = [StepRecord(2.0, False), StepRecord(0.0, True), StepRecord(1.0, False)]
        svg = render_debug(traj, ctx.region, ctx.axis, trace).svg
        validate_svg(svg)
        assert svg.count("<circle") == 1
        assert svg.count('stroke="#d00000"') == 1


def test_learning_curve_parses():
    validate_svg(render_learning_curve([1.0, 3.0, 2.5, 8.0]))
    validate_svg(render_learning_curve([]))


def test_validator_rejects_text():
    with pytest.raises(ValueError):
        validate_svg('<svg xmlns="http://www.w3.org/2000/svg"><text>hi</text></svg>')
