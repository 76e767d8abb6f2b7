"""Render DP(K) strokes for every preset into an output directory."""

import argparse
from pathlib import Path

from brushagent.dp import dp_plan
from brushagent.render import RenderOptions, render_stroke
from brushagent.shapes import PRESETS
from brushagent.training import load_shapes


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="gallery")
    ap.add_argument("-K", type=int, default=8)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ctx in load_shapes(sorted(PRESETS)):
        res = dp_plan(ctx.region, ctx.axis, args.K, grid=ctx.grid)
        img = render_stroke(res.footprints, RenderOptions(), ctx.region)
        img.save_svg(out / f"{ctx.name}.svg")
        img.save_pgm(out / f"{ctx.name}.pgm")
        print(f"{ctx.name}: {len(res.footprints)} footprints, return {res.ret:.2f}")


if __name__ == "__main__":
    main()
