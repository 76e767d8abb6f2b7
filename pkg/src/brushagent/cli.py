"""Command-line entry points: train, draw, evaluate, compare, gen-shapes.

Exit codes: 0 success, 2 configuration error, 3 geometry or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .dp import compare_rl_dp, write_comparison
from .errors import EmptyTrajectory, GeometryError
from .mdp import RewardParams
from .policy import PolicyParams, load_checkpoint, save_checkpoint
from .render import RenderOptions, StepRecord, render_debug, render_learning_curve, render_stroke
from .shapes import COMMONS, LOWERS, PRESETS, UPPERS, combinations, preset_region
from .training import TrainConfig, load_shapes, rollout_mean, train

log = logging.getLogger("brushagent")

EXIT_OK, EXIT_CONFIG, EXIT_GEOMETRY = 0, 2, 3
TRACE_COLUMNS = ["iteration", "avg_return", "sigma", "wall_ms"]


class ConfigError(Exception):
    pass


@dataclass
class RenderConfig:
    width: int = 512
    end_ink: float | None = None
    show_axis: bool = False

    def options(self, **kw) -> RenderOptions:
        return RenderOptions(width=self.width, end_ink=self.end_ink, show_axis=self.show_axis, **kw)


@dataclass
class RunConfig:
    """Every setting of every command; JSON keys mirror the field names."""

    seed: int = 0
    out: str = "runs/default"
    threads: int = 1
    episodes: int = 300
    steps: int = 32
    iterations: int = 50
    shapes: list[str] = field(default_factory=lambda: ["straight", "c_arc_wide", "s_curve"])
    shape: str | None = None
    checkpoint: str | None = None
    candidates: list[int] = field(default_factory=lambda: [2, 4, 8, 16, 32])
    max_steps: int = 500
    beta: float = 0.5
    eta: float = 0.05
    resolution: float | None = None
    record_wall_time: bool = False
    reward: RewardParams = field(default_factory=RewardParams)
    render: RenderConfig = field(default_factory=RenderConfig)
    presets: list[str] = field(default_factory=lambda: list(PRESETS))
    uppers: list[str] = field(default_factory=lambda: list(UPPERS))
    commons: list[str] = field(default_factory=lambda: list(COMMONS))
    lowers: list[str] = field(default_factory=lambda: list(LOWERS))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        try:
            if "reward" in data:
                data["reward"] = RewardParams.from_dict(data["reward"])
            if "render" in data:
                extra = set(data["render"]) - {f.name for f in fields(RenderConfig)}
                if extra:
                    raise ConfigError(f"unknown render keys: {sorted(extra)}")
                data["render"] = RenderConfig(**data["render"])
            cfg = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = asdict(self)
        out["reward"] = self.reward.to_dict()
        return out

    def validate(self) -> None:
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if any(k < 2 for k in self.candidates) or not self.candidates:
            raise ConfigError("candidate counts must be >= 2")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        for name, table in (("presets", PRESETS), ("uppers", UPPERS), ("commons", COMMONS), ("lowers", LOWERS)):
            bad = [p for p in getattr(self, name) if p not in table]
            if bad:
                raise ConfigError(f"unknown {name}: {bad}")
        self.train_config()

    def train_config(self) -> TrainConfig:
        shapes = [self.shape] if self.shape else list(self.shapes)
        try:
            return TrainConfig(episodes=self.episodes, steps=self.steps, iterations=self.iterations,
                               master_seed=self.seed, shapes=shapes, reward=self.reward, beta=self.beta,
                               eta=self.eta, resolution=self.resolution, threads=self.threads)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _load_contexts(cfg: RunConfig, refs):
    try:
        return load_shapes(refs, cfg.resolution)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed shape file: {exc}") from exc


def _load_theta(cfg: RunConfig) -> PolicyParams:
    if cfg.checkpoint is None:
        return PolicyParams.initial()
    try:
        return load_checkpoint(cfg.checkpoint)[0]
    except FileNotFoundError as exc:
        raise ConfigError(f"checkpoint not found: {cfg.checkpoint}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")
    return out


def cmd_train(cfg: RunConfig) -> int:
    tc = cfg.train_config()
    contexts = _load_contexts(cfg, tc.shapes)
    out = _out_dir(cfg)
    trace, theta = train(tc, contexts)
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace:
            # wall time is left at 0 unless asked for, so that reruns are byte-identical
            ms = row.wall_ms if cfg.record_wall_time else 0.0
            w.writerow([row.iteration, repr(row.avg_return), repr(float(row.theta[-1])), f"{ms:.3f}"])
    save_checkpoint(out / "checkpoint.json", theta, len(trace))
    best = max(trace, key=lambda r: r.avg_return)
    save_checkpoint(out / "checkpoint_best.json", PolicyParams.from_vector(best.theta), best.iteration)
    (out / "learning_curve.svg").write_text(render_learning_curve([r.avg_return for r in trace]))
    log.info("final avg_return %.4f (best %.4f at iteration %d)", trace[-1].avg_return, best.avg_return,
             best.iteration)
    return EXIT_OK


def cmd_draw(cfg: RunConfig) -> int:
    ref = cfg.shape or cfg.shapes[0]
    ctx = _load_contexts(cfg, [ref])[0]
    theta = _load_theta(cfg)
    out = _out_dir(cfg)
    ro = rollout_mean(ctx, theta, cfg.max_steps, cfg.reward, cfg.beta, cfg.eta)
    img = render_stroke(ro.footprints, cfg.render.options(), ctx.region, ctx.axis)
    img.save_svg(out / "stroke.svg")
    img.save_pgm(out / "stroke.pgm")
    records = [StepRecord(r, b) for r, b in zip(ro.rewards, ro.blocked)]
    render_debug(ro.footprints, ctx.region, ctx.axis, records, cfg.render.options()).save_svg(out / "debug.svg")
    summary = {"shape": ref, "return": ro.ret, "steps": len(ro.rewards), "reached_goal": ro.reached_goal,
               "blocked_steps": int(sum(ro.blocked))}
    (out / "rollout.json").write_text(json.dumps(summary, indent=1) + "\n")
    log.info("draw %s: return %.4f over %d steps", ref, ro.ret, len(ro.rewards))
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    refs = [cfg.shape] if cfg.shape else cfg.shapes
    contexts = _load_contexts(cfg, refs)
    theta = _load_theta(cfg)
    out = _out_dir(cfg)
    with open(out / "evaluate.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["shape", "return", "steps", "reached_goal", "blocked_steps"])
        for ctx in contexts:
            ro = rollout_mean(ctx, theta, cfg.max_steps, cfg.reward, cfg.beta, cfg.eta)
            w.writerow([ctx.name, repr(ro.ret), len(ro.rewards), int(ro.reached_goal), int(sum(ro.blocked))])
            log.info("evaluate %s: return %.4f", ctx.name, ro.ret)
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    refs = [cfg.shape] if cfg.shape else cfg.shapes
    contexts = _load_contexts(cfg, refs)
    theta = _load_theta(cfg)
    out = _out_dir(cfg)
    rows = compare_rl_dp(contexts, theta, cfg.candidates, cfg.reward, cfg.beta, cfg.eta, cfg.max_steps)
    write_comparison(rows, out / "compare.csv")
    for r in rows:
        log.info("%s %s K=%s return %.4f time %.1f ms", r["shape"], r["method"], r["candidates"], r["return"],
                 r["time_ms"])
    return EXIT_OK


def cmd_gen_shapes(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    (out / "presets").mkdir(exist_ok=True)
    (out / "combined").mkdir(exist_ok=True)
    for name in cfg.presets:
        preset_region(name).save(out / "presets" / f"{name}.json")
    combos = combinations(cfg.uppers, cfg.commons, cfg.lowers)
    for name, region in combos:
        region.save(out / "combined" / f"{name}.json")
    log.info("wrote %d presets and %d combined shapes", len(cfg.presets), len(combos))
    return EXIT_OK


COMMANDS = {"train": cmd_train, "draw": cmd_draw, "evaluate": cmd_evaluate, "compare": cmd_compare,
            "gen-shapes": cmd_gen_shapes}


def _candidate_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brushagent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--threads", type=int)
        p.add_argument("--episodes", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--iterations", type=int)
        p.add_argument("--candidates", type=_candidate_list, help="comma-separated, e.g. 2,4,8")
        p.add_argument("--shape", help="preset name or shape JSON path")
        p.add_argument("--checkpoint")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("seed", "out", "threads", "episodes", "steps", "iterations", "candidates", "shape", "checkpoint"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeometryError, EmptyTrajectory, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
