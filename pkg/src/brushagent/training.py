"""Episode rollouts, the episode-chaining rules and the policy-gradient training loop."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .brush import BETA, ETA, BrushState, CoverageMask, Footprint, RasterGrid, initial_state, step
from .geometry import ClosedRegion, MedialAxis, compute_medial_axis, nearest_axis_point
from .mdp import RewardParams, extract_state, reward
from .policy import (EpisodeHistory, PolicyParams, clamp_action, draw_action, estimate_gradient,
                     optimal_baseline, update)
from .shapes import PRESETS, preset_region

log = logging.getLogger(__name__)

RESTART_SLACK = 1.2


@dataclass(eq=False)
class ShapeContext:
    """A region with its axis and raster grid, shared read-only across episodes."""

    name: str
    region: ClosedRegion
    axis: MedialAxis
    grid: RasterGrid

    @classmethod
    def build(cls, name: str, region: ClosedRegion, resolution: float | None = None) -> "ShapeContext":
        axis = compute_medial_axis(region, resolution)
        return cls(name, region, axis, RasterGrid(region, axis.resolution))


def resolve_shape(ref: str) -> ClosedRegion:
    """A preset name or a path to a shape JSON file."""
    if ref in PRESETS:
        return preset_region(ref)
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"shape file not found: {ref}")
    return ClosedRegion.load(path)


def load_shapes(refs, resolution: float | None = None) -> list[ShapeContext]:
    return [ShapeContext.build(ref, resolve_shape(ref), resolution) for ref in refs]


@dataclass
class TrainConfig:
    """Training settings; the discount factor lives in ``reward.gamma``."""

    episodes: int = 300
    steps: int = 32
    iterations: int = 50
    master_seed: int = 0
    shapes: list[str] = field(default_factory=lambda: ["straight", "c_arc_wide", "s_curve"])
    reward: RewardParams = field(default_factory=RewardParams)
    beta: float = BETA
    eta: float = ETA
    resolution: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.episodes < 1 or self.steps < 2 or self.iterations < 1:
            raise ValueError("need episodes >= 1, steps >= 2, iterations >= 1")
        if not self.shapes:
            raise ValueError("shape list is empty")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def gamma(self) -> float:
        return self.reward.gamma


@dataclass
class TraceRow:
    iteration: int
    avg_return: float
    theta: np.ndarray
    wall_ms: float


@dataclass
class EpisodeEnd:
    state: BrushState
    restart: bool
    footprints: list[Footprint]
    blocked: list[bool]


def run_episode(ctx: ShapeContext, theta: PolicyParams, init: BrushState | None, T: int,
                rng: np.random.Generator, params: RewardParams = RewardParams(), beta: float = BETA,
                eta: float = ETA) -> tuple[EpisodeHistory, EpisodeEnd]:
    """Roll out T stochastic steps from ``init`` (or the start point when None).

    ``EpisodeEnd.restart`` tells the caller to begin the next episode at S:
    either too little axis is left for another T steps, or the episode ended
    blocked or on already covered canvas.
    """
    state = initial_state(ctx.region, ctx.axis) if init is None else BrushState(init.footprint, init.velocity_dir, 0)
    cov = CoverageMask(ctx.grid)
    cov.stamp(state.footprint, eta)
    feats = extract_state(ctx.axis, state, 1, beta)
    states = np.empty((T, 6))
    actions = np.empty(T)
    rewards = np.empty(T)
    footprints = [state.footprint]
    blocked_flags = []
    blocked, l = False, 1
    for t in range(T):
        s = feats.as_array()
        raw, a = draw_action(s, theta, rng)
        state, blocked, l = step(ctx.region, ctx.axis, state, a, cov, beta, eta)
        nf = extract_state(ctx.axis, state, l, beta)
        states[t], actions[t], rewards[t] = s, raw, reward(feats, nf, blocked, params)
        feats = nf
        footprints.append(state.footprint)
        blocked_flags.append(blocked)
    fp = state.footprint
    remaining = ctx.axis.total_length - nearest_axis_point(ctx.axis, fp.center).arclen
    short_track = RESTART_SLACK * remaining < T * beta * fp.radius
    restart = short_track or blocked or l == 0
    return EpisodeHistory(states, actions, rewards), EpisodeEnd(state, restart, footprints, blocked_flags)


def episode_rng(master_seed: int, iteration: int, episode: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, iteration, episode])


def collect(contexts: list[ShapeContext], theta: PolicyParams, config: TrainConfig,
            iteration: int) -> list[EpisodeHistory]:
    """N episodes assigned to shapes round-robin; each shape's chain runs in order."""
    n_shapes = len(contexts)
    histories: list[EpisodeHistory | None] = [None] * config.episodes

    def chain(k: int):
        init = None
        for n in range(k, config.episodes, n_shapes):
            h, end = run_episode(contexts[k], theta, init, config.steps,
                                 episode_rng(config.master_seed, iteration, n),
                                 config.reward, config.beta, config.eta)
            histories[n] = h
            init = None if end.restart else end.state

    if config.threads == 1:
        for k in range(n_shapes):
            chain(k)
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(chain, range(n_shapes)))
    return histories


def train(config: TrainConfig, contexts: list[ShapeContext] | None = None,
          theta: PolicyParams | None = None, callback=None) -> tuple[list[TraceRow], PolicyParams]:
    """Collect N episodes, subtract the optimal baseline, step theta; repeat M times."""
    contexts = load_shapes(config.shapes, config.resolution) if contexts is None else contexts
    theta = PolicyParams.initial() if theta is None else theta
    trace = []
    for m in range(1, config.iterations + 1):
        t0 = time.perf_counter()
        histories = collect(contexts, theta, config, m)
        gamma = config.gamma
        b = optimal_baseline(histories, theta, gamma)
        g_mu, g_sigma = estimate_gradient(histories, theta, b, gamma)
        avg = float(np.mean([h.discounted_return(gamma) for h in histories]))
        row = TraceRow(m, avg, theta.as_vector(), (time.perf_counter() - t0) * 1000.0)
        trace.append(row)
        log.info("iter %d avg_return %.4f sigma %.4f baseline %.4f", m, avg, theta.sigma, b)
        theta = update(theta, g_mu, g_sigma)
        if callback is not None:
            callback(row, theta)
    return trace, theta


@dataclass
class Rollout:
    footprints: list[Footprint]
    rewards: list[float]
    blocked: list[bool]
    ret: float
    wall_ms: float
    reached_goal: bool


def rollout_mean(ctx: ShapeContext, theta: PolicyParams, max_steps: int,
                 params: RewardParams = RewardParams(), beta: float = BETA, eta: float = ETA) -> Rollout:
    """Deterministic rollout with ``a = mu . s`` from S until the goal or ``max_steps``.

    Stops early after two consecutive blocked moves, since the deterministic
    policy would repeat the same blocked move from then on.
    """
    t0 = time.perf_counter()
    state = initial_state(ctx.region, ctx.axis)
    cov = CoverageMask(ctx.grid)
    cov.stamp(state.footprint, eta)
    feats = extract_state(ctx.axis, state, 1, beta)
    footprints, rewards, blocked_flags = [state.footprint], [], []
    reached = False
    for _ in range(max_steps):
        a = clamp_action(theta.mean_action(feats.as_array()))
        state, blocked, l = step(ctx.region, ctx.axis, state, a, cov, beta, eta)
        nf = extract_state(ctx.axis, state, l, beta)
        rewards.append(reward(feats, nf, blocked, params))
        feats = nf
        footprints.append(state.footprint)
        blocked_flags.append(blocked)
        if len(blocked_flags) >= 2 and blocked_flags[-1] and blocked_flags[-2]:
            break
        fp = state.footprint
        if ctx.axis.total_length - nearest_axis_point(ctx.axis, fp.center).arclen < beta * fp.radius:
            reached = True
            break
    ret = float(np.sum(np.asarray(rewards) * params.gamma ** np.arange(len(rewards))))
    return Rollout(footprints, rewards, blocked_flags, ret, (time.perf_counter() - t0) * 1000.0, reached)
