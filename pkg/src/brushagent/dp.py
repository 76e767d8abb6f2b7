"""Stage-wise dynamic-programming planner over discretized footprint candidates.

The axis is cut into slices every ``beta`` local half-widths.  Each slice
offers K candidate centers at relative offsets ``d`` across the section, with
the posture fitted automatically.  Because the reward compares a transition
with the one before it, the Viterbi state is the pair (previous candidate,
current candidate), which makes the maximization exact for the stage model.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .brush import BETA, ETA, BrushState, Footprint, RasterGrid, fit_posture, wrap_angle
from .geometry import ClosedRegion, MedialAxis, nearest_axis_point
from .mdp import RewardParams, episode_return, extract_state, reward_array, score_trajectory
from .policy import PolicyParams


def nested_offsets(K: int) -> np.ndarray:
    """First K offsets of a dyadic refinement of [-1, 1]; prefixes are nested.

    >>> nested_offsets(5).tolist()
    [0.0, 1.0, -1.0, 0.5, -0.5]
    """
    if K < 2:
        raise ValueError("need at least 2 candidates")
    out = [0.0, 1.0, -1.0]
    level = 1
    while len(out) < K:
        step = 2.0 ** -level
        for m in range(1, 2 ** level, 2):
            out.extend([m * step, -m * step])
        level += 1
    return np.array(out[:K])


def stage_arclens(axis: MedialAxis, beta: float = BETA) -> np.ndarray:
    s, out = 0.0, [0.0]
    while True:
        s += beta * float(axis.halfwidth_at(s))
        if s > axis.total_length:
            return np.array(out)
        out.append(s)


@dataclass
class StageGraph:
    """Candidate footprints per stage; ``None`` marks an unusable candidate."""

    arclens: np.ndarray
    offsets: np.ndarray
    candidates: list[list[Footprint | None]]

    @property
    def n_stages(self) -> int:
        return len(self.arclens)

    @classmethod
    def build(cls, region: ClosedRegion, axis: MedialAxis, K: int, beta: float = BETA) -> "StageGraph":
        offsets = nested_offsets(K)
        arclens = stage_arclens(axis, beta)
        candidates = []
        for s in arclens:
            p = axis.point_at(s)
            t = axis.tangent_at(s)
            normal = np.array([-t[1], t[0]])
            hw = float(axis.halfwidth_at(s))
            row = []
            for d in offsets:
                c = p + normal * (d * hw / (1.0 + abs(d)))
                fp = None
                if region.contains(c) and region.distance(c) > 0.0:
                    fp = fit_posture(region, axis, c)
                row.append(fp)
            candidates.append(row)
        return cls(arclens, offsets, candidates)


@dataclass
class DPResult:
    footprints: list[Footprint]
    ret: float
    wall_ms: float
    K: int
    initial_velocity: float = 0.0
    rewards: list[float] = field(default_factory=list)


def _features(axis, row, velocity, beta):
    """phi, d, kappa1, kappa2 and the tangent angle of each candidate in a stage."""
    n = len(row)
    phi, d, k1, k2, tang = (np.zeros(n) for _ in range(5))
    for j, fp in enumerate(row):
        if fp is None:
            continue
        f = extract_state(axis, BrushState(fp, velocity), 1, beta)
        phi[j], d[j], k1[j], k2[j] = f.phi, f.d, f.kappa1, f.kappa2
        t = nearest_axis_point(axis, fp.center).tangent
        tang[j] = math.atan2(t[1], t[0])
    return phi, d, k1, k2, tang


def _edges(prev_row, row, tang, cells_prev, cells, eta):
    """Movement angle omega and coverage label l for every (i -> j) pair."""
    K = len(row)
    omega = np.zeros((K, K))
    lab = np.zeros((K, K), dtype=int)
    for i, a in enumerate(prev_row):
        if a is None:
            continue
        for j, b in enumerate(row):
            if b is None:
                continue
            vel = math.atan2(b.center[1] - a.center[1], b.center[0] - a.center[0])
            omega[i, j] = wrap_angle(vel - tang[j])
            n = len(cells[j])
            if n:
                fresh = n - len(np.intersect1d(cells[j], cells_prev[i], assume_unique=True))
                lab[i, j] = int(fresh / n >= eta)
    return omega, lab


def dp_plan(region: ClosedRegion, axis: MedialAxis, K: int, reward_params: RewardParams = RewardParams(),
            beta: float = BETA, eta: float = ETA, grid: RasterGrid | None = None) -> DPResult:
    """Viterbi maximization of the discounted return over the stage graph.

    The coverage label of a move is judged against the preceding footprint
    only, which keeps the problem decomposable.
    """
    t0 = time.perf_counter()
    grid = RasterGrid(region, axis.resolution) if grid is None else grid
    graph = StageGraph.build(region, axis, K, beta)
    v0 = math.atan2(axis.tangent[0][1], axis.tangent[0][0])
    gamma = reward_params.gamma
    valid = [np.array([fp is not None for fp in row]) for row in graph.candidates]
    if not valid[0].any():
        raise ValueError("no usable candidate at the first stage")

    row0 = graph.candidates[0]
    phi0, d0, _, _, tang0 = _features(axis, row0, v0, beta)
    omega0 = np.array([wrap_angle(v0 - tang0[i]) for i in range(K)])
    cells_prev = [grid.footprint_cells(fp) if fp is not None else np.empty(0, int) for fp in row0]
    prev_phi, prev_d = phi0, d0

    if graph.n_stages == 1:
        i = int(np.flatnonzero(valid[0])[0])
        return DPResult([row0[i]], 0.0, (time.perf_counter() - t0) * 1000.0, K, v0)

    V = None
    prev_omega = None
    backs = []
    for k in range(1, graph.n_stages):
        row = graph.candidates[k]
        phi, d, k1, k2, tang = _features(axis, row, 0.0, beta)
        cells = [grid.footprint_cells(fp) if fp is not None else np.empty(0, int) for fp in row]
        omega, lab = _edges(graph.candidates[k - 1], row, tang, cells_prev, cells, eta)
        edge_ok = valid[k - 1][:, None] & valid[k][None, :]
        disc = gamma ** (k - 1)
        if V is None:
            r = reward_array(omega0[:, None], prev_phi[:, None], prev_d[:, None], omega, phi[None, :],
                             d[None, :], k1[None, :], k2[None, :], lab, reward_params)
            V = np.where(edge_ok, disc * r, -np.inf)
        else:
            r = reward_array(prev_omega[:, :, None], prev_phi[None, :, None], prev_d[None, :, None],
                             omega[None], phi[None, None, :], d[None, None, :], k1[None, None, :],
                             k2[None, None, :], lab[None], reward_params)
            total = V[:, :, None] + disc * r
            total = np.where(edge_ok[None], total, -np.inf)
            back = np.argmax(total, axis=0)
            V = np.take_along_axis(total, back[None], axis=0)[0]
            backs.append(back)
        prev_omega, prev_phi, prev_d, cells_prev = omega, phi, d, cells

    if not np.isfinite(V).any():
        raise ValueError("stage graph has no complete path")
    i, j = np.unravel_index(int(np.argmax(V)), V.shape)
    ret = float(V[i, j])
    path = [int(j), int(i)]
    for back in reversed(backs):
        i, j = int(back[i, j]), i
        path.append(i)
    path.reverse()
    fps = [graph.candidates[k][c] for k, c in enumerate(path)]
    return DPResult(fps, ret, (time.perf_counter() - t0) * 1000.0, K, v0)


def rescore(region: ClosedRegion, axis: MedialAxis, result: DPResult, params: RewardParams,
            beta: float = BETA, eta: float = ETA, grid: RasterGrid | None = None) -> float:
    """Return of a DP path recomputed step by step with the environment's reward."""
    rewards = score_trajectory(region, axis, result.footprints, params, beta, eta, grid, result.initial_velocity)
    return episode_return(rewards, params.gamma)


COMPARE_COLUMNS = ["shape", "method", "candidates", "return", "time_ms"]


def compare_rl_dp(contexts, theta: PolicyParams, K_list, reward_params: RewardParams = RewardParams(),
                  beta: float = BETA, eta: float = ETA, max_steps: int = 500) -> list[dict]:
    """One DP row per K and one mean-action RL row per shape."""
    from .training import rollout_mean

    rows = []
    for ctx in contexts:
        for K in K_list:
            res = dp_plan(ctx.region, ctx.axis, K, reward_params, beta, eta, ctx.grid)
            rows.append({"shape": ctx.name, "method": "DP", "candidates": K, "return": res.ret,
                         "time_ms": res.wall_ms})
        ro = rollout_mean(ctx, theta, max_steps, reward_params, beta, eta)
        rows.append({"shape": ctx.name, "method": "RL", "candidates": "", "return": ro.ret,
                     "time_ms": ro.wall_ms})
    return rows


def write_comparison(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            out = dict(r)
            for key in ("return", "time_ms"):
                out[key] = f"{r[key]:.6f}"
            w.writerow(out)
