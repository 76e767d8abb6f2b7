"""State features, the immediate reward and episode returns."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .brush import BETA, ETA, BrushState, CoverageMask, Footprint, RasterGrid, wrap_angle
from .geometry import DEFAULT_ALPHA, ClosedRegion, MedialAxis, curvature_feature, nearest_axis_point

D_LIMIT = 2.0
ZERO_TOL = 1e-9  # features this small count as zero in delta


@dataclass(frozen=True)
class StateFeatures:
    omega: float
    phi: float
    d: float
    kappa1: float
    kappa2: float
    l: int

    def as_array(self) -> np.ndarray:
        return np.array([self.omega, self.phi, self.d, self.kappa1, self.kappa2, float(self.l)])


@dataclass(frozen=True)
class RewardParams:
    lambda1: float = 0.5
    lambda2: float = 0.5
    tau1: float = 0.5
    tau2: float = 0.5
    zeta1: float = 1.0 / 3.0
    zeta2: float = 1.0 / 3.0
    zeta3: float = 1.0 / 3.0
    W: float = 1.0
    gamma: float = 0.99
    denom_eps: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"reward parameter {f.name} must be non-negative")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RewardParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown reward parameters: {sorted(unknown)}")
        return cls(**data)


def extract_state(axis: MedialAxis, cur: BrushState, l: int, beta: float = BETA,
                  alpha: float = DEFAULT_ALPHA) -> StateFeatures:
    """Features of the brush relative to the axis at its nearest point P."""
    fp = cur.footprint
    proj = nearest_axis_point(axis, fp.center)
    tangent_angle = math.atan2(proj.tangent[1], proj.tangent[0])
    omega = wrap_angle(cur.velocity_dir - tangent_angle)
    phi = wrap_angle(fp.heading - tangent_angle)
    d = max(-D_LIMIT, min(D_LIMIT, proj.side * proj.distance / fp.radius))
    k1 = curvature_feature(axis, proj.arclen, alpha)
    k2 = curvature_feature(axis, min(proj.arclen + beta * fp.radius, axis.total_length), alpha)
    return StateFeatures(omega, phi, d, k1, k2, int(l))


def delta(x: float, x_prev: float) -> float:
    """Normalized squared change between consecutive feature values."""
    if abs(x) <= ZERO_TOL and abs(x_prev) <= ZERO_TOL:
        return 1.0
    return ((x - x_prev) / (abs(x) + abs(x_prev))) ** 2


def location_energy(omega: float, d: float, params: RewardParams) -> float:
    if abs(d) > 1.0:
        return params.tau1 * abs(omega) + params.tau2 * (abs(d) + params.W)
    return params.tau1 * abs(omega)


def posture_energy(d_omega: float, d_phi: float, d_d: float, params: RewardParams) -> float:
    return params.zeta1 * d_omega + params.zeta2 * d_phi + params.zeta3 * d_d


def reward(prev: StateFeatures, cur: StateFeatures, blocked: bool, params: RewardParams) -> float:
    """Immediate reward of the transition prev -> cur.

    The heading is compared folded to [0, pi]: a tip on either wall is the
    same posture up to the side.
    """
    if blocked or cur.l == 0:
        return 0.0
    e_loc = location_energy(cur.omega, cur.d, params)
    e_post = posture_energy(delta(cur.omega, prev.omega),
                            delta(abs(cur.phi), abs(prev.phi)),
                            delta(cur.d, prev.d), params)
    numer = 1.0 + (abs(cur.kappa1) + abs(cur.kappa2)) / 2.0
    return numer / max(params.lambda1 * e_loc + params.lambda2 * e_post, params.denom_eps)


def episode_return(rewards, gamma: float) -> float:
    r = np.asarray(rewards, dtype=float)
    return float(np.sum(r * gamma ** np.arange(len(r))))


def score_trajectory(region: ClosedRegion, axis: MedialAxis, footprints: list[Footprint],
                     params: RewardParams, beta: float = BETA, eta: float = ETA,
                     grid: RasterGrid | None = None, initial_velocity: float | None = None) -> list[float]:
    """Re-score a footprint sequence with the reward above.

    Movement direction is taken from consecutive centers; an unchanged
    footprint counts as blocked.  Coverage accumulates over the sequence,
    starting from the first footprint.
    """
    grid = RasterGrid(region, axis.resolution) if grid is None else grid
    cov = CoverageMask(grid)
    cov.stamp(footprints[0], eta)
    if initial_velocity is None:
        t = nearest_axis_point(axis, footprints[0].center).tangent
        initial_velocity = math.atan2(t[1], t[0])
    state = BrushState(footprints[0], initial_velocity, 0)
    feats = extract_state(axis, state, 1, beta)
    rewards = []
    for fp in footprints[1:]:
        if fp == state.footprint:
            rewards.append(0.0)
            continue
        vel = math.atan2(fp.center[1] - state.footprint.center[1], fp.center[0] - state.footprint.center[0])
        state = BrushState(fp, vel, state.step_index + 1)
        l = cov.stamp(fp, eta)
        nxt = extract_state(axis, state, l, beta)
        rewards.append(reward(feats, nxt, False, params))
        feats = nxt
    return rewards


def _delta_array(x, xp):
    x, xp = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xp, dtype=float))
    zero = (np.abs(x) <= ZERO_TOL) & (np.abs(xp) <= ZERO_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ((x - xp) / (np.abs(x) + np.abs(xp))) ** 2
    return np.where(zero, 1.0, out)


def reward_array(prev_omega, prev_phi, prev_d, omega, phi, d, kappa1, kappa2, l,
                 params: RewardParams) -> np.ndarray:
    """Broadcasting version of :func:`reward` for non-blocked transitions."""
    omega = np.asarray(omega, dtype=float)
    d = np.asarray(d, dtype=float)
    e_loc = params.tau1 * np.abs(omega) + np.where(np.abs(d) > 1.0, params.tau2 * (np.abs(d) + params.W), 0.0)
    e_post = (params.zeta1 * _delta_array(omega, prev_omega)
              + params.zeta2 * _delta_array(np.abs(phi), np.abs(prev_phi))
              + params.zeta3 * _delta_array(d, prev_d))
    numer = 1.0 + (np.abs(kappa1) + np.abs(kappa2)) / 2.0
    r = numer / np.maximum(params.lambda1 * e_loc + params.lambda2 * e_post, params.denom_eps)
    return np.where(np.asarray(l) == 0, 0.0, r)
