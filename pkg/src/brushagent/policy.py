"""Gaussian policy over the movement angle and its REINFORCE update.

The policy is ``a ~ N(mu . s, sigma^2)`` over the six state features.  The
gradient estimator subtracts the variance-minimizing scalar baseline and the
update takes a fixed-length step along the estimated gradient.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ZeroGradientWarning, ZeroScoreWarning

N_FEATURES = 6
SIGMA_MIN = 0.1
STEP_LENGTH = 0.1
ACTION_LOW = math.nextafter(-math.pi, 0.0)


@dataclass(frozen=True, eq=False)
class PolicyParams:
    mu: np.ndarray
    sigma: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(N_FEATURES)
        if not np.all(np.isfinite(mu)) or not math.isfinite(self.sigma):
            raise ValueError("policy parameters must be finite")
        if self.sigma < SIGMA_MIN:
            raise ValueError(f"sigma must be >= {SIGMA_MIN}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", float(self.sigma))

    @classmethod
    def initial(cls) -> "PolicyParams":
        return cls(np.zeros(N_FEATURES), 2.0)

    def as_vector(self) -> np.ndarray:
        return np.append(self.mu, self.sigma)

    @classmethod
    def from_vector(cls, v) -> "PolicyParams":
        v = np.asarray(v, dtype=float)
        return cls(v[:N_FEATURES], float(v[N_FEATURES]))

    def __eq__(self, other):
        return isinstance(other, PolicyParams) and np.array_equal(self.as_vector(), other.as_vector())

    def mean_action(self, s) -> float:
        return float(self.mu @ np.asarray(s, dtype=float))


def save_checkpoint(path, theta: PolicyParams, iteration: int) -> None:
    data = {"mu": [float(x) for x in theta.mu], "sigma": theta.sigma, "iteration": int(iteration)}
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def load_checkpoint(path) -> tuple[PolicyParams, int]:
    data = json.loads(Path(path).read_text())
    unknown = set(data) - {"mu", "sigma", "iteration"}
    if unknown or "mu" not in data or "sigma" not in data:
        raise ValueError(f"malformed checkpoint {path}")
    if len(data["mu"]) != N_FEATURES:
        raise ValueError(f"checkpoint mu must have {N_FEATURES} entries")
    return PolicyParams(np.array(data["mu"], dtype=float), float(data["sigma"])), int(data.get("iteration", 0))


@dataclass(eq=False)
class EpisodeHistory:
    """States (T x 6), raw pre-clamp actions (T) and rewards (T) of one episode."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def __len__(self):
        return len(self.actions)

    def discounted_return(self, gamma: float) -> float:
        return float(np.sum(self.rewards * gamma ** np.arange(len(self.rewards))))


def clamp_action(a: float) -> float:
    return min(max(a, ACTION_LOW), math.pi)


def draw_action(s, theta: PolicyParams, rng: np.random.Generator) -> tuple[float, float]:
    """Return ``(raw, clamped)``; the likelihood is evaluated on the raw sample."""
    raw = theta.mean_action(s) + theta.sigma * float(rng.standard_normal())
    return raw, clamp_action(raw)


def sample_action(s, theta: PolicyParams, rng: np.random.Generator) -> float:
    return draw_action(s, theta, rng)[1]


def log_policy_grad(s, a: float, theta: PolicyParams) -> tuple[np.ndarray, float]:
    s = np.asarray(s, dtype=float)
    resid = a - theta.mu @ s
    var = theta.sigma ** 2
    return resid / var * s, (resid ** 2 - var) / theta.sigma ** 3


def score_sums(histories: list[EpisodeHistory], theta: PolicyParams) -> np.ndarray:
    """Per-episode sum over time of grad log pi, stacked as (N, 7) over (mu, sigma)."""
    out = np.empty((len(histories), N_FEATURES + 1))
    sig = theta.sigma
    for n, h in enumerate(histories):
        resid = h.actions - h.states @ theta.mu
        out[n, :N_FEATURES] = (resid[:, None] * h.states).sum(axis=0) / sig ** 2
        out[n, N_FEATURES] = np.sum(resid ** 2 - sig ** 2) / sig ** 3
    return out


def optimal_baseline(histories: list[EpisodeHistory], theta: PolicyParams, gamma: float) -> float:
    """Return-weighted by squared score norm: sum R |g|^2 / sum |g|^2."""
    g = score_sums(histories, theta)
    returns = np.array([h.discounted_return(gamma) for h in histories])
    w = np.einsum("ij,ij->i", g, g)
    if not np.any(w > 0):
        warnings.warn("all summed scores are zero; using the mean return", ZeroScoreWarning, stacklevel=2)
        return float(returns.mean())
    return float(np.sum(returns * w) / np.sum(w))


def estimate_gradient(histories: list[EpisodeHistory], theta: PolicyParams, b: float,
                      gamma: float) -> tuple[np.ndarray, float]:
    g = score_sums(histories, theta)
    returns = np.array([h.discounted_return(gamma) for h in histories])
    grad = ((returns - b)[:, None] * g).mean(axis=0)
    return grad[:N_FEATURES], float(grad[N_FEATURES])


def update(theta: PolicyParams, grad_mu, grad_sigma: float, step_length: float = STEP_LENGTH,
           learning_rate: float | None = None) -> PolicyParams:
    """Gradient ascent with ``eps = step_length / |grad|`` unless a fixed rate is given.

    Sigma is projected back to ``SIGMA_MIN`` if the step would push it lower.
    """
    grad = np.append(np.asarray(grad_mu, dtype=float), grad_sigma)
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient must be finite")
    norm = float(np.linalg.norm(grad))
    if norm < 1e-12:
        warnings.warn("gradient norm below 1e-12; keeping parameters", ZeroGradientWarning, stacklevel=2)
        return theta
    eps = step_length / norm if learning_rate is None else learning_rate
    v = theta.as_vector() + eps * grad
    v[N_FEATURES] = max(v[N_FEATURES], SIGMA_MIN)
    return PolicyParams.from_vector(v)
