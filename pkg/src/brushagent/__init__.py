"""Reinforcement-learning brush agent that draws strokes inside closed shapes."""

from .brush import Footprint, BrushState
from .geometry import ClosedRegion, MedialAxis, compute_medial_axis
from .mdp import RewardParams, StateFeatures
from .policy import PolicyParams
from .training import TrainConfig, train

__all__ = ["BrushState", "ClosedRegion", "Footprint", "MedialAxis", "PolicyParams", "RewardParams",
           "StateFeatures", "TrainConfig", "compute_medial_axis", "train"]
