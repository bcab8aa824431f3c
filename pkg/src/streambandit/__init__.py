"""Streaming (one-way) multi-armed bandits."""

from .distributions import DistKind, DistributionSpec, expected_min_asymptotic, expected_min_exact
from .harness import ExperimentConfig, paired_compare, run_experiment
from .stream import ADVANCE, PULL, Action, BanditStream, EpisodeResult, Observation, PayoutModel, run_episode
from .strategies import Strategy, StrategySpec, truncate_n

__version__ = "0.1.0"

__all__ = [
    "ADVANCE",
    "PULL",
    "Action",
    "BanditStream",
    "DistKind",
    "DistributionSpec",
    "EpisodeResult",
    "ExperimentConfig",
    "Observation",
    "PayoutModel",
    "Strategy",
    "StrategySpec",
    "expected_min_asymptotic",
    "expected_min_exact",
    "paired_compare",
    "run_episode",
    "run_experiment",
    "truncate_n",
]
