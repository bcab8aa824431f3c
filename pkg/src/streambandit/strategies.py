"""Decision rules for the streaming bandit problem.

Every strategy answers PULL or ADVANCE from an :class:`Observation`.  Two
optional promises let the episode engine skip ahead:

``settled(obs)``
    every later decision on this bandit is PULL, whatever happens.
``quiet_run(obs)``
    the next ``n`` decisions are PULL as long as each pull comes up tails.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any

import numpy as np

from ._util import ceil_pow, parse_params
from .bounds import threshold_table
from .distributions import DistributionSpec
from .stream import ADVANCE, PULL, Action, BanditStream, ContractViolation, Observation, PayoutModel

if TYPE_CHECKING:
    from .estimation import EstimatorConfig

__all__ = [
    "Strategy",
    "StrategyKind",
    "StrategySpec",
    "truncate_n",
    "uniform_threshold",
    "power_threshold",
    "decide_known_uniform",
    "decide_known_power",
    "decide_beta_threshold",
    "decide_oracle",
    "KnownUniform",
    "KnownPower",
    "BetaThreshold",
    "Oracle",
    "AlwaysFirst",
]


def truncate_n(n: int, k: int, m: int = 1) -> int:
    """Number of bandits to pretend exist: ``min(n, ceil(k**(m/(m+1))))``."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    return min(n, ceil_pow(k, m / (m + 1)))


def uniform_threshold(i: int, n_eff: int) -> int:
    """Flip allowance ``N' - i`` (bandits past ``N'`` use ``i = N'``)."""
    return n_eff - min(i, n_eff)


def power_threshold(i: int, n_eff: int, m: int, c: float = 1.0) -> float:
    """``c**(1/m) * (m!/2 * (N' - i + 1))**(1/m)``.

    A denser left tail (larger ``c``) means good bandits have smaller means,
    so more silent flips are needed before settling: the stay probability
    ``c m! f**-m`` is held at ``2 / (N' - i + 1)``.
    """
    i = min(i, n_eff)
    return (c * math.factorial(m) / 2.0 * (n_eff - i + 1)) ** (1.0 / m)


def decide_known_uniform(obs: Observation, n_eff: int) -> Action:
    limit = uniform_threshold(obs.bandit_index, n_eff)
    if obs.flips > limit:
        return PULL
    return PULL if obs.heads <= 1 else ADVANCE


def decide_known_power(obs: Observation, n_eff: int, m: int, c: float = 1.0) -> Action:
    f = power_threshold(obs.bandit_index, n_eff, m, c)
    if obs.flips > f:
        return PULL
    return PULL if obs.heads == 0 else ADVANCE


def decide_beta_threshold(
    obs: Observation,
    revealed_mean: float | None,
    n_eff: int,
    m: int = 1,
    c: float = 1.0,
    table: np.ndarray | None = None,
) -> Action:
    """Fixed-payout rule: settle iff the revealed loss beats the value of
    continuing with the remaining bandits."""
    if obs.flips == 0:
        return PULL
    if revealed_mean is None:
        raise ContractViolation("beta-threshold needs fixed-payout bandits (no revealed mean)")
    if table is None:
        table = threshold_table(n_eff, m, c)
    r = max(n_eff - obs.bandit_index, 0)
    if r == 0 or revealed_mean < table[r]:
        return PULL
    return ADVANCE


def decide_oracle(means, k: int | None = None) -> int:
    """1-based index of the bandit an all-knowing player settles on."""
    return int(np.argmin(np.asarray(means))) + 1


class Strategy:
    name = "strategy"

    def begin(self, stream: BanditStream, k: int) -> None:
        """Called once at the start of every episode."""

    def decide(self, obs: Observation) -> Action:
        raise NotImplementedError

    def settled(self, obs: Observation) -> bool:
        return False

    def quiet_run(self, obs: Observation) -> int:
        return 0

    def info(self) -> dict[str, Any]:
        return {}


class KnownUniform(Strategy):
    """Allow at most one head in ``N' - i`` flips, then stay forever."""

    name = "known-uniform"

    def __init__(self, n_eff: int):
        self.n_eff = n_eff

    def decide(self, obs):
        return decide_known_uniform(obs, self.n_eff)

    def settled(self, obs):
        return obs.flips > uniform_threshold(obs.bandit_index, self.n_eff)

    def quiet_run(self, obs):
        limit = uniform_threshold(obs.bandit_index, self.n_eff)
        if obs.heads <= 1 and obs.flips <= limit:
            return limit - obs.flips + 1
        return 0


class KnownPower(Strategy):
    """Leave at the first head seen within ``f_i`` flips; past ``f_i`` stay."""

    name = "known-power"

    def __init__(self, n_eff: int, m: int, c: float = 1.0):
        self.n_eff = n_eff
        self.m = m
        self.c = c
        self._cache: dict[int, float] = {}

    def threshold(self, i: int) -> float:
        f = self._cache.get(i)
        if f is None:
            f = self._cache[i] = power_threshold(i, self.n_eff, self.m, self.c)
        return f

    def decide(self, obs):
        f = self.threshold(obs.bandit_index)
        if obs.flips > f:
            return PULL
        return PULL if obs.heads == 0 else ADVANCE

    def settled(self, obs):
        return obs.flips > self.threshold(obs.bandit_index)

    def quiet_run(self, obs):
        f = self.threshold(obs.bandit_index)
        if obs.heads == 0 and obs.flips <= f:
            return math.floor(f) - obs.flips + 1
        return 0


class BetaThreshold(Strategy):
    """Optimal fixed-payout rule built on the beta/eta thresholds."""

    name = "beta-threshold"

    def __init__(self, n_eff: int, m: int = 1, c: float = 1.0):
        self.n_eff = n_eff
        self.m = m
        self.c = c
        self.table = threshold_table(n_eff, m, c)

    def begin(self, stream, k):
        if stream.payout_model is not PayoutModel.FIXED:
            raise ContractViolation("beta-threshold strategy requires fixed-payout bandits")

    def decide(self, obs):
        return decide_beta_threshold(obs, obs.revealed_mean, self.n_eff, self.m, self.c, self.table)

    def settled(self, obs):
        return obs.flips > 0 and self.decide(obs) is PULL


class Oracle(Strategy):
    """Benchmark with full knowledge of the means: skip straight to the argmin."""

    name = "oracle"

    def __init__(self):
        self.target = 1

    def begin(self, stream, k):
        means = stream.means
        if hasattr(means, "materialize"):
            means = means.materialize()
        self.target = decide_oracle(means, k)

    def decide(self, obs):
        return ADVANCE if obs.bandit_index < self.target else PULL

    def settled(self, obs):
        return obs.bandit_index >= self.target


class AlwaysFirst(Strategy):
    name = "always-first"

    def decide(self, obs):
        return PULL

    def settled(self, obs):
        return True


class StrategyKind(enum.Enum):
    KNOWN_UNIFORM = "known-uniform"
    KNOWN_POWER = "known-power"
    BETA_THRESHOLD = "beta-threshold"
    ORACLE = "oracle"
    ALWAYS_FIRST = "always-first"
    ADAPTIVE = "adaptive"


_ALLOWED_KEYS = {
    StrategyKind.KNOWN_UNIFORM: {"n_eff"},
    StrategyKind.KNOWN_POWER: {"m", "c", "n_eff"},
    StrategyKind.BETA_THRESHOLD: {"m", "c", "n_eff"},
    StrategyKind.ORACLE: set(),
    StrategyKind.ALWAYS_FIRST: set(),
}


@dataclass(frozen=True)
class StrategySpec:
    """Serializable strategy description.

    ``m``/``c`` left unset mean "take them from the experiment's
    distribution" (the known-distribution setting).  ``n_eff`` unset means
    ``truncate_n(n, k, m)``.
    """

    kind: StrategyKind
    m: int | None = None
    c: float | None = None
    n_eff: int | None = None
    estimation: EstimatorConfig | None = None

    def __post_init__(self):
        if self.kind is StrategyKind.ADAPTIVE:
            if self.estimation is None:
                from .estimation import EstimatorConfig

                object.__setattr__(self, "estimation", EstimatorConfig())
        elif self.estimation is not None:
            raise ValueError("estimation parameters only apply to the adaptive strategy")
        if self.m is not None and (int(self.m) != self.m or self.m < 1):
            raise ValueError("m must be a positive integer")
        if self.c is not None and not self.c > 0:
            raise ValueError("c must be positive")
        if self.n_eff is not None and self.n_eff < 1:
            raise ValueError("n_eff must be >= 1")

    @classmethod
    def parse(cls, text: str) -> StrategySpec:
        kind_text, params = parse_params(text, "strategy")
        try:
            kind = StrategyKind(kind_text)
        except ValueError:
            raise ValueError(f"unknown strategy {kind_text!r}") from None
        if kind is StrategyKind.ADAPTIVE:
            from .estimation import EstimatorConfig

            return cls(kind, estimation=EstimatorConfig.from_params(params))
        unknown = set(params) - _ALLOWED_KEYS[kind]
        if unknown:
            raise ValueError(f"unknown parameter(s) {sorted(unknown)} for strategy {kind.value}")
        try:
            m = int(params["m"]) if "m" in params else None
            c = float(params["c"]) if "c" in params else None
            n_eff = int(params["n_eff"]) if "n_eff" in params else None
        except ValueError as exc:
            raise ValueError(f"non-numeric strategy parameter in {text!r}") from exc
        return cls(kind, m=m, c=c, n_eff=n_eff)

    def __str__(self) -> str:
        if self.kind is StrategyKind.ADAPTIVE:
            return f"adaptive:{self.estimation.to_text()}"
        parts = []
        if self.m is not None:
            parts.append(f"m={self.m}")
        if self.c is not None:
            parts.append(f"c={self.c!r}")
        if self.n_eff is not None:
            parts.append(f"n_eff={self.n_eff}")
        return self.kind.value + (":" + ",".join(parts) if parts else "")

    def resolved(self, dist: DistributionSpec) -> StrategySpec:
        """Fill unset ``m``/``c`` from the known distribution."""
        if self.kind in (StrategyKind.KNOWN_POWER, StrategyKind.BETA_THRESHOLD):
            return replace(
                self,
                m=dist.m if self.m is None else self.m,
                c=dist.c if self.c is None else self.c,
            )
        return self

    def model_m(self, dist: DistributionSpec) -> int:
        if self.kind is StrategyKind.KNOWN_UNIFORM:
            return 1
        if self.m is not None:
            return self.m
        return dist.m

    def effective_n(self, n: int, k: int, dist: DistributionSpec) -> int:
        if self.n_eff is not None:
            if self.n_eff > n:
                raise ValueError(f"n_eff={self.n_eff} exceeds n={n}")
            return self.n_eff
        return truncate_n(n, k, self.model_m(dist))

    def build(self, n: int, k: int, dist: DistributionSpec) -> Strategy:
        spec = self.resolved(dist)
        if spec.kind is StrategyKind.ORACLE:
            return Oracle()
        if spec.kind is StrategyKind.ALWAYS_FIRST:
            return AlwaysFirst()
        if spec.kind is StrategyKind.ADAPTIVE:
            from .estimation import AdaptiveStrategy

            return AdaptiveStrategy(n, k, spec.estimation)
        n_eff = spec.effective_n(n, k, dist)
        if spec.kind is StrategyKind.KNOWN_UNIFORM:
            return KnownUniform(n_eff)
        if spec.kind is StrategyKind.KNOWN_POWER:
            return KnownPower(n_eff, spec.m, spec.c)
        return BetaThreshold(n_eff, spec.m, spec.c)
