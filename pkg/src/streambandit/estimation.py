"""Unknown-distribution machinery.

Phase 1 spends the first ``ceil(N**sample_exponent)`` bandits on estimating
the left-tail scale ``C**(-1/m)`` of the mean law; phase 2 runs the
known-distribution rule with that estimate on the rest of the stream.

In Bernoulli mode each phase-1 bandit is flipped until its first head and
the flip count is turned into a proxy mean whose left tail follows the mean
law up to a ``(m!)**(1/m)`` factor.  In fixed-payout mode one pull reveals
the mean itself.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from ._util import ceil_pow, fmt
from .distributions import expected_min_exact
from .strategies import BetaThreshold, KnownPower, Strategy, truncate_n
from .stream import ADVANCE, PULL, BanditStream, Observation, PayoutModel

__all__ = [
    "EstimatorConfig",
    "EstimateResult",
    "InsufficientData",
    "ModelSelectionError",
    "proxy_mean",
    "first_head_sample",
    "scale_proxy",
    "pooled_min_estimate",
    "select_m",
    "AdaptiveStrategy",
    "adaptive_strategy",
]

PROXIES = ("flips", "tails")
NORMALIZATIONS = ("exact", "asymptotic")


class InsufficientData(ValueError):
    """Fewer samples than one pool."""


class ModelSelectionError(ValueError):
    def __init__(self, message: str, fallback: int):
        super().__init__(message)
        self.fallback = fallback


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs of the adaptive strategy.

    ``proxy`` picks the first-head proxy: ``"flips"`` is ``1/(T+1)`` and
    ``"tails"`` is ``1/T`` (``1`` when ``T = 0``), ``T`` being the tails seen
    before the first head.  ``normalization`` picks how the averaged pool
    minimum is turned into a scale estimate: ``"exact"`` divides by the
    finite-pool expected minimum, ``"asymptotic"`` multiplies by
    ``L**(1/m) / Gamma(1 + 1/m)``.  ``flip_cap=None`` means
    ``max(1, floor(K / (4 * phase-1 bandits)))``.
    """

    sample_exponent: float = 0.9
    pool_exponent: float = 0.2
    m_candidates: tuple[int, ...] = (1,)
    density_bound_b: float = 10.0
    proxy: str = "flips"
    normalization: str = "exact"
    flip_cap: int | None = None

    def __post_init__(self):
        if not 0 < self.pool_exponent < self.sample_exponent < 1:
            raise ValueError("need 0 < pool_exponent < sample_exponent < 1")
        cands = tuple(sorted(set(int(m) for m in self.m_candidates)))
        if not cands or cands[0] < 1:
            raise ValueError("m_candidates must be a nonempty set of positive integers")
        object.__setattr__(self, "m_candidates", cands)
        if not self.density_bound_b > 1:
            raise ValueError("density bound B must exceed 1")
        if self.proxy not in PROXIES:
            raise ValueError(f"proxy must be one of {PROXIES}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if self.flip_cap is not None and self.flip_cap < 1:
            raise ValueError("flip_cap must be >= 1")

    _KEYS = {
        "m": "m_candidates",
        "B": "density_bound_b",
        "sample_exp": "sample_exponent",
        "pool_exp": "pool_exponent",
        "proxy": "proxy",
        "norm": "normalization",
        "cap": "flip_cap",
    }

    @classmethod
    def from_params(cls, params: Mapping[str, str]) -> EstimatorConfig:
        """Build from ``adaptive:m=1|2,B=10,sample_exp=0.9,pool_exp=0.2`` parameters."""
        unknown = set(params) - set(cls._KEYS)
        if unknown:
            raise ValueError(f"unknown adaptive parameter(s) {sorted(unknown)}")
        kw: dict[str, Any] = {}
        try:
            if "m" in params:
                kw["m_candidates"] = tuple(int(v) for v in params["m"].split("|"))
            if "B" in params:
                kw["density_bound_b"] = float(params["B"])
            if "sample_exp" in params:
                kw["sample_exponent"] = float(params["sample_exp"])
            if "pool_exp" in params:
                kw["pool_exponent"] = float(params["pool_exp"])
            if "cap" in params:
                kw["flip_cap"] = int(params["cap"])
        except ValueError as exc:
            raise ValueError(f"non-numeric adaptive parameter: {exc}") from exc
        if "proxy" in params:
            kw["proxy"] = params["proxy"]
        if "norm" in params:
            kw["normalization"] = params["norm"]
        return cls(**kw)

    def to_text(self) -> str:
        parts = [
            "m=" + "|".join(str(m) for m in self.m_candidates),
            f"B={fmt(self.density_bound_b)}",
            f"sample_exp={fmt(self.sample_exponent)}",
            f"pool_exp={fmt(self.pool_exponent)}",
        ]
        if self.proxy != "flips":
            parts.append(f"proxy={self.proxy}")
        if self.normalization != "exact":
            parts.append(f"norm={self.normalization}")
        if self.flip_cap is not None:
            parts.append(f"cap={self.flip_cap}")
        return ",".join(parts)


@dataclass(frozen=True)
class EstimateResult:
    c_inv_root: float
    m_selected: int
    samples_used: int
    flips_used: int

    @property
    def density(self) -> float:
        """Implied left-tail constant ``C = c_inv_root**(-m)``."""
        return self.c_inv_root ** (-self.m_selected)


def proxy_mean(tails: int, head_seen: bool, flip_cap: int, proxy: str = "flips") -> float:
    """Proxy mean from a first-head run of ``tails`` tails."""
    if not head_seen:
        return 1.0 / flip_cap
    if proxy == "flips":
        return 1.0 / (tails + 1)
    if proxy == "tails":
        return 1.0 if tails == 0 else 1.0 / tails
    raise ValueError(f"unknown proxy {proxy!r}")


def first_head_sample(stream: BanditStream, flip_cap: int, proxy: str = "flips") -> float:
    """Flip the current bandit until a head (at most ``flip_cap`` flips),
    return its proxy mean and move the stream on."""
    if flip_cap < 1:
        raise ValueError("flip_cap must be >= 1")
    tails = 0
    head = False
    for _ in range(flip_cap):
        if stream.pull() == 1.0:
            head = True
            break
        tails += 1
    stream.advance()
    return proxy_mean(tails, head, flip_cap, proxy)


def scale_proxy(mu: float | np.ndarray, m: int) -> float | np.ndarray:
    if np.any(np.asarray(mu) <= 0):
        raise ValueError("proxy means must be positive")
    return math.factorial(m) ** (1.0 / m) * mu


def pool_size(n: int, pool_exponent: float = 0.2) -> int:
    return max(1, ceil_pow(n, pool_exponent))


def pooled_min_estimate(
    samples: Sequence[float] | np.ndarray,
    n_for_scaling: int,
    m: int = 1,
    *,
    pool_exponent: float = 0.2,
    normalization: str = "exact",
) -> EstimateResult:
    """Estimate ``C**(-1/m)`` from the averaged minima of pools of size
    ``L = ceil(N**pool_exponent)``; a trailing partial pool is dropped."""
    x = np.asarray(samples, dtype=float)
    L = pool_size(n_for_scaling, pool_exponent)
    pools = len(x) // L
    if pools < 1:
        raise InsufficientData(f"{len(x)} samples is fewer than one pool of {L}")
    avg_min = float(x[: pools * L].reshape(pools, L).min(axis=1).mean())
    if normalization == "exact":
        est = avg_min / expected_min_exact(L, m)
    elif normalization == "asymptotic":
        est = avg_min * L ** (1.0 / m) / math.gamma(1.0 + 1.0 / m)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return EstimateResult(c_inv_root=est, m_selected=m, samples_used=len(x), flips_used=len(x))


def select_m(estimates: Mapping[int, float], b: float) -> int:
    """Smallest candidate ``m`` whose implied density ``c_inv_root**(-m)``
    lies in ``[1/b, b]``."""
    if not estimates:
        raise ValueError("no candidates")
    for m in sorted(estimates):
        est = estimates[m]
        if est > 0 and 1.0 / b <= est ** (-m) <= b:
            return m
    raise ModelSelectionError(
        f"no candidate density within [1/{b:g}, {b:g}]: "
        + ", ".join(f"m={m}: C={estimates[m] ** (-m):.4g}" for m in sorted(estimates)),
        fallback=max(estimates),
    )


class AdaptiveStrategy(Strategy):
    """Estimate the left tail on the first bandits, then play the known rule."""

    name = "adaptive"

    def __init__(self, n: int, k: int, config: EstimatorConfig | None = None):
        if n < 2:
            raise ValueError("adaptive strategy needs at least two bandits")
        self.n = n
        self.k = k
        self.config = config or EstimatorConfig()
        self.n1 = min(ceil_pow(n, self.config.sample_exponent), n - 1)
        if self.config.flip_cap is not None:
            self.flip_cap = self.config.flip_cap
        else:
            self.flip_cap = max(1, k // (4 * self.n1))
        self._reset(PayoutModel.BERNOULLI)

    def _reset(self, payout: PayoutModel) -> None:
        self.fixed = payout is PayoutModel.FIXED
        self.samples: list[float] = []
        self.phase1_flips = 0
        self._last_recorded = 0
        self.estimate: EstimateResult | None = None
        self.phase2: Strategy | None = None
        self.selection_failed = False
        self.insufficient = False

    def begin(self, stream, k):
        self._reset(stream.payout_model)

    # phase 1 -----------------------------------------------------------

    def _record(self, obs: Observation) -> None:
        if obs.bandit_index == self._last_recorded:
            return
        self._last_recorded = obs.bandit_index
        self.phase1_flips += obs.flips
        if self.fixed:
            self.samples.append(obs.revealed_mean)
        else:
            head = obs.heads > 0
            self.samples.append(proxy_mean(obs.flips - 1 if head else obs.flips, head,
                                           self.flip_cap, self.config.proxy))

    def _phase1_decide(self, obs: Observation):
        if self.fixed:
            if obs.flips == 0:
                return PULL
        elif obs.heads == 0 and obs.flips < self.flip_cap:
            return PULL
        self._record(obs)
        return ADVANCE

    # phase 2 -----------------------------------------------------------

    def _estimate_for(self, m: int) -> EstimateResult:
        x = np.asarray(self.samples)
        if not self.fixed:
            x = scale_proxy(x, m)
        return pooled_min_estimate(
            x, self.n, m,
            pool_exponent=self.config.pool_exponent,
            normalization=self.config.normalization,
        )

    def _finalize(self, remaining: int) -> None:
        cands = self.config.m_candidates
        estimates: dict[int, EstimateResult] = {}
        try:
            for m in cands:
                estimates[m] = self._estimate_for(m)
        except ValueError:
            # not enough phase-1 samples for a pool: assume the unit law
            self.insufficient = True
            m = cands[-1]
            est = EstimateResult(1.0, m, len(self.samples), self.phase1_flips)
        else:
            if len(cands) == 1:
                m = cands[0]
            else:
                try:
                    m = select_m({mm: e.c_inv_root for mm, e in estimates.items()},
                                 self.config.density_bound_b)
                except ModelSelectionError as err:
                    self.selection_failed = True
                    m = err.fallback
            est = replace(estimates[m], flips_used=self.phase1_flips)
        self.estimate = est
        n_rest = self.n - self.n1
        density = est.c_inv_root ** (-m)
        n_eff = truncate_n(n_rest, remaining, m)
        if self.fixed:
            self.phase2 = BetaThreshold(n_eff, m, density)
        else:
            self.phase2 = KnownPower(n_eff, m, density)

    def _local(self, obs: Observation) -> Observation:
        if self.phase2 is None:
            self._finalize(obs.remaining_budget)
        return Observation(obs.flips, obs.heads, obs.bandit_index - self.n1,
                           obs.remaining_budget, obs.revealed_mean)

    # contract ----------------------------------------------------------

    def decide(self, obs):
        if obs.bandit_index <= self.n1:
            return self._phase1_decide(obs)
        local = self._local(obs)
        return self.phase2.decide(local)

    def settled(self, obs):
        if obs.bandit_index <= self.n1:
            return False
        local = self._local(obs)
        return self.phase2.settled(local)

    def quiet_run(self, obs):
        if obs.bandit_index <= self.n1:
            if not self.fixed and obs.heads == 0 and obs.flips < self.flip_cap:
                return self.flip_cap - obs.flips
            return 0
        local = self._local(obs)
        return self.phase2.quiet_run(local)

    def info(self) -> dict[str, Any]:
        est = self.estimate
        return {
            "phase1_bandits": self.n1,
            "phase1_flips": self.phase1_flips,
            "flip_cap": self.flip_cap,
            "phase1_exhausted": est is None,
            "c_inv_root": None if est is None else est.c_inv_root,
            "m_selected": None if est is None else est.m_selected,
            "selection_failed": self.selection_failed,
            "insufficient_samples": self.insufficient,
        }


def adaptive_strategy(n: int, k: int, config: EstimatorConfig | None = None) -> AdaptiveStrategy:
    return AdaptiveStrategy(n, k, config)
