"""One-way bandit stream and the episode engine.

Bandits are presented one at a time.  A strategy sees only an
:class:`Observation` of the current bandit and answers PULL or ADVANCE; an
ADVANCE can never be undone.  On the last bandit every decision is coerced to
PULL so that exactly ``k`` pulls are always spent.

Randomness: every episode owns two Philox (counter-based) generators keyed by
``SeedSequence([master_seed, episode, tag])`` -- tag 0 draws the latent means,
tag 1 draws payouts.  Two strategies run on the same ``(master_seed,
episode)`` therefore face the same means regardless of how many pulls they
spend.
"""

from __future__ import annotations

import csv
import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from .distributions import DistributionSpec, sample_means

if TYPE_CHECKING:
    from .strategies import Strategy

__all__ = [
    "Action",
    "PULL",
    "ADVANCE",
    "PayoutModel",
    "ContractViolation",
    "Observation",
    "EpisodeResult",
    "TraceRow",
    "LazyMeans",
    "BanditStream",
    "make_rng",
    "episode_stream",
    "pull",
    "run_episode",
    "write_trace_csv",
]

MEANS_TAG = 0
PAYOUT_TAG = 1
_SEED_MASK = (1 << 64) - 1


class Action(enum.Enum):
    PULL = "PULL"
    ADVANCE = "ADVANCE"


PULL = Action.PULL
ADVANCE = Action.ADVANCE


class PayoutModel(enum.Enum):
    BERNOULLI = "bernoulli"
    FIXED = "fixed"

    @classmethod
    def parse(cls, text: str) -> PayoutModel:
        key = text.strip().lower()
        if key in ("bernoulli", "ber"):
            return cls.BERNOULLI
        if key in ("fixed", "fixed-payout", "fixedpayout"):
            return cls.FIXED
        raise ValueError(f"unknown payout model {text!r}")


class ContractViolation(RuntimeError):
    """A strategy broke the decision contract."""


@dataclass(frozen=True, slots=True)
class Observation:
    flips: int
    heads: int
    bandit_index: int
    remaining_budget: int
    # exact mean of the current bandit once pulled, FixedPayout mode only
    revealed_mean: float | None = None

    @property
    def tails(self) -> int:
        return self.flips - self.heads


@dataclass(frozen=True)
class EpisodeResult:
    total_loss: float
    flips_used: int
    settled_index: int
    bandits_visited: int
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def loss_per_flip(self) -> float:
        return self.total_loss / self.flips_used


@dataclass(frozen=True, slots=True)
class TraceRow:
    episode: int
    bandit_index: int
    flips: int
    heads: int
    action: str
    loss: float


TRACE_HEADER = ("episode", "bandit_index", "flips", "heads", "action", "loss")


def write_trace_csv(rows: Sequence[TraceRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for r in rows:
            writer.writerow([r.episode, r.bandit_index, r.flips, r.heads, r.action, f"{r.loss:.10g}"])


def make_rng(master_seed: int, episode: int, tag: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(master_seed) & _SEED_MASK, int(episode), int(tag)])
    return np.random.Generator(np.random.Philox(ss))


class LazyMeans(Sequence):
    """Latent means drawn on demand in fixed-size chunks.

    Chunks come from one generator in order, so element ``i`` does not depend
    on how far the stream has been consumed.  Streams with ``n = 10**6`` only
    pay for the bandits a strategy actually reaches.
    """

    def __init__(self, dist: DistributionSpec, n: int, rng: np.random.Generator, chunk: int = 4096):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.dist = dist
        self.n = n
        self._rng = rng
        self._chunk = chunk
        self._buf = np.empty(0)

    def __len__(self) -> int:
        return self.n

    def _extend(self, upto: int) -> None:
        parts = [self._buf]
        have = len(self._buf)
        while have < upto:
            size = min(self._chunk, self.n - have)
            parts.append(sample_means(self.dist, self._rng, size))
            have += size
        self._buf = np.concatenate(parts)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.materialize()[i]
        if i < 0:
            i += self.n
        if not 0 <= i < self.n:
            raise IndexError(i)
        if i >= len(self._buf):
            self._extend(i + 1)
        return float(self._buf[i])

    def materialize(self) -> np.ndarray:
        if len(self._buf) < self.n:
            self._extend(self.n)
        return self._buf

    @property
    def generated(self) -> int:
        return len(self._buf)


class BanditStream:
    """Ordered latent means, a payout model and a one-way cursor (1-based)."""

    def __init__(
        self,
        means: Sequence[float],
        payout_model: PayoutModel = PayoutModel.BERNOULLI,
        rng: np.random.Generator | None = None,
        *,
        seed: int | None = None,
    ):
        if len(means) < 1:
            raise ValueError("a stream needs at least one bandit")
        if not isinstance(means, LazyMeans):
            means = np.asarray(means, dtype=float)
            if np.any((means < 0) | (means > 1)):
                raise ValueError("means must lie in [0, 1]")
        self.means = means
        self.payout_model = PayoutModel(payout_model)
        if rng is None:
            rng = make_rng(0 if seed is None else seed, 0, PAYOUT_TAG)
        self.rng = rng
        self.cursor = 1

    @property
    def n(self) -> int:
        return len(self.means)

    @property
    def current_mean(self) -> float:
        return float(self.means[self.cursor - 1])

    @property
    def at_last(self) -> bool:
        return self.cursor == self.n

    def reseed(self, seed: int) -> None:
        self.rng = make_rng(seed, 0, PAYOUT_TAG)

    def advance(self) -> bool:
        """Move to the next bandit; at the last bandit the stream stays put."""
        if self.cursor < self.n:
            self.cursor += 1
            return True
        return False

    def pull(self) -> float:
        p = self.current_mean
        if self.payout_model is PayoutModel.FIXED:
            return p
        return 1.0 if self.rng.random() < p else 0.0

    def pull_many(self, count: int) -> float:
        """Total loss of ``count`` pulls of the current bandit."""
        p = self.current_mean
        if self.payout_model is PayoutModel.FIXED:
            return count * p
        return float(self.rng.binomial(count, p))

    def tails_before_head(self, limit: int) -> int:
        """Flip until the first head or ``limit`` tails, whichever is first.

        Returns the number of tails observed; a value below ``limit`` means
        a head followed.  Bernoulli mode only.
        """
        p = self.current_mean
        if p <= 0.0:
            return limit
        if p >= 1.0:
            return 0
        tails = int(self.rng.geometric(p)) - 1
        return min(tails, limit)


def episode_stream(
    dist: DistributionSpec,
    n: int,
    payout_model: PayoutModel,
    master_seed: int,
    episode: int,
) -> BanditStream:
    means = LazyMeans(dist, n, make_rng(master_seed, episode, MEANS_TAG))
    return BanditStream(means, payout_model, make_rng(master_seed, episode, PAYOUT_TAG))


def pull(stream: BanditStream) -> float:
    """One pull of the current bandit."""
    return stream.pull()


def _check_action(action: object) -> Action:
    if action is PULL or action is ADVANCE:
        return action  # type: ignore[return-value]
    raise ContractViolation(f"strategy returned {action!r}, expected PULL or ADVANCE")


def run_episode(
    stream: BanditStream,
    strategy: Strategy,
    k: int,
    seed: int | None = None,
    *,
    stepwise: bool = False,
    trace: list[TraceRow] | None = None,
    episode: int = 0,
) -> EpisodeResult:
    """Spend exactly ``k`` pulls on ``stream`` following ``strategy``.

    The default engine uses the strategy's ``settled`` and ``quiet_run``
    promises to replace runs of identical decisions with a single binomial
    or geometric draw.  ``stepwise=True`` (implied by ``trace``) asks the
    strategy about every single pull instead.  Both modes are deterministic
    for a given seed but consume the payout generator differently.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if seed is not None:
        stream.reseed(seed)
    if trace is not None:
        stepwise = True
    fixed = stream.payout_model is PayoutModel.FIXED
    strategy.begin(stream, k)

    remaining = k
    t = h = 0
    bernoulli_loss = 0
    fixed_parts: list[float] = []
    p = stream.current_mean

    def close_bandit() -> None:
        if fixed and t:
            fixed_parts.append(t * p)

    while remaining:
        obs = Observation(t, h, stream.cursor, remaining, p if (fixed and t) else None)

        if not stepwise:
            if stream.at_last or strategy.settled(obs):
                loss = stream.pull_many(remaining)
                if not fixed:
                    bernoulli_loss += int(loss)
                    h += int(loss)
                t += remaining
                remaining = 0
                break
            run = min(strategy.quiet_run(obs), remaining)
            if run > 0:
                if not fixed:
                    tails = stream.tails_before_head(run)
                    if tails >= run:
                        t += run
                        remaining -= run
                    else:
                        t += tails + 1
                        h += 1
                        bernoulli_loss += 1
                        remaining -= tails + 1
                    continue
                if p < 1.0:
                    t += run
                    remaining -= run
                    continue

        action = _check_action(strategy.decide(obs))
        if action is ADVANCE and not stream.at_last:
            if trace is not None:
                trace.append(TraceRow(episode, stream.cursor, t, h, "ADVANCE", 0.0))
            close_bandit()
            stream.advance()
            p = stream.current_mean
            t = h = 0
            continue
        x = stream.pull()
        if trace is not None:
            trace.append(TraceRow(episode, stream.cursor, t, h, "PULL", x))
        t += 1
        remaining -= 1
        if x == 1.0:
            h += 1
        if not fixed:
            bernoulli_loss += int(x)

    if fixed:
        close_bandit()
        total = math.fsum(fixed_parts)
    else:
        total = float(bernoulli_loss)
    return EpisodeResult(
        total_loss=total,
        flips_used=k,
        settled_index=stream.cursor,
        bandits_visited=stream.cursor,
        info=strategy.info(),
    )
