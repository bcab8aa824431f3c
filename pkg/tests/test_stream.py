import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streambandit.distributions import DistributionSpec
from streambandit.strategies import AlwaysFirst, KnownPower, KnownUniform, Strategy
from streambandit.stream import (
    ADVANCE,
    PULL,
    BanditStream,
    ContractViolation,
    LazyMeans,
    Observation,
    PayoutModel,
    TRACE_HEADER,
    episode_stream,
    make_rng,
    pull,
    run_episode,
    write_trace_csv,
)

FIXED = PayoutModel.FIXED
BER = PayoutModel.BERNOULLI


class AlwaysAdvance(Strategy):
    def decide(self, obs):
        return ADVANCE


class Returns(Strategy):
    def __init__(self, value):
        self.value = value

    def decide(self, obs):
        return self.value


class Recorder(Strategy):
    """Advances after a fixed number of pulls and logs every observation."""

    def __init__(self, per_bandit):
        self.per_bandit = per_bandit
        self.seen = []

    def decide(self, obs):
        self.seen.append(obs)
        return PULL if obs.flips < self.per_bandit else ADVANCE


def test_fixed_pull_is_exact():
    s = BanditStream([0.37], FIXED)
    assert all(pull(s) == 0.37 for _ in range(20))


def test_bernoulli_zero_mean():
    s = BanditStream([0.0], BER, seed=1)
    assert sum(pull(s) for _ in range(1000)) == 0


def test_bernoulli_frequency():
    s = BanditStream([0.3], BER, seed=2)
    x = [pull(s) for _ in range(10**5)]
    assert set(x) <= {0.0, 1.0}
    assert np.mean(x) == pytest.approx(0.3, abs=0.005)


def test_cursor_stays_at_last():
    s = BanditStream([0.1, 0.2], FIXED)
    assert s.advance()
    assert not s.advance()
    assert s.cursor == 2


def test_stream_rejects_bad_means():
    with pytest.raises(ValueError):
        BanditStream([])
    with pytest.raises(ValueError):
        BanditStream([0.5, 1.5])


def test_single_bandit_forced():
    s = BanditStream([0.4], FIXED)
    r = run_episode(s, AlwaysAdvance(), 10)
    assert r.total_loss == pytest.approx(4.0)
    assert r.settled_index == 1


@pytest.mark.parametrize("stepwise", [False, True])
def test_advance_at_last_is_coerced(stepwise):
    s = BanditStream([0.5, 0.2, 0.9], FIXED)
    r = run_episode(s, AlwaysAdvance(), 5, stepwise=stepwise)
    assert r.total_loss == pytest.approx(4.5)
    assert r.settled_index == 3
    assert r.flips_used == 5
    assert r.loss_per_flip == pytest.approx(0.9)


def test_always_pull_never_moves():
    s = BanditStream([0.5, 0.1, 0.2, 0.3, 0.4], FIXED)
    r = run_episode(s, Returns(PULL), 8)
    assert r.total_loss == pytest.approx(4.0)
    assert r.settled_index == 1


@pytest.mark.parametrize("bad", [None, "PULL", 0, True])
def test_contract_violation(bad):
    with pytest.raises(ContractViolation):
        run_episode(BanditStream([0.5, 0.5], FIXED), Returns(bad), 3)


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        run_episode(BanditStream([0.5]), AlwaysFirst(), 0)


def test_observations_reset_and_reveal():
    s = BanditStream([0.25, 0.75, 0.5], FIXED)
    rec = Recorder(2)
    r = run_episode(s, rec, 7, stepwise=True)
    first = [(o.bandit_index, o.flips, o.heads, o.revealed_mean) for o in rec.seen[:4]]
    assert first == [(1, 0, 0, None), (1, 1, 0, 0.25), (1, 2, 0, 0.25), (2, 0, 0, None)]
    assert [o.remaining_budget for o in rec.seen[:4]] == [7, 6, 5, 5]
    # 2 pulls each on bandits 1 and 2, then 3 forced on the last
    assert r.total_loss == pytest.approx(0.5 + 1.5 + 1.5)


def test_bernoulli_hides_mean():
    rec = Recorder(3)
    run_episode(BanditStream([0.5, 0.5], BER, seed=4), rec, 10, stepwise=True)
    assert all(o.revealed_mean is None for o in rec.seen)
    assert all(0 <= o.heads <= o.flips for o in rec.seen)
    assert rec.seen[0].tails == 0


def test_rng_streams_are_independent_of_tag():
    a = make_rng(5, 0, 0).random(4)
    b = make_rng(5, 0, 1).random(4)
    c = make_rng(5, 1, 0).random(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(a, make_rng(5, 0, 0).random(4))
    # negative seeds fold into 64 bits
    assert np.array_equal(make_rng(-1, 0, 0).random(2), make_rng(2**64 - 1, 0, 0).random(2))


def test_lazy_means_prefix_consistent():
    dist = DistributionSpec.uniform()
    lazy = LazyMeans(dist, 10_000, make_rng(3, 0, 0), chunk=64)
    first = lazy[10]
    assert lazy.generated == 64
    full = LazyMeans(dist, 10_000, make_rng(3, 0, 0), chunk=64).materialize()
    assert first == full[10]
    assert lazy[9999] == full[9999]
    assert lazy[-1] == full[-1]
    with pytest.raises(IndexError):
        lazy[10_000]


def test_means_shared_across_strategies():
    dist = DistributionSpec.uniform()
    a = episode_stream(dist, 50, BER, 9, 3)
    b = episode_stream(dist, 50, FIXED, 9, 3)
    run_episode(a, KnownUniform(50), 200)
    assert np.array_equal(a.means.materialize(), b.means.materialize())


def _episode(strategy, seed, n=30, k=900, stepwise=False, payout=BER):
    s = episode_stream(DistributionSpec.uniform(), n, payout, seed, 0)
    return run_episode(s, strategy, k, stepwise=stepwise)


def test_determinism():
    for stepwise in (False, True):
        a = _episode(KnownUniform(30), 17, stepwise=stepwise)
        b = _episode(KnownUniform(30), 17, stepwise=stepwise)
        assert a == b


def test_reseed_overrides_payouts():
    s1 = BanditStream([0.5], BER, seed=0)
    s2 = BanditStream([0.5], BER, seed=99)
    a = run_episode(s1, AlwaysFirst(), 1000, seed=7)
    b = run_episode(s2, AlwaysFirst(), 1000, seed=7)
    assert a.total_loss == b.total_loss


@pytest.mark.parametrize("make", [lambda: KnownUniform(40), lambda: KnownPower(40, 1), lambda: KnownPower(40, 2)])
def test_fast_engine_matches_stepwise_in_distribution(make):
    fast = [_episode(make(), s, n=40, k=1600).loss_per_flip for s in range(1500)]
    slow = [_episode(make(), s, n=40, k=1600, stepwise=True).loss_per_flip for s in range(1500)]
    se = np.sqrt(np.var(fast) / len(fast) + np.var(slow) / len(slow))
    assert abs(np.mean(fast) - np.mean(slow)) < 4 * se


def test_fast_engine_matches_stepwise_exactly_in_fixed_mode():
    from streambandit.strategies import BetaThreshold, Oracle

    for make in (lambda: BetaThreshold(30), Oracle, AlwaysFirst):
        for seed in range(20):
            a = _episode(make(), seed, payout=FIXED)
            b = _episode(make(), seed, payout=FIXED, stepwise=True)
            assert a.total_loss == b.total_loss
            assert a.settled_index == b.settled_index


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 25), st.integers(1, 400))
def test_budget_exact_and_bounds(seed, n, k):
    r = _episode(KnownUniform(n), seed, n=n, k=k)
    assert r.flips_used == k
    assert 0.0 <= r.loss_per_flip <= 1.0
    assert 1 <= r.settled_index <= n
    assert r.total_loss == int(r.total_loss)


def test_trace_invariants(tmp_path):
    rows = []
    s = episode_stream(DistributionSpec.uniform(), 20, BER, 5, 2)
    strat = KnownUniform(20)
    r = run_episode(s, strat, 400, trace=rows, episode=2)
    idx = [row.bandit_index for row in rows]
    assert idx == sorted(idx)
    assert sum(row.action == "PULL" for row in rows) == 400
    assert sum(row.loss for row in rows) == r.total_loss
    # once past the flip allowance every decision at that bandit is PULL
    for i in set(idx):
        at = [row for row in rows if row.bandit_index == i]
        limit = 20 - min(i, 20)
        past = [row.action for row in at if row.flips > limit]
        assert all(a == "PULL" for a in past)
    path = tmp_path / "trace.csv"
    write_trace_csv(rows, path)
    with open(path, newline="") as fh:
        data = list(csv.reader(fh))
    assert tuple(data[0]) == TRACE_HEADER
    assert len(data) == len(rows) + 1
    assert data[1][0] == "2"


def test_observation_fields():
    o = Observation(5, 2, 3, 10)
    assert o.tails == 3
    assert o.revealed_mean is None
