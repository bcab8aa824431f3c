import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from streambandit.bounds import eta_asymptote
from streambandit.distributions import DistributionSpec
from streambandit.estimation import AdaptiveStrategy
from streambandit.strategies import (
    AlwaysFirst,
    BetaThreshold,
    KnownPower,
    KnownUniform,
    Oracle,
    StrategyKind,
    StrategySpec,
    decide_beta_threshold,
    decide_known_power,
    decide_known_uniform,
    decide_oracle,
    power_threshold,
    truncate_n,
    uniform_threshold,
)
from streambandit.stream import (
    ADVANCE,
    PULL,
    BanditStream,
    ContractViolation,
    Observation,
    PayoutModel,
    episode_stream,
    run_episode,
)

FIXED = PayoutModel.FIXED
BER = PayoutModel.BERNOULLI
UNIFORM = DistributionSpec.uniform()


def obs(t, h, i, revealed=None):
    return Observation(t, h, i, 10**6, revealed)


def test_known_uniform_examples():
    assert decide_known_uniform(obs(0, 0, 1), 100) is PULL
    assert decide_known_uniform(obs(5, 2, 1), 100) is ADVANCE
    assert decide_known_uniform(obs(100, 40, 1), 100) is PULL
    assert decide_known_uniform(obs(5, 1, 1), 100) is PULL


def test_known_uniform_past_truncation():
    assert uniform_threshold(150, 100) == 0
    # i > N' uses the i = N' rule: allowance 0, so one flip settles
    assert decide_known_uniform(obs(0, 0, 150), 100) is PULL
    assert decide_known_uniform(obs(1, 1, 150), 100) is PULL


def test_known_power_examples():
    assert power_threshold(1, 100, 1) == pytest.approx(50)
    assert decide_known_power(obs(10, 0, 1), 100, 1) is PULL
    assert power_threshold(1, 100, 2) == pytest.approx(10)
    assert decide_known_power(obs(4, 1, 1), 100, 2) is ADVANCE
    assert decide_known_power(obs(11, 7, 1), 100, 2) is PULL


def test_known_power_threshold_is_real_valued():
    # f = sqrt(50) ~ 7.07: t = 7 is still inside, t = 8 is past
    assert decide_known_power(obs(7, 1, 51), 100, 2) is ADVANCE
    assert decide_known_power(obs(8, 1, 51), 100, 2) is PULL


def test_power_threshold_density_scaling():
    assert power_threshold(1, 100, 1, 4.0) == pytest.approx(200)
    assert power_threshold(1, 100, 2, 4.0) == pytest.approx(20)


def test_beta_threshold_examples():
    assert decide_beta_threshold(obs(1, 0, 1, 0.4), 0.4, 2) is PULL
    assert decide_beta_threshold(obs(1, 0, 1, 0.6), 0.6, 2) is ADVANCE
    assert decide_beta_threshold(obs(1, 0, 1, 0.99), 0.99, 1) is PULL
    assert decide_beta_threshold(obs(0, 0, 1), None, 2) is PULL
    with pytest.raises(ContractViolation):
        decide_beta_threshold(obs(1, 0, 1), None, 2)


def test_beta_threshold_requires_fixed_payout():
    with pytest.raises(ContractViolation):
        run_episode(BanditStream([0.5, 0.5], BER), BetaThreshold(2), 5)


def test_oracle_examples():
    r = run_episode(BanditStream([0.5, 0.1, 0.9], FIXED), Oracle(), 10)
    assert r.total_loss == pytest.approx(1.0)
    assert r.settled_index == 2
    assert decide_oracle([0.5, 0.1, 0.9]) == 2
    r = run_episode(BanditStream([0.3], FIXED), Oracle(), 7)
    assert r.loss_per_flip == pytest.approx(0.3)


def test_oracle_mean_loss():
    lpf = [run_episode(episode_stream(UNIFORM, 100, FIXED, 1, e), Oracle(), 50).loss_per_flip
           for e in range(10**4)]
    assert np.mean(lpf) == pytest.approx(1 / 101, abs=0.001)


def test_truncate_n():
    assert truncate_n(10**6, 10**4, 1) == 100
    assert truncate_n(50, 10**6, 1) == 50
    assert truncate_n(10**6, 10**6, 2) == 10**4
    with pytest.raises(ValueError):
        truncate_n(0, 5)


def test_power_m1_differs_from_uniform():
    o = obs(3, 1, 1)
    assert decide_known_uniform(o, 100) is PULL
    assert decide_known_power(o, 100, 1) is ADVANCE


@given(st.integers(0, 300), st.integers(0, 300), st.integers(1, 120), st.integers(1, 100))
def test_settlement_absorbs(t, extra, i, n_eff):
    # once t exceeds the allowance, no number of heads makes the rule leave
    for rule, limit in ((lambda o: decide_known_uniform(o, n_eff), uniform_threshold(i, n_eff)),
                        (lambda o: decide_known_power(o, n_eff, 2), power_threshold(i, n_eff, 2))):
        if t > limit:
            for h in (0, t // 2, t):
                assert rule(obs(t + extra, min(h, t + extra), i)) is PULL


def _arrival_and_stay(n: int, episodes: int):
    arrived = np.zeros(n + 1)
    stayed = np.zeros(n + 1)
    for e in range(episodes):
        s = episode_stream(UNIFORM, n, BER, 23, e)
        r = run_episode(s, KnownUniform(n), n * n)
        arrived[1 : r.settled_index + 1] += 1
        stayed[r.settled_index] += 1
    return arrived, stayed


def test_known_uniform_stay_probabilities():
    n, episodes = 20, 20_000
    arrived, stayed = _arrival_and_stay(n, episodes)
    for i in range(1, n // 2 + 1):
        q = 2 / (n - (i - 1))
        p_hat = stayed[i] / arrived[i]
        se = math.sqrt(q * (1 - q) / arrived[i])
        assert abs(p_hat - q) <= 3 * se + 1e-12, i
        b = 2 * (n - i) / (n * (n - 1))
        f_hat = stayed[i] / episodes
        se_b = math.sqrt(b * (1 - b) / episodes)
        assert abs(f_hat - b) <= 3 * se_b, i


def test_beta_threshold_matches_scaled_asymptote():
    # power(1, 4): thresholds shrink by 4, so loss tracks 2 / (4 n)
    dist = DistributionSpec.power(1, 4.0)
    spec = StrategySpec.parse("beta-threshold")
    lpf = []
    for e in range(3000):
        s = episode_stream(dist, 100, FIXED, 3, e)
        lpf.append(run_episode(s, spec.build(100, 10**6, dist), 10**6).loss_per_flip)
    assert np.mean(lpf) == pytest.approx(eta_asymptote(100, 1, 4.0), rel=0.15)


def test_spec_parse_and_build():
    s = StrategySpec.parse("known-power:m=2,c=1")
    assert s.kind is StrategyKind.KNOWN_POWER and s.m == 2 and s.c == 1.0
    assert StrategySpec.parse(str(s)) == s
    built = StrategySpec.parse("known-power").build(10**6, 10**6, DistributionSpec.power(2))
    assert isinstance(built, KnownPower) and built.n_eff == 10**4 and built.m == 2
    assert StrategySpec.parse("known-uniform").build(10**6, 10**4, UNIFORM).n_eff == 100
    assert isinstance(StrategySpec.parse("oracle").build(5, 5, UNIFORM), Oracle)
    assert isinstance(StrategySpec.parse("always-first").build(5, 5, UNIFORM), AlwaysFirst)
    assert isinstance(StrategySpec.parse("adaptive").build(100, 10**4, UNIFORM), AdaptiveStrategy)
    bt = StrategySpec.parse("beta-threshold:n_eff=7").build(50, 10, DistributionSpec.power(1, 2.0))
    assert bt.n_eff == 7 and bt.c == 2.0
    adaptive = StrategySpec.parse("adaptive:m=1|2,B=10,sample_exp=0.9,pool_exp=0.2")
    assert adaptive.estimation.m_candidates == (1, 2)
    assert StrategySpec.parse(str(adaptive)) == adaptive


@pytest.mark.parametrize("text", ["bogus", "known-uniform:m=2", "oracle:c=1", "known-power:m=x",
                                  "known-power:m=0", "known-power:c=-1", "adaptive:zzz=1"])
def test_spec_parse_errors(text):
    with pytest.raises(ValueError):
        StrategySpec.parse(text)


def test_n_eff_cannot_exceed_n():
    with pytest.raises(ValueError):
        StrategySpec.parse("known-uniform:n_eff=20").build(10, 100, UNIFORM)
