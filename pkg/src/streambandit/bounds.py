"""Analytic reference values for the streaming bandit problem.

The fixed-payout limit sequences are built by backward induction over the
number of bandits *remaining*: ``eta[1]`` is the prior mean (one bandit left,
nothing to compare against) and each extra bandit lowers the optimal loss per
flip by ``eta**(m+1) / (m+1)``.  With ``m = 1`` this is the uniform-prior
sequence ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundReport",
    "beta_seq",
    "eta_seq",
    "eta_asymptote",
    "threshold_table",
    "lower_bound_total",
    "upper_bound_per_flip",
    "prob_observation",
    "posterior_mean",
    "beta_asymptote_check",
    "bound_report",
]


def eta_seq(n: int, m: int, *, base: float | None = None) -> np.ndarray:
    """``(eta_1, ..., eta_n)`` for the CDF ``x**m``.

    ``base`` overrides ``eta_1`` (defaults to the prior mean ``m/(m+1)``);
    it exists so tests can check that a wrong base case is detected.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    out = np.empty(n)
    e = m / (m + 1) if base is None else float(base)
    inv = 1.0 / (m + 1)
    out[0] = e
    for i in range(1, n):
        e = e - inv * e ** (m + 1)
        out[i] = e
    return out


def beta_seq(n: int, *, base: float | None = None) -> np.ndarray:
    """``(beta_1, ..., beta_n)``: ``beta_1 = 1/2``, ``beta_i = beta_{i-1} - beta_{i-1}**2 / 2``."""
    return eta_seq(n, 1, base=base)


def eta_asymptote(n: int, m: int, c: float = 1.0) -> float:
    """Large-n limit ``c**(-1/m) * ((m+1)/(m n))**(1/m)``; ``2/n`` for the uniform law."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return c ** (-1.0 / m) * ((m + 1) / (m * n)) ** (1.0 / m)


def threshold_table(n: int, m: int, c: float = 1.0) -> np.ndarray:
    """Settle thresholds for fixed-payout bandits, indexed by bandits remaining.

    ``table[r]`` is the optimal continuation value with ``r`` bandits still to
    come: settle on the current bandit iff its revealed loss is below it.
    ``table[0] = 1`` forces settlement on the last bandit.
    """
    table = np.empty(n)
    table[0] = 1.0
    if n > 1:
        table[1:] = np.minimum(eta_seq(n - 1, m) * c ** (-1.0 / m), 1.0)
    return table


def lower_bound_total(k: int, m: int = 1) -> float:
    """Total loss no strategy can beat with ``k`` pulls: ``m/(4(m+1)) k**(m/(m+1))``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return m / (4.0 * (m + 1)) * k ** (m / (m + 1))


def upper_bound_per_flip(n_eff: int, m: int = 1, c: float = 1.0, strategy: str = "known-power") -> float:
    """Guaranteed loss per flip of the known-distribution strategies.

    ``known-uniform``: ``6 / n_eff``.  ``known-power``:
    ``c**(-1/m) * 2**(1/m) * e * n_eff**(-1/m)``.
    """
    if n_eff < 1:
        raise ValueError("n_eff must be >= 1")
    if strategy == "known-uniform":
        return 6.0 / n_eff
    if strategy == "known-power":
        return c ** (-1.0 / m) * 2.0 ** (1.0 / m) * math.e * n_eff ** (-1.0 / m)
    raise ValueError(f"no upper bound for strategy {strategy!r}")


def _check_counts(a: int, b: int) -> None:
    if a < 0 or b < 0:
        raise ValueError("head and tail counts must be >= 0")


def prob_observation(a: int, b: int, m: int = 1) -> float:
    """Marginal probability of ``a`` heads and ``b`` tails (in any order) from
    a bandit whose mean has CDF ``x**m``."""
    _check_counts(a, b)
    log_p = (
        math.log(m)
        + math.lgamma(a + b + 1)
        + math.lgamma(a + m)
        - math.lgamma(a + 1)
        - math.lgamma(a + b + m + 1)
    )
    return math.exp(log_p)


def posterior_mean(a: int, b: int, m: int = 1) -> float:
    _check_counts(a, b)
    return (a + m) / (a + b + m + 1)


def beta_asymptote_check(n: int) -> float:
    """``n * beta_n``; tends to 2 (from below) as n grows."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return n * float(beta_seq(n)[-1])


@dataclass(frozen=True)
class BoundReport:
    n: int
    m: int
    c: float
    k: int | None
    beta_or_eta: np.ndarray
    asymptote: float
    lower_total_small_k: float | None
    upper_per_flip: float
    upper_per_flip_power: float

    @property
    def tail(self) -> float:
        return float(self.beta_or_eta[-1]) * self.c ** (-1.0 / self.m)

    def rows(self) -> list[tuple[str, float | int | str]]:
        rows: list[tuple[str, float | int | str]] = [
            ("n", self.n),
            ("m", self.m),
            ("c", self.c),
            ("eta_n", self.tail),
            ("asymptote", self.asymptote),
            ("upper_per_flip", self.upper_per_flip),
            ("upper_per_flip_power", self.upper_per_flip_power),
        ]
        if self.k is not None:
            rows.insert(3, ("k", self.k))
            rows.append(("lower_total", self.lower_total_small_k))
            rows.append(("lower_per_flip", self.lower_total_small_k / self.k))
        return rows


def bound_report(n: int, m: int = 1, c: float = 1.0, k: int | None = None) -> BoundReport:
    seq = eta_seq(n, m)
    power = upper_bound_per_flip(n, m, c, "known-power")
    if m == 1 and c == 1.0:
        upper = upper_bound_per_flip(n, 1, 1.0, "known-uniform")
    else:
        upper = power
    return BoundReport(
        n=n,
        m=m,
        c=c,
        k=k,
        beta_or_eta=seq,
        asymptote=eta_asymptote(n, m, c),
        lower_total_small_k=None if k is None else lower_bound_total(k, m),
        upper_per_flip=upper,
        upper_per_flip_power=power,
    )
