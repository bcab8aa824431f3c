"""Laws for the latent bandit means.

Three families are supported, all with a power-law left tail:

* ``Uniform``      -- U[0, 1]
* ``Power``        -- CDF ``x**m`` on [0, 1]
* ``ScaledPower``  -- CDF ``min(c * x**m, 1)``; for ``c < 1`` the leftover
  mass ``1 - c`` sits on the point 1.

Only the left tail matters for loss asymptotics, so the scaled family is the
pure power law stretched by ``c ** (-1/m)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._util import parse_params

__all__ = [
    "DistKind",
    "DistributionSpec",
    "UNIFORM",
    "cdf",
    "pdf",
    "quantile",
    "sample_mean",
    "sample_means",
    "prior_mean",
    "expected_min_exact",
    "expected_min_asymptotic",
    "expected_min",
]


class DistKind(enum.Enum):
    UNIFORM = "uniform"
    POWER = "power"
    SCALED_POWER = "scaled-power"


@dataclass(frozen=True)
class DistributionSpec:
    kind: DistKind = DistKind.UNIFORM
    m: int = 1
    c: float = 1.0

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"c must be a positive finite real, got {self.c!r}")
        object.__setattr__(self, "c", float(self.c))
        if self.kind is DistKind.UNIFORM and (self.m != 1 or self.c != 1.0):
            raise ValueError("uniform distribution takes m=1, c=1")
        if self.kind is DistKind.POWER and self.c != 1.0:
            raise ValueError("power distribution takes c=1; use scaled-power")

    @classmethod
    def uniform(cls) -> DistributionSpec:
        return cls(DistKind.UNIFORM)

    @classmethod
    def power(cls, m: int, c: float = 1.0) -> DistributionSpec:
        if c != 1.0:
            return cls(DistKind.SCALED_POWER, m, c)
        return cls(DistKind.POWER, m)

    @property
    def scale(self) -> float:
        """``c ** (-1/m)``: the factor applied to every left-tail quantity."""
        return self.c ** (-1.0 / self.m)

    @classmethod
    def parse(cls, text: str) -> DistributionSpec:
        """Parse ``uniform``, ``power:m=2``, ``power:m=2,c=1.5`` or
        ``scaled-power:m=1,c=2``."""
        kind, params = parse_params(text, "distribution")
        unknown = set(params) - {"m", "c"}
        if unknown:
            raise ValueError(f"unknown distribution parameter(s) {sorted(unknown)} in {text!r}")
        try:
            m_raw = float(params.get("m", "1"))
            c = float(params.get("c", "1"))
        except ValueError as exc:
            raise ValueError(f"non-numeric distribution parameter in {text!r}") from exc
        if m_raw != int(m_raw):
            raise ValueError(f"m must be a positive integer in {text!r}")
        m = int(m_raw)
        if kind == "uniform":
            if params:
                raise ValueError("uniform takes no parameters")
            return cls.uniform()
        if kind == "power":
            return cls.power(m, c)
        if kind in ("scaled-power", "scaledpower", "scaled_power"):
            return cls(DistKind.SCALED_POWER, m, c)
        raise ValueError(f"unknown distribution kind {kind!r}")

    def __str__(self) -> str:
        if self.kind is DistKind.UNIFORM:
            return "uniform"
        if self.kind is DistKind.POWER:
            return f"power:m={self.m}"
        return f"power:m={self.m},c={self.c!r}"


UNIFORM = DistributionSpec.uniform()


def _check_unit(x: float, name: str = "x") -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name}={x!r} outside [0, 1]")


def cdf(spec: DistributionSpec, x: float) -> float:
    _check_unit(x)
    if x == 1.0:
        return 1.0  # includes the atom when c < 1
    return min(spec.c * x**spec.m, 1.0)


def pdf(spec: DistributionSpec, x: float) -> float:
    """Density of the absolutely continuous part (the atom at 1 for ``c < 1``
    is not included)."""
    _check_unit(x)
    if spec.c * x**spec.m > 1.0:
        return 0.0
    return spec.c * spec.m * x ** (spec.m - 1)


def quantile(spec: DistributionSpec, u: float) -> float:
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u={u!r} outside [0, 1]")
    return min((u / spec.c) ** (1.0 / spec.m), 1.0)


def sample_mean(spec: DistributionSpec, u: float) -> float:
    """Inverse-CDF draw of one latent mean from a uniform variate ``u``."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"u={u!r} outside (0, 1)")
    return quantile(spec, u)


def sample_means(spec: DistributionSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size)
    if spec.kind is DistKind.UNIFORM:
        return u
    x = (u / spec.c) ** (1.0 / spec.m)
    return np.minimum(x, 1.0)


def prior_mean(spec: DistributionSpec) -> float:
    """E[p] under the law (including the atom at 1 when ``c < 1``)."""
    m, c = spec.m, spec.c
    if c >= 1.0:
        # support is [0, c**(-1/m)]
        return m / (m + 1) * spec.scale
    return m / (m + 1) * c + (1.0 - c)


def expected_min_exact(n: int, m: int) -> float:
    """E[min of n draws] for the CDF ``x**m`` on [0, 1], via log-gamma."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    log_val = (
        math.log(n)
        + math.lgamma(1.0 / m)
        + math.lgamma(n)
        - math.log(m)
        - math.lgamma(n + 1.0 / m + 1.0)
    )
    return math.exp(log_val)


def expected_min_asymptotic(n: int, m: int) -> float:
    """Large-n form ``Gamma(1/m) / (m n**(1/m))``; poor for small n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.gamma(1.0 / m) / (m * n ** (1.0 / m))


def expected_min(spec: DistributionSpec, n: int) -> float:
    """Oracle loss per flip for ``n`` bandits drawn from ``spec``.

    Exact for Uniform/Power and for ScaledPower with ``c >= 1``.  For
    ``c < 1`` the atom at 1 is handled exactly as well: the minimum is 1 only
    when all draws land on the atom.
    """
    if spec.c >= 1.0:
        return expected_min_exact(n, spec.m) * spec.scale
    # X = min(Y * s, 1) where Y ~ x**m on [0,1], s = c**(-1/m) > 1.
    # E[min_i X_i] = E[min(s * min_i Y_i, 1)] = integral_0^1 P(s*minY > t) dt
    #             = integral_0^1 (1 - c t**m)**n dt.
    from scipy.integrate import quad

    m, c = spec.m, spec.c
    val, _ = quad(lambda t: (1.0 - c * t**m) ** n, 0.0, 1.0, limit=200,
                  points=[min(1.0, c ** (-1.0 / m) / max(n, 1) ** (1.0 / m))])
    return val
