"""Service and interarrival distributions, plus reproducible named random streams.

All durations are in minutes and rates in 1/minute.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ConfigError",
    "ServiceDistribution",
    "Uniform",
    "TruncatedNormal",
    "Exponential",
    "RngStream",
    "parse_distribution",
    "TAIL_QUANTILE",
]

TAIL_QUANTILE = 0.99

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Raised for invalid model parameters or scenario configuration."""


def _norm_pdf(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


class ServiceDistribution:
    """Common interface for the duration distributions used by the model."""

    def sample(self, rng: "RngStream") -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def cdf(self, t: float) -> float:
        raise NotImplementedError

    def _ppf(self, p: float) -> float:
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise ValueError(f"probability must lie in (0, 1), got {p!r}")
        return _cached_quantile(self, float(p))

    def second_moment(self) -> float:
        m = self.mean()
        return self.variance() + m * m

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def upper_limit(self, tail: float = TAIL_QUANTILE) -> float:
        """Largest elapsed service time the residual-time predictor works with.

        The exact upper support bound for bounded families, otherwise the
        ``tail`` quantile.
        """
        return self.quantile(tail)

    def __deepcopy__(self, memo):
        # immutable; clones of a simulation share distributions
        return self


@lru_cache(maxsize=4096)
def _cached_quantile(dist: ServiceDistribution, p: float) -> float:
    return dist._ppf(p)


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class Uniform(ServiceDistribution):
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise ConfigError(f"uniform requires finite a < b, got ({self.a}, {self.b})")
        if self.a < 0:
            raise ConfigError(f"uniform lower bound must be >= 0, got {self.a}")

    def sample(self, rng):
        return self.a + (self.b - self.a) * rng.random()

    def mean(self):
        return 0.5 * (self.a + self.b)

    def variance(self):
        return (self.b - self.a) ** 2 / 12.0

    def cdf(self, t):
        if t <= self.a:
            return 0.0
        if t >= self.b:
            return 1.0
        return (t - self.a) / (self.b - self.a)

    def _ppf(self, p):
        return self.a + p * (self.b - self.a)

    @property
    def support(self):
        return (self.a, self.b)

    def upper_limit(self, tail=TAIL_QUANTILE):
        return self.b

    def __str__(self):
        return f"uniform({_fmt(self.a)}, {_fmt(self.b)})"


@dataclass(frozen=True)
class TruncatedNormal(ServiceDistribution):
    """Normal(mu, sigma**2) restricted to [lower, upper].

    ``upper=None`` means ``mu + 6 * sigma``.
    """

    mu: float
    sigma: float
    lower: float = 0.0
    upper: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"truncated normal requires sigma > 0, got {self.sigma}")
        if self.upper is None:
            object.__setattr__(self, "upper", self.mu + 6.0 * self.sigma)
        if not self.lower >= 0:
            raise ConfigError(f"truncated normal requires lower >= 0, got {self.lower}")
        if not self.lower < self.upper:
            raise ConfigError(
                f"truncated normal requires lower < upper, got ({self.lower}, {self.upper})"
            )
        alpha = (self.lower - self.mu) / self.sigma
        beta = (self.upper - self.mu) / self.sigma
        mass = _norm_cdf(beta) - _norm_cdf(alpha)
        if not mass > 1e-12:
            raise ConfigError("truncation interval holds no probability mass")
        object.__setattr__(self, "_alpha", alpha)
        object.__setattr__(self, "_beta", beta)
        object.__setattr__(self, "_mass", mass)
        object.__setattr__(self, "_cdf_lo", _norm_cdf(alpha))
        pa, pb = _norm_pdf(alpha), _norm_pdf(beta)
        shift = (pa - pb) / mass
        object.__setattr__(self, "_mean", self.mu + self.sigma * shift)
        object.__setattr__(
            self, "_var", self.sigma ** 2 * (1.0 + (alpha * pa - beta * pb) / mass - shift * shift))

    def sample(self, rng):
        # rejection from the parent normal; acceptance is ~1 for the model's parameters
        while True:
            v = rng.normal(self.mu, self.sigma)
            if self.lower <= v <= self.upper:
                return v

    def mean(self):
        return self._mean

    def variance(self):
        return self._var

    def pdf(self, t: float) -> float:
        if t < self.lower or t > self.upper:
            return 0.0
        return _norm_pdf((t - self.mu) / self.sigma) / (self.sigma * self._mass)

    def cdf(self, t):
        if t <= self.lower:
            return 0.0
        if t >= self.upper:
            return 1.0
        c = (_norm_cdf((t - self.mu) / self.sigma) - self._cdf_lo) / self._mass
        return min(max(c, 0.0), 1.0)

    def _ppf(self, p):
        lo, hi = self.lower, self.upper
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < p:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13:
                break
        return 0.5 * (lo + hi)

    @property
    def support(self):
        return (self.lower, self.upper)

    def __str__(self):
        return (
            f"truncnormal({_fmt(self.mu)}, {_fmt(self.sigma)}, "
            f"{_fmt(self.lower)}, {_fmt(self.upper)})"
        )


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ConfigError(f"exponential requires rate > 0, got {self.rate}")

    def sample(self, rng):
        return rng.expovariate(self.rate)

    def mean(self):
        return 1.0 / self.rate

    def variance(self):
        return 1.0 / self.rate ** 2

    def pdf(self, t: float) -> float:
        return self.rate * math.exp(-self.rate * t) if t >= 0 else 0.0

    def cdf(self, t):
        if t <= 0:
            return 0.0
        return -math.expm1(-self.rate * t)

    def _ppf(self, p):
        return -math.log1p(-p) / self.rate

    @property
    def support(self):
        return (0.0, math.inf)

    def __str__(self):
        return f"exponential({_fmt(self.rate)})"


_DIST_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^)]*)\)\s*$", re.IGNORECASE)
_KINDS = {
    "uniform": (Uniform, (2,)),
    "truncnormal": (TruncatedNormal, (2, 3, 4)),
    "exponential": (Exponential, (1,)),
}


def parse_distribution(text: str) -> ServiceDistribution:
    """Parse ``uniform(2, 5)``, ``truncnormal(mu, sigma[, lower[, upper]])`` or
    ``exponential(rate)``."""
    m = _DIST_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse distribution {text!r}")
    kind = m.group(1).lower()
    if kind not in _KINDS:
        raise ConfigError(f"unknown distribution kind {kind!r} in {text!r}")
    cls, arities = _KINDS[kind]
    try:
        args = [float(v) for v in m.group(2).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"non-numeric parameter in {text!r}") from None
    if len(args) not in arities:
        raise ConfigError(f"{kind} takes {arities} parameters, got {len(args)} in {text!r}")
    return cls(*args)


def _label_words(label: str) -> tuple[int, ...]:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


class RngStream:
    """A named, reproducible uniform stream (SplitMix64).

    The whole generator state is one integer, so copying a stream (which the
    lookahead policy does for every candidate) is essentially free.
    """

    __slots__ = ("seed", "label", "_state")

    def __init__(self, seed: int, label: str):
        if not 0 <= seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.label = label
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=_label_words(label))
        self._state = int(ss.generate_state(1, np.uint64)[0])

    def __deepcopy__(self, memo):
        new = RngStream.__new__(RngStream)
        new.seed, new.label, new._state = self.seed, self.label, self._state
        return new

    def __eq__(self, other):
        return isinstance(other, RngStream) and (self.seed, self.label, self._state) == (
            other.seed, other.label, other._state)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, label={self.label!r})"

    def next_uint64(self) -> int:
        s = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        self._state = s
        z = ((s ^ (s >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform on [0, 1)."""
        return (self.next_uint64() >> 11) * (1.0 / 9007199254740992.0)

    def expovariate(self, rate: float) -> float:
        return -math.log(1.0 - self.random()) / rate

    def normal(self, mu: float, sigma: float) -> float:
        u1 = 1.0 - self.random()
        u2 = self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def bernoulli(self, p: float) -> bool:
        return self.random() < p
