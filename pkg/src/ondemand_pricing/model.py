"""Core domain types: valuation laws, duration laws, customer classes, workers, scenarios.

All prices are per unit of service time (hourly rates). Valuation laws describe the
distribution of a customer's maximum acceptable rate; duration laws describe how long
an accepted job keeps the worker busy.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache

from .errors import ConfigError, ZeroDensity

# Operational upper bound for laws with unbounded support: cut where the tail
# drops below this mass.
TAIL_CUTOFF = 1e-12

# Grid size used by the regularity scan.
_REGULARITY_GRID = 10_000
_STRICT_MARGIN = 1e-9


# --- valuation laws ---


@dataclass(frozen=True)
class UniformValuation:
    """Valuations uniform on [low, high]."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ConfigError("uniform valuation bounds must be finite")
        if self.low < 0.0 or self.high <= self.low:
            raise ConfigError("uniform valuation requires 0 <= low < high")

    @property
    def lower(self) -> float:
        return self.low

    @property
    def upper(self) -> float:
        return self.high

    def tail(self, p: float) -> float:
        if p <= self.low:
            return 1.0
        if p >= self.high:
            return 0.0
        return (self.high - p) / (self.high - self.low)

    def cdf(self, p: float) -> float:
        return 1.0 - self.tail(p)

    def density(self, p: float) -> float:
        if self.low <= p <= self.high:
            return 1.0 / (self.high - self.low)
        return 0.0

    def sample(self, rng, n: int):
        return rng.uniform(self.low, self.high, n)


@dataclass(frozen=True)
class ExponentialValuation:
    """Valuations exponential with the given hazard rate."""

    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate) or self.rate <= 0.0:
            raise ConfigError("exponential valuation requires rate > 0")

    @property
    def lower(self) -> float:
        return 0.0

    @property
    def upper(self) -> float:
        # operational bound: quantile at the tail cutoff
        return -math.log(TAIL_CUTOFF) / self.rate

    def tail(self, p: float) -> float:
        if p <= 0.0:
            return 1.0
        return math.exp(-self.rate * p)

    def cdf(self, p: float) -> float:
        return 1.0 - self.tail(p)

    def density(self, p: float) -> float:
        if p < 0.0:
            return 0.0
        return self.rate * math.exp(-self.rate * p)

    def sample(self, rng, n: int):
        return rng.exponential(1.0 / self.rate, n)


@dataclass(frozen=True)
class PiecewiseLinearValuation:
    """Valuation law given by a piecewise-linear CDF through the supplied knots.

    Knots are (value, cdf) pairs with strictly increasing values, nondecreasing
    cdf, first cdf 0 and last cdf 1. Density on each knot interval is the
    interval slope; at a knot the right interval's slope applies (the left one
    at the top of the support).
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        knots = tuple((float(v), float(f)) for v, f in self.knots)
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise ConfigError("piecewise valuation needs at least two knots")
        vs = [v for v, _ in knots]
        fs = [f for _, f in knots]
        if any(not math.isfinite(v) or not math.isfinite(f) for v, f in knots):
            raise ConfigError("piecewise valuation knots must be finite")
        if vs[0] < 0.0:
            raise ConfigError("piecewise valuation support must be nonnegative")
        if any(b <= a for a, b in zip(vs, vs[1:])):
            raise ConfigError("piecewise valuation values must strictly increase")
        if any(b < a for a, b in zip(fs, fs[1:])):
            raise ConfigError("piecewise valuation cdf must be nondecreasing")
        if fs[0] != 0.0 or fs[-1] != 1.0:
            raise ConfigError("piecewise valuation cdf must run from 0 to 1")

    @property
    def lower(self) -> float:
        return self.knots[0][0]

    @property
    def upper(self) -> float:
        return self.knots[-1][0]

    def _interval(self, p: float) -> int:
        vs = [v for v, _ in self.knots]
        i = bisect_right(vs, p) - 1
        if i >= len(vs) - 1:
            i = len(vs) - 2
        return max(i, 0)

    def cdf(self, p: float) -> float:
        if p <= self.lower:
            return 0.0
        if p >= self.upper:
            return 1.0
        i = self._interval(p)
        (v0, f0), (v1, f1) = self.knots[i], self.knots[i + 1]
        return f0 + (f1 - f0) * (p - v0) / (v1 - v0)

    def tail(self, p: float) -> float:
        return 1.0 - self.cdf(p)

    def density(self, p: float) -> float:
        if p < self.lower or p > self.upper:
            return 0.0
        i = self._interval(p)
        (v0, f0), (v1, f1) = self.knots[i], self.knots[i + 1]
        return (f1 - f0) / (v1 - v0)

    def sample(self, rng, n: int):
        import numpy as np

        fs = np.array([f for _, f in self.knots])
        vs = np.array([v for v, _ in self.knots])
        return np.interp(rng.random(n), fs, vs)


ValuationLaw = UniformValuation | ExponentialValuation | PiecewiseLinearValuation


def virtual_value(law: ValuationLaw, p: float) -> float:
    """p - tail(p)/density(p), the marginal-revenue transform of the valuation law."""
    if p < law.lower or p > law.upper:
        raise ValueError(f"price {p} outside valuation support [{law.lower}, {law.upper}]")
    d = law.density(p)
    if d <= 0.0:
        raise ZeroDensity(f"valuation density is zero at {p}")
    return p - law.tail(p) / d


@lru_cache(maxsize=None)
def regularity_check(law: ValuationLaw) -> str:
    """Classify a valuation law by scanning virtual values on a support grid.

    Returns "strictly_regular" when the scan is increasing with a positive
    margin, "regular" when merely nondecreasing, "irregular" otherwise.
    """
    lo, hi = law.lower, law.upper
    n = _REGULARITY_GRID
    step = (hi - lo) / (n - 1)
    prev = None
    verdict = "strictly_regular"
    for i in range(n):
        # rounding in lo + step*i must never push the probe past the support
        p = min(lo + step * i, hi)
        d = law.density(p)
        if d <= 0.0:
            return "irregular"
        psi = p - law.tail(p) / d
        if prev is not None:
            diff = psi - prev
            if diff <= -1e-12:
                return "irregular"
            if diff <= _STRICT_MARGIN:
                verdict = "regular"
        prev = psi
    return verdict


# --- duration laws ---


@dataclass(frozen=True)
class ExponentialDuration:
    """Service time exponential with the given completion rate (jobs per hour)."""

    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate) or self.rate <= 0.0:
            raise ConfigError("exponential duration requires rate > 0")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng, n: int):
        return rng.exponential(self.mean, n)


@dataclass(frozen=True)
class DeterministicDuration:
    """Every job takes exactly `value` hours."""

    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value <= 0.0:
            raise ConfigError("deterministic duration requires value > 0")

    @property
    def mean(self) -> float:
        return self.value

    def sample(self, rng, n: int):
        import numpy as np

        return np.full(n, self.value)


@dataclass(frozen=True)
class EmpiricalDuration:
    """Service times resampled uniformly from recorded samples."""

    samples: tuple[float, ...]

    def __post_init__(self) -> None:
        samples = tuple(float(x) for x in self.samples)
        object.__setattr__(self, "samples", samples)
        if not samples:
            raise ConfigError("empirical duration needs at least one sample")
        if any(not math.isfinite(x) or x <= 0.0 for x in samples):
            raise ConfigError("empirical duration samples must be positive and finite")

    @cached_property
    def mean(self) -> float:
        return math.fsum(self.samples) / len(self.samples)

    def sample(self, rng, n: int):
        import numpy as np

        pool = np.asarray(self.samples)
        return pool[rng.integers(0, len(pool), n)]


DurationLaw = ExponentialDuration | DeterministicDuration | EmpiricalDuration


# --- discounting ---


@dataclass(frozen=True)
class ExponentialDiscount:
    """Earnings discounted at rate `rate`; equivalently an exp(rate) evaluation horizon."""

    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate) or self.rate <= 0.0:
            raise ConfigError("discount rate must be positive")


@dataclass(frozen=True)
class MixtureDiscount:
    """Horizon drawn from a finite mixture of exponential discount rates."""

    weights: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        rates = tuple(float(g) for g in self.rates)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "rates", rates)
        if len(weights) != len(rates) or not weights:
            raise ConfigError("mixture weights and rates must have equal nonzero length")
        if any(w <= 0.0 for w in weights):
            raise ConfigError("mixture weights must be positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ConfigError("mixture weights must sum to 1")
        if any(not math.isfinite(g) or g <= 0.0 for g in rates):
            raise ConfigError("mixture rates must be positive")


Discount = ExponentialDiscount | MixtureDiscount


# --- customers, workers, scenario ---


@dataclass(frozen=True)
class CustomerClass:
    """A Poisson stream of jobs with a shared valuation and duration law."""

    arrival_rate: float
    duration: DurationLaw
    valuation: ValuationLaw

    def __post_init__(self) -> None:
        if not math.isfinite(self.arrival_rate) or self.arrival_rate < 0.0:
            raise ConfigError("arrival_rate must be finite and nonnegative")

    @property
    def load(self) -> float:
        """Offered load: arrival rate times mean duration."""
        return self.arrival_rate * self.duration.mean


@dataclass(frozen=True)
class WorkerSpec:
    """A worker: busy-time opportunity cost, quality rank (1 = most preferred), retention."""

    cost: float = 0.0
    rank: int = 1
    commission_retention: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.cost) or self.cost < 0.0:
            raise ConfigError("worker cost must be finite and nonnegative")
        if self.rank < 1:
            raise ConfigError("worker rank must be a positive integer")
        if not (0.0 < self.commission_retention <= 1.0):
            raise ConfigError("commission_retention must lie in (0, 1]")


@dataclass(frozen=True)
class Scenario:
    """A pricing problem instance: customer classes, workers, discounting, queue room."""

    classes: tuple[CustomerClass, ...]
    workers: tuple[WorkerSpec, ...] = (WorkerSpec(),)
    discount: Discount | None = None
    queue_capacity: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "workers", tuple(self.workers))
        if not self.classes:
            raise ConfigError("scenario needs at least one customer class")
        if not self.workers:
            raise ConfigError("scenario needs at least one worker")
        if self.queue_capacity not in (0, 1):
            raise ConfigError("queue_capacity must be 0 or 1")
        ranks = [w.rank for w in self.workers]
        if len(set(ranks)) not in (1, len(ranks)):
            raise ConfigError("worker ranks must be all equal or all distinct")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def sole_worker(self) -> WorkerSpec:
        if len(self.workers) != 1:
            raise ValueError("scenario has more than one worker")
        return self.workers[0]


PriceVector = tuple[float, ...]


def check_prices(scenario: Scenario, prices) -> PriceVector:
    """Validate a per-class price vector against a scenario."""
    prices = tuple(float(p) for p in prices)
    if len(prices) != scenario.num_classes:
        raise ConfigError(
            f"expected {scenario.num_classes} prices, got {len(prices)}"
        )
    if any(not math.isfinite(p) or p < 0.0 for p in prices):
        raise ConfigError("prices must be finite and nonnegative")
    return prices


def clamp_prices(scenario: Scenario, prices) -> PriceVector:
    """Clamp each price into [0, upper support bound] for its class."""
    return tuple(
        min(max(float(p), 0.0), cls.valuation.upper)
        for p, cls in zip(prices, scenario.classes, strict=True)
    )


def apply_commission(cls: CustomerClass, retention: float) -> CustomerClass:
    """Rescale a class's valuation law so pricing can be done in net (retained) rates.

    A customer who accepts gross rate p leaves the worker retention*p, so the
    net-rate acceptance tail is tail(p / retention); that is the original law
    with its support scaled by the retention factor.
    """
    if not (0.0 < retention <= 1.0):
        raise ConfigError("commission_retention must lie in (0, 1]")
    if retention == 1.0:
        return cls
    law = cls.valuation
    if isinstance(law, UniformValuation):
        scaled = UniformValuation(retention * law.low, retention * law.high)
    elif isinstance(law, ExponentialValuation):
        scaled = ExponentialValuation(law.rate / retention)
    elif isinstance(law, PiecewiseLinearValuation):
        scaled = PiecewiseLinearValuation(
            tuple((retention * v, f) for v, f in law.knots)
        )
    else:
        raise ConfigError(f"unsupported valuation law {type(law).__name__}")
    return replace(cls, valuation=scaled)


def per_job_price(rate: float, cls: CustomerClass) -> float:
    """Convert a per-hour rate into the average price of one job for the class."""
    return rate * cls.duration.mean
