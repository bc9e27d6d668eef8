"""Discrete-event Monte Carlo ground truth for the analytic models.

Every replication draws per-class Poisson arrivals, valuations, and durations
from its own PRNG streams (PCG64 seeded via SeedSequence with
spawn_key=(replication, class_index)), so adding a class or changing routing
never perturbs another stream. Earnings accrue at (price - cost) per busy
hour; rate estimates discard a warmup prefix, discounted estimates run from
the idle start because the start state is part of the quantity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from statistics import NormalDist

import numpy as np

from .errors import ConfigError, ModelMismatch
from .model import (
    ExponentialDiscount,
    ExponentialDuration,
    MixtureDiscount,
    Scenario,
)

# Discount weight e^{-gamma t} is below 4e-18 past this many inverse rates, so
# discounted runs truncate their horizon there.
_DISCOUNT_SPAN = 40.0


@dataclass(frozen=True)
class SimConfig:
    """Simulation sizing: horizon (directly or via expected arrivals), seed, warmup."""

    scenario: Scenario
    expected_arrivals: float = 100_000.0
    horizon: float | None = None
    replications: int = 30
    base_seed: int = 20260815
    warmup_fraction: float = 0.1
    trace_path: str | None = None

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not (0.0 <= self.warmup_fraction <= 0.5):
            raise ConfigError("warmup_fraction must lie in [0, 0.5]")
        if self.horizon is not None and not self.horizon > 0.0:
            raise ConfigError("horizon must be positive")
        if self.expected_arrivals <= 0.0:
            raise ConfigError("expected_arrivals must be positive")

    def horizon_hours(self) -> float:
        if self.horizon is not None:
            return self.horizon
        total = sum(cls.arrival_rate for cls in self.scenario.classes)
        if total <= 0.0:
            raise ConfigError("cannot size a horizon: total arrival rate is zero")
        return self.expected_arrivals / total


@dataclass(frozen=True)
class Counts:
    arrivals: int = 0
    accepted: int = 0
    lost_busy: int = 0
    lost_price: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(
            self.arrivals + other.arrivals,
            self.accepted + other.accepted,
            self.lost_busy + other.lost_busy,
            self.lost_price + other.lost_price,
        )


@dataclass(frozen=True)
class SimStats:
    """Replication summary. `mean` is an hourly rate for kind "rate" and a
    discounted currency amount for kind "value"; for fleets it totals across
    workers with `per_worker_reps` holding the worker-major breakdown."""

    kind: str
    mean: float
    se: float
    ci_low: float
    ci_high: float
    replications: int
    rep_values: tuple[float, ...]
    counts: Counts
    per_worker_reps: tuple[tuple[float, ...], ...] | None = None

    def worker_mean_se(self, index: int) -> tuple[float, float]:
        if self.per_worker_reps is None:
            raise ValueError("no per-worker breakdown recorded")
        return _mean_se(self.per_worker_reps[index])

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "mean": self.mean,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "replications": self.replications,
            "rep_values": list(self.rep_values),
            "counts": {
                "arrivals": self.counts.arrivals,
                "accepted": self.counts.accepted,
                "lost_busy": self.counts.lost_busy,
                "lost_price": self.counts.lost_price,
            },
        }
        if self.per_worker_reps is not None:
            out["per_worker_mean"] = [
                _mean_se(row)[0] for row in self.per_worker_reps
            ]
        return out


def _mean_se(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, se


def _stats(kind: str, rep_values, counts: Counts,
           per_worker_reps=None) -> SimStats:
    mean, se = _mean_se(rep_values)
    return SimStats(
        kind=kind,
        mean=mean,
        se=se,
        ci_low=mean - 1.96 * se,
        ci_high=mean + 1.96 * se,
        replications=len(rep_values),
        rep_values=tuple(float(v) for v in rep_values),
        counts=counts,
        per_worker_reps=per_worker_reps,
    )


def _class_stream(base_seed: int, rep: int, class_index: int):
    return np.random.default_rng(
        np.random.SeedSequence(base_seed, spawn_key=(rep, class_index))
    )


def _rep_stream(base_seed: int, rep: int):
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(rep,)))


def _class_arrivals(cls, rng, horizon: float):
    """Arrival times, valuations, and durations for one class on [0, horizon].

    Draws depend only on the stream and horizon, never on prices or routing,
    so common-random-number comparisons stay paired.
    """
    lam = cls.arrival_rate
    if lam <= 0.0:
        empty = np.empty(0)
        return empty, empty, empty
    expected = lam * horizon
    block = int(expected + 6.0 * math.sqrt(expected) + 16.0)
    times = np.cumsum(rng.exponential(1.0 / lam, block))
    while times[-1] < horizon:
        more = np.cumsum(rng.exponential(1.0 / lam, block))
        times = np.concatenate([times, times[-1] + more])
    n = int(np.searchsorted(times, horizon, side="right"))
    times = times[:n]
    valuations = np.asarray(cls.valuation.sample(rng, n), dtype=float)
    durations = np.asarray(cls.duration.sample(rng, n), dtype=float)
    return times, valuations, durations


def _merged_events(scenario: Scenario, base_seed: int, rep: int, horizon: float):
    """Time-ordered (time, class, valuation, duration) lists for one replication."""
    all_t, all_k, all_v, all_d = [], [], [], []
    for k, cls in enumerate(scenario.classes):
        rng = _class_stream(base_seed, rep, k)
        t, v, d = _class_arrivals(cls, rng, horizon)
        all_t.append(t)
        all_k.append(np.full(t.size, k, dtype=int))
        all_v.append(v)
        all_d.append(d)
    times = np.concatenate(all_t) if all_t else np.empty(0)
    order = np.argsort(times, kind="stable")
    return (
        times[order].tolist(),
        np.concatenate(all_k)[order].tolist(),
        np.concatenate(all_v)[order].tolist(),
        np.concatenate(all_d)[order].tolist(),
    )


class _TraceWriter:
    """Optional per-event CSV log (first replication only)."""

    def __init__(self, path: str | None):
        self._file = None
        self._writer = None
        if path is not None:
            self._file = open(path, "w", newline="")
            self._writer = csv.writer(self._file)
            self._writer.writerow(["time", "event", "class", "worker", "value"])

    def row(self, time: float, event: str, cls: int, worker, value: float) -> None:
        if self._writer is not None:
            self._writer.writerow([repr(time), event, cls, "" if worker is None else worker, repr(value)])

    def close(self) -> None:
        if self._file is not None:
            self._file.close()


def _window_overlap(start: float, end: float, lo: float, hi: float) -> float:
    return max(0.0, min(end, hi) - max(start, lo))


def _check_matrix(scenario: Scenario, prices) -> list[list[float]]:
    n, k = len(scenario.workers), scenario.num_classes
    try:
        matrix = [[float(p) for p in row] for row in prices]
    except TypeError as exc:
        raise ConfigError("fleet simulation needs one price row per worker") from exc
    if len(matrix) != n or any(len(row) != k for row in matrix):
        raise ConfigError(f"expected a {n}x{k} price matrix")
    return matrix


def simulate(config: SimConfig, prices) -> SimStats:
    """Simulate the loss system: a lone worker, or a ranked fleet under
    best-affordable-worker choice. Returns rate statistics over replications."""
    scenario = config.scenario
    if scenario.queue_capacity != 0:
        raise ModelMismatch("use simulate_queue for scenarios with waiting room")
    if scenario.discount is not None:
        raise ModelMismatch("use simulate_discounted for discounted scenarios")
    single = len(scenario.workers) == 1
    if single:
        matrix = [_check_single_prices(scenario, prices)]
    else:
        matrix = _check_matrix(scenario, prices)
        ranks = [w.rank for w in scenario.workers]
        if len(set(ranks)) != len(ranks):
            raise ConfigError("fleet simulation needs distinct quality ranks")
    order = sorted(range(len(scenario.workers)), key=lambda i: scenario.workers[i].rank)
    costs = [w.cost for w in scenario.workers]
    horizon = config.horizon_hours()
    warm = config.warmup_fraction * horizon
    span = horizon - warm

    trace = _TraceWriter(config.trace_path)
    rep_totals = []
    worker_reps: list[list[float]] = [[] for _ in scenario.workers]
    counts = Counts()
    for rep in range(config.replications):
        log = trace if rep == 0 else _TraceWriter(None)
        times, ks, vs, ds = _merged_events(scenario, config.base_seed, rep, horizon)
        busy_until = [0.0] * len(scenario.workers)
        earned = [0.0] * len(scenario.workers)
        n_arr = n_acc = n_busy = n_price = 0
        for t, k, v, d in zip(times, ks, vs, ds):
            n_arr += 1
            if v < min(matrix[i][k] for i in range(len(matrix))):
                n_price += 1
                log.row(t, "lost_price", k, None, v)
                continue
            chosen = None
            for i in order:
                if busy_until[i] <= t and matrix[i][k] <= v:
                    chosen = i
                    break
            if chosen is None:
                n_busy += 1
                log.row(t, "lost_busy", k, None, v)
                continue
            n_acc += 1
            busy_until[chosen] = t + d
            earned[chosen] += (matrix[chosen][k] - costs[chosen]) * _window_overlap(
                t, t + d, warm, horizon
            )
            log.row(t, "accept", k, chosen, v)
        assert n_acc + n_busy + n_price == n_arr
        counts += Counts(n_arr, n_acc, n_busy, n_price)
        rates = [e / span for e in earned]
        for i, r in enumerate(rates):
            worker_reps[i].append(r)
        rep_totals.append(sum(rates))
    trace.close()
    return _stats(
        "rate",
        rep_totals,
        counts,
        per_worker_reps=tuple(tuple(row) for row in worker_reps),
    )


def _check_single_prices(scenario: Scenario, prices) -> list[float]:
    out = [float(p) for p in prices]
    if len(out) != scenario.num_classes:
        raise ConfigError(
            f"expected {scenario.num_classes} prices, got {len(out)}"
        )
    return out


def simulate_discounted(config: SimConfig, prices, gamma: float | None = None) -> SimStats:
    """Estimate discounted earnings from an idle start for a lone worker.

    Each replication chops its horizon into windows of 40 inverse discount
    rates. Poisson arrivals over disjoint intervals are independent, so every
    window restarted idle is a fresh draw of the idle-start value (the weight
    past a window end is below 5e-18); the replication reports the window
    mean. With `gamma` given, every replication discounts at that rate.
    Otherwise the scenario's discount applies; a mixture draws its branch
    rate per replication, and each replication is weighted by its branch
    rate so the estimate targets the same branch-rate-weighted objective as
    mixture_horizon_value.
    """
    scenario = config.scenario
    if len(scenario.workers) != 1 or scenario.queue_capacity != 0:
        raise ModelMismatch("simulate_discounted applies to a lone worker, no queue")
    mixture = False
    if gamma is None:
        if isinstance(scenario.discount, ExponentialDiscount):
            gamma = scenario.discount.rate
        elif isinstance(scenario.discount, MixtureDiscount):
            mixture = True
        else:
            raise ConfigError("no discount rate given and none in the scenario")
    elif not gamma > 0.0:
        raise ConfigError("gamma must be positive")
    price_list = _check_single_prices(scenario, prices)
    cost = scenario.workers[0].cost
    base = Scenario(classes=scenario.classes, workers=scenario.workers)
    budget = config.horizon_hours()

    rep_values = []
    counts = Counts()
    mix = scenario.discount if mixture else None
    for rep in range(config.replications):
        if mixture:
            aux = _rep_stream(config.base_seed, rep)
            g = float(aux.choice(np.asarray(mix.rates), p=np.asarray(mix.weights)))
        else:
            g = float(gamma)
        window = min(_DISCOUNT_SPAN / g, budget)
        n_win = max(1, int(budget / window))
        times, ks, vs, ds = _merged_events(base, config.base_seed, rep, n_win * window)
        busy_until = 0.0
        busy_win = -1
        value = 0.0
        n_arr = n_acc = n_busy = n_price = 0
        for t, k, v, d in zip(times, ks, vs, ds):
            w = int(t / window)
            if w >= n_win:
                break
            n_arr += 1
            if v < price_list[k]:
                n_price += 1
                continue
            if busy_until > t and busy_win == w:
                n_busy += 1
                continue
            n_acc += 1
            busy_until = t + d
            busy_win = w
            local = t - w * window
            value += (
                (price_list[k] - cost)
                * (math.exp(-g * local) - math.exp(-g * (local + d)))
                / g
            )
        assert n_acc + n_busy + n_price == n_arr
        counts += Counts(n_arr, n_acc, n_busy, n_price)
        mean_value = value / n_win
        rep_values.append(g * mean_value if mixture else mean_value)
    return _stats("value", rep_values, counts)


def simulate_queue(config: SimConfig, price_a: float, price_b: float) -> SimStats:
    """Simulate the two-class system with one waiting spot.

    An arrival finding the worker busy waits only if nobody else is waiting;
    the waiting job starts when the current one ends.
    """
    scenario = config.scenario
    if scenario.queue_capacity != 1 or scenario.num_classes != 2:
        raise ModelMismatch("simulate_queue needs queue_capacity 1 and two classes")
    if len(scenario.workers) != 1:
        raise ModelMismatch("simulate_queue applies to a lone worker")
    for cls in scenario.classes:
        if not isinstance(cls.duration, ExponentialDuration):
            raise ModelMismatch("simulate_queue needs exponential durations")
    prices = [float(price_a), float(price_b)]
    cost = scenario.workers[0].cost
    horizon = config.horizon_hours()
    warm = config.warmup_fraction * horizon
    span = horizon - warm

    rep_rates = []
    counts = Counts()
    for rep in range(config.replications):
        times, ks, vs, ds = _merged_events(scenario, config.base_seed, rep, horizon)
        service_end = 0.0
        pending: tuple[int, float] | None = None
        earned = 0.0
        n_arr = n_acc = n_busy = n_price = 0

        def start_job(k: int, start: float, dur: float) -> float:
            nonlocal earned
            earned += (prices[k] - cost) * _window_overlap(start, start + dur, warm, horizon)
            return start + dur

        for t, k, v, d in zip(times, ks, vs, ds):
            if pending is not None and service_end <= t:
                service_end = start_job(pending[0], service_end, pending[1])
                pending = None
            n_arr += 1
            if v < prices[k]:
                n_price += 1
                continue
            if service_end <= t:
                n_acc += 1
                service_end = start_job(k, t, d)
            elif pending is None:
                n_acc += 1
                pending = (k, d)
            else:
                n_busy += 1
        if pending is not None:
            start_job(pending[0], service_end, pending[1])
        assert n_acc + n_busy + n_price == n_arr
        counts += Counts(n_arr, n_acc, n_busy, n_price)
        rep_rates.append(earned / span)
    return _stats("rate", rep_rates, counts)


@dataclass(frozen=True)
class DeviationPoint:
    """One scan point: the candidate price and its simulated gain over baseline."""

    price: float
    mean: float
    se: float
    delta: float
    delta_se: float
    significant_improvement: bool


@dataclass(frozen=True)
class DeviationScanReport:
    worker_index: int
    baseline_price: float
    baseline_mean: float
    baseline_se: float
    z_threshold: float
    points: tuple[DeviationPoint, ...]

    @property
    def any_significant(self) -> bool:
        return any(p.significant_improvement for p in self.points)


def deviation_scan(config: SimConfig, equilibrium_prices, worker_index: int,
                   price_grid=None) -> DeviationScanReport:
    """Re-simulate with one worker's price swept over a grid, everyone else fixed.

    Every scan point reuses the baseline's seed, so candidate and baseline see
    identical arrival, valuation, and duration draws (the per-replication
    streams are drawn independently of prices). Each delta is therefore a
    paired comparison: the per-replication differences of the scanned worker's
    rate, with a one-sample standard error. A point counts as a significant
    improvement when its simultaneous 95% interval sits above zero:
    delta > z * SE with z Bonferroni-adjusted across the grid (a single-point
    grid gives the usual 1.96). Single-class scenarios only.
    """
    scenario = config.scenario
    if scenario.num_classes != 1:
        raise ModelMismatch("deviation_scan supports single-class scenarios")
    if config.replications < 2:
        raise ConfigError("deviation_scan needs at least two replications")
    single = len(scenario.workers) == 1
    if single:
        matrix = [_check_single_prices(scenario, equilibrium_prices)]
    else:
        matrix = _check_matrix(scenario, equilibrium_prices)
    if not 0 <= worker_index < len(scenario.workers):
        raise ConfigError(f"no worker at index {worker_index}")
    base_price = matrix[worker_index][0]
    if price_grid is None:
        price_grid = np.linspace(0.8 * base_price, 1.2 * base_price, 21)
    price_grid = [float(p) for p in price_grid]
    z = NormalDist().inv_cdf(1.0 - 0.025 / len(price_grid))

    def run(cfg: SimConfig, mat) -> SimStats:
        return simulate(cfg, mat[0] if single else mat)

    def worker_reps(stats: SimStats) -> np.ndarray:
        if stats.per_worker_reps is not None:
            return np.asarray(stats.per_worker_reps[worker_index])
        return np.asarray(stats.rep_values)

    baseline = run(config, matrix)
    base_mean, base_se = baseline.worker_mean_se(worker_index)
    base_reps = worker_reps(baseline)
    points = []
    for candidate in price_grid:
        trial = [row[:] for row in matrix]
        trial[worker_index][0] = candidate
        stats = run(replace(config, trace_path=None), trial)
        mean, se = stats.worker_mean_se(worker_index)
        deltas = worker_reps(stats) - base_reps
        delta = float(deltas.mean())
        delta_se = float(deltas.std(ddof=1) / math.sqrt(deltas.size))
        points.append(
            DeviationPoint(
                price=candidate,
                mean=mean,
                se=se,
                delta=delta,
                delta_se=delta_se,
                significant_improvement=delta > z * delta_se,
            )
        )
    return DeviationScanReport(
        worker_index=worker_index,
        baseline_price=base_price,
        baseline_mean=base_mean,
        baseline_se=base_se,
        z_threshold=z,
        points=tuple(points),
    )
