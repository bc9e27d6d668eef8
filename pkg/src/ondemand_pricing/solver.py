"""Optimal pricing for the single-worker loss system.

The optimal earning rate is the unique fixed point of the map that sends a
candidate rate R to the best achievable rate when each busy hour is shadow
priced at R. Per class, the best price at reserve R solves
p = cost + R + tail(p)/density(p); iterating the map converges monotonically
from below and the iteration count stays in single digits for regular laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analytics import avg_earning_rate, discount_adjusted
from .errors import IrregularDistribution, ModelMismatch, TooManyClasses
from .model import (
    CustomerClass,
    ExponentialDiscount,
    PriceVector,
    Scenario,
    regularity_check,
)

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without the extra
    NUMBA_AVAILABLE = False

_BISECT_TOL = 1e-13
_BISECT_MAX = 200


def price_response(cls: CustomerClass, reserve: float, cost: float) -> float:
    """Best price for one class when a busy hour is worth cost + reserve.

    Returns the upper support bound when even the highest valuation cannot
    cover the shadow price; otherwise the unique root of
    p - tail(p)/density(p) = cost + reserve, clamped into the support.
    """
    law = cls.valuation
    if regularity_check(law) != "strictly_regular":
        raise IrregularDistribution(f"{type(law).__name__} is not strictly regular")
    floor = cost + reserve
    ceiling = law.upper
    if ceiling <= floor:
        return ceiling
    lo = max(floor, law.lower)

    def gap(p: float) -> float:
        return (p - floor) - law.tail(p) / law.density(p)

    if gap(lo) >= 0.0:
        return lo
    hi = ceiling
    for _ in range(_BISECT_MAX):
        if hi - lo <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if gap(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def rate_map(scenario: Scenario, reserve: float) -> tuple[float, PriceVector]:
    """Best achievable earning rate when busy time is shadow priced at `reserve`,
    together with the prices attaining it."""
    cost = scenario.sole_worker.cost
    prices = tuple(price_response(cls, reserve, cost) for cls in scenario.classes)
    return avg_earning_rate(scenario, prices), prices


@dataclass(frozen=True)
class Solution:
    """Solver output: optimal prices, the achieved rate, and the iteration trace."""

    prices: PriceVector
    rate: float
    iterations: int
    trace: tuple[tuple[float, float], ...]
    converged: bool
    value: float | None = None


def solve_fixed_point(scenario: Scenario, r0: float = 0.0, tol: float = 1e-10,
                      max_iter: int = 100_000) -> Solution:
    """Iterate the rate map to its fixed point, the optimal earning rate.

    The trace records (reserve, achieved rate) per iteration; after the first
    step the reserve sequence is nondecreasing and bounded by the optimum.
    """
    if scenario.discount is not None:
        raise ModelMismatch("solve_fixed_point applies to undiscounted scenarios")
    for i, cls in enumerate(scenario.classes):
        if regularity_check(cls.valuation) != "strictly_regular":
            raise IrregularDistribution(
                f"classes[{i}] valuation law is not strictly regular"
            )
    if not math.isfinite(r0) or r0 < 0.0:
        raise ValueError("starting rate must be finite and nonnegative")
    reserve = r0
    trace: list[tuple[float, float]] = []
    converged = False
    for _ in range(max_iter):
        achieved, _ = rate_map(scenario, reserve)
        trace.append((reserve, achieved))
        if abs(achieved - reserve) <= tol:
            converged = True
            reserve = achieved
            break
        reserve = achieved
    rate, prices = rate_map(scenario, reserve)
    return Solution(
        prices=prices,
        rate=rate,
        iterations=len(trace),
        trace=tuple(trace),
        converged=converged,
    )


def solve_discounted(scenario: Scenario) -> Solution:
    """Optimal prices under exponential discounting.

    Solves the fixed point of the discount-adjusted scenario; `value` carries
    the expected discounted earnings from an idle start, rate / discount rate.
    """
    if not isinstance(scenario.discount, ExponentialDiscount):
        raise ModelMismatch("solve_discounted needs an exponential discount rate")
    gamma = scenario.discount.rate
    sol = solve_fixed_point(discount_adjusted(scenario, gamma))
    return replace(sol, value=sol.rate / gamma)


# --- exhaustive grid search, used as an independent check on the solver ---

if NUMBA_AVAILABLE:

    @numba.njit(cache=True)
    def _best_over_cube(a1, b1, a2, b2, a3, b3):  # pragma: no cover - jit body
        best = -1e300
        bi = bj = bk = 0
        for i in range(a1.shape[0]):
            for j in range(a2.shape[0]):
                num = a1[i] + a2[j]
                den = 1.0 + b1[i] + b2[j]
                for k in range(a3.shape[0]):
                    r = (num + a3[k]) / (den + b3[k])
                    if r > best:
                        best = r
                        bi, bj, bk = i, j, k
        return best, bi, bj, bk


def grid_search_optimum(scenario: Scenario, step: float = 1e-3) -> tuple[PriceVector, float]:
    """Exhaustively scan a price grid of the given step on [0, upper bound] per class.

    Limited to three classes; intended as a slow cross-check of the solver.
    """
    if scenario.discount is not None:
        raise ModelMismatch("grid_search_optimum applies to undiscounted scenarios")
    k = scenario.num_classes
    if k > 3:
        raise TooManyClasses("grid search supports at most three classes")
    cost = scenario.sole_worker.cost
    axes, gains, weights = [], [], []
    for cls in scenario.classes:
        axis = np.arange(0.0, cls.valuation.upper + step / 2.0, step)
        tails = np.array([cls.valuation.tail(p) for p in axis])
        axes.append(axis)
        gains.append(cls.load * (axis - cost) * tails)
        weights.append(cls.load * tails)

    if k == 1:
        rates = gains[0] / (1.0 + weights[0])
        i = int(np.argmax(rates))
        return (float(axes[0][i]),), float(rates[i])

    if k == 2:
        best, bi, bj = -math.inf, 0, 0
        for i in range(axes[0].size):
            rates = (gains[0][i] + gains[1]) / (1.0 + weights[0][i] + weights[1])
            j = int(np.argmax(rates))
            if rates[j] > best:
                best, bi, bj = float(rates[j]), i, j
        return (float(axes[0][bi]), float(axes[1][bj])), best

    if NUMBA_AVAILABLE:
        best, bi, bj, bk = _best_over_cube(
            gains[0], weights[0], gains[1], weights[1], gains[2], weights[2]
        )
        return (
            float(axes[0][bi]),
            float(axes[1][bj]),
            float(axes[2][bk]),
        ), float(best)

    plane_gain = gains[1][:, None] + gains[2][None, :]
    plane_weight = 1.0 + weights[1][:, None] + weights[2][None, :]
    best, bi, bj, bk = -math.inf, 0, 0, 0
    for i in range(axes[0].size):
        rates = (gains[0][i] + plane_gain) / (plane_weight + weights[0][i])
        flat = int(np.argmax(rates))
        j, kk = divmod(flat, axes[2].size)
        if rates[j, kk] > best:
            best, bi, bj, bk = float(rates[j, kk]), i, j, kk
    return (float(axes[0][bi]), float(axes[1][bj]), float(axes[2][bk])), best
