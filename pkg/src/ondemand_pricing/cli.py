"""Command-line surface: solve, sweep, simulate, compete, validate.

Exit codes: 0 success, 1 validation failure, 2 bad config or usage,
3 irregular valuation law, 4 no equilibrium exists for the requested mode.
Printed numbers carry 6 significant digits; files keep full precision.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import avg_earning_rate, discounted_value
from .competition import (
    best_response_dynamics,
    ranked_price_equilibrium,
)
from .config import load_scenario
from .errors import (
    ConfigError,
    IrregularDistribution,
    ModelMismatch,
    PricingError,
    TooManyClasses,
)
from .model import ExponentialDiscount, ExponentialDuration, MixtureDiscount, Scenario, apply_commission
from .queues import (
    first_step_solve,
    mixture_horizon_optimize,
    mixture_horizon_value,
    queue_optimize,
    queue_rate,
)
from .simulate import SimConfig, SimStats, deviation_scan, simulate, simulate_discounted, simulate_queue
from .solver import rate_map, solve_discounted, solve_fixed_point

DEFAULT_SEED = 20260815
SWEEPABLES = ("r", "gamma", "rho", "beta", "reserve")


class NoEquilibrium(PricingError):
    """Requested equilibrium mode has no solution for this scenario."""


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: str
    seed: int
    outputs: tuple[str, ...]
    version: str
    wall_time_s: float


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _trace_rows(trace) -> list[tuple[int, float]]:
    rows = [(t, r) for t, (r, _) in enumerate(trace)]
    if trace:
        rows.append((len(trace), trace[-1][1]))
    return rows


def _parse_grid(spec: str) -> list[float]:
    spec = spec.strip()
    if "," in spec:
        return [float(x) for x in spec.split(",")]
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) == 4 and parts[3] == "log":
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            return [float(x) for x in np.logspace(np.log10(a), np.log10(b), n)]
        if len(parts) == 3:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            return [float(x) for x in np.linspace(a, b, n)]
        raise ConfigError(f"bad grid spec {spec!r} (use a:b:n, a:b:n:log, or a comma list)")
    return [float(spec)]


def _default_r_grid() -> list[float]:
    low = [float(x) for x in np.linspace(0.1, 1.0, 10)]
    high = [float(x) for x in np.logspace(0.0, 2.0, 20)]
    return sorted(dict.fromkeys(low + high))


# --- solve ---


def cmd_solve(scenario: Scenario, outdir: Path) -> list[str]:
    outputs = []
    if scenario.queue_capacity == 1:
        prices, rate = queue_optimize(scenario)
        print(f"queue optimum: p_A* = {_fmt(prices[0])}, p_B* = {_fmt(prices[1])}, "
              f"rate = {_fmt(rate)}")
        payload = {"model": "queue", "prices": list(prices), "rate": rate}
    elif isinstance(scenario.discount, MixtureDiscount):
        prices, value = mixture_horizon_optimize(scenario)
        print("mixture-horizon optimum: prices = "
              + ", ".join(_fmt(p) for p in prices) + f", value = {_fmt(value)}")
        payload = {"model": "mixture_horizon", "prices": list(prices), "value": value}
    elif isinstance(scenario.discount, ExponentialDiscount):
        sol = solve_discounted(scenario)
        print("discounted optimum: prices = " + ", ".join(_fmt(p) for p in sol.prices)
              + f", rate = {_fmt(sol.rate)}, value = {_fmt(sol.value)}, "
              f"iterations = {sol.iterations}")
        payload = {
            "model": "discounted",
            "prices": list(sol.prices),
            "rate": sol.rate,
            "value": sol.value,
            "iterations": sol.iterations,
            "converged": sol.converged,
        }
        _write_csv(outdir / "trace.csv", ["t", "R_t"], _trace_rows(sol.trace))
        outputs.append("trace.csv")
    else:
        sol = solve_fixed_point(scenario)
        print("optimum: prices = " + ", ".join(_fmt(p) for p in sol.prices)
              + f", rate = {_fmt(sol.rate)}, iterations = {sol.iterations}")
        payload = {
            "model": "loss",
            "prices": list(sol.prices),
            "rate": sol.rate,
            "iterations": sol.iterations,
            "converged": sol.converged,
        }
        _write_csv(outdir / "trace.csv", ["t", "R_t"], _trace_rows(sol.trace))
        outputs.append("trace.csv")
    _write_json(outdir / "solution.json", payload)
    outputs.append("solution.json")
    return outputs


# --- sweep ---


def _sweep_r(scenario: Scenario, grid) -> tuple[list[str], list[tuple]]:
    rows = []
    for r in grid:
        second = replace(
            scenario.classes[1], arrival_rate=float(r), duration=ExponentialDuration(float(r))
        )
        variant = replace(scenario, classes=(scenario.classes[0], second))
        prices, rate = queue_optimize(variant)
        rows.append((float(r), prices[0], prices[1], rate))
    return ["r", "p_A_star", "p_B_star", "rate"], rows


def _sweep_gamma(scenario: Scenario, grid) -> tuple[list[str], list[tuple]]:
    k = scenario.num_classes
    rows = []
    for g in grid:
        variant = replace(scenario, discount=ExponentialDiscount(float(g)))
        sol = solve_discounted(variant)
        rows.append((float(g), *sol.prices, sol.rate, sol.value))
    header = ["gamma"] + [f"p_{i + 1}" for i in range(k)] + ["rate", "value"]
    return header, rows


def _sweep_rho(scenario: Scenario, grid) -> tuple[list[str], list[tuple]]:
    k = scenario.num_classes
    rows = []
    for scale in grid:
        classes = tuple(
            replace(cls, arrival_rate=cls.arrival_rate * float(scale))
            for cls in scenario.classes
        )
        sol = solve_fixed_point(replace(scenario, classes=classes))
        rows.append((float(scale), *sol.prices, sol.rate))
    return ["rho"] + [f"p_{i + 1}" for i in range(k)] + ["rate"], rows


def _sweep_beta(scenario: Scenario, grid) -> tuple[list[str], list[tuple]]:
    k = scenario.num_classes
    rows = []
    for beta in grid:
        classes = tuple(apply_commission(cls, float(beta)) for cls in scenario.classes)
        sol = solve_fixed_point(replace(scenario, classes=classes))
        rows.append((float(beta), *sol.prices, sol.rate))
    return ["beta"] + [f"p_{i + 1}" for i in range(k)] + ["rate"], rows


def _sweep_reserve(scenario: Scenario, grid) -> tuple[list[str], list[tuple]]:
    rows = []
    for reserve in grid:
        achieved, _ = rate_map(scenario, float(reserve))
        rows.append((float(reserve), achieved))
    return ["reserve", "achieved_rate"], rows


def cmd_sweep(scenario: Scenario, param: str, grid_spec: str | None, outdir: Path) -> list[str]:
    if param not in SWEEPABLES:
        raise ConfigError(f"unknown sweep parameter {param!r} (one of {SWEEPABLES})")
    if grid_spec is not None:
        grid = _parse_grid(grid_spec)
    elif param == "r":
        grid = _default_r_grid()
    else:
        raise ConfigError(f"--grid is required for parameter {param!r}")
    if param == "r":
        header, rows = _sweep_r(scenario, grid)
    elif param == "gamma":
        header, rows = _sweep_gamma(scenario, grid)
    elif param == "rho":
        header, rows = _sweep_rho(scenario, grid)
    elif param == "beta":
        header, rows = _sweep_beta(scenario, grid)
    else:
        header, rows = _sweep_reserve(scenario, grid)
    name = f"sweep_{param}.csv"
    _write_csv(outdir / name, header, rows)
    print(f"swept {param} over {len(rows)} points -> {outdir / name}")
    return [name]


# --- simulate ---


def _parse_prices(spec: str, scenario: Scenario):
    rows = [chunk for chunk in spec.split(";") if chunk.strip()]
    matrix = [[float(x) for x in row.split(",")] for row in rows]
    if len(scenario.workers) == 1:
        if len(matrix) != 1:
            raise ConfigError("single-worker scenario takes one price row")
        return matrix[0]
    return matrix


def _solved_prices(scenario: Scenario):
    if scenario.queue_capacity == 1:
        prices, _ = queue_optimize(scenario)
        return list(prices)
    if isinstance(scenario.discount, MixtureDiscount):
        prices, _ = mixture_horizon_optimize(scenario)
        return list(prices)
    if isinstance(scenario.discount, ExponentialDiscount):
        return list(solve_discounted(scenario).prices)
    if len(scenario.workers) == 1:
        return list(solve_fixed_point(scenario).prices)
    eq = ranked_price_equilibrium(scenario)
    return [list(eq.by_rank(w.rank).prices) for w in scenario.workers]


def cmd_simulate(scenario: Scenario, prices_spec: str, seed: int, outdir: Path,
                 trace: bool) -> list[str]:
    if prices_spec == "solved":
        prices = _solved_prices(scenario)
    else:
        prices = _parse_prices(prices_spec, scenario)
    trace_path = str(outdir / "events.csv") if trace else None
    cfg = SimConfig(scenario=scenario, base_seed=seed, trace_path=trace_path)
    if scenario.queue_capacity == 1:
        if len(prices) != 2:
            raise ConfigError("queue simulation takes exactly two prices")
        stats = simulate_queue(cfg, prices[0], prices[1])
    elif scenario.discount is not None:
        stats = simulate_discounted(cfg, prices)
    else:
        stats = simulate(cfg, prices)
    payload = {"prices": prices, "seed": seed, "stats": stats.to_dict()}
    _write_json(outdir / "stats.json", payload)
    print(f"simulated {stats.kind}: mean = {_fmt(stats.mean)}, "
          f"95% CI = [{_fmt(stats.ci_low)}, {_fmt(stats.ci_high)}], "
          f"replications = {stats.replications}")
    outputs = ["stats.json"]
    if trace:
        outputs.append("events.csv")
    return outputs


# --- compete ---


def cmd_compete(scenario: Scenario, seed: int, outdir: Path, verify: bool,
                dynamics: bool) -> list[str]:
    if len(scenario.workers) < 2:
        raise ConfigError("compete needs at least two workers")
    if dynamics:
        report = best_response_dynamics(scenario)
        if report.fixed_profile is not None:
            print("best-response dynamics settled at "
                  + ", ".join(_fmt(p) for p in report.fixed_profile)
                  + f" after {report.rounds_run} rounds")
        elif report.cycle_length is not None:
            print(f"best-response dynamics cycles: length {report.cycle_length} "
                  f"starting at round {report.cycle_start} "
                  f"(detected after {report.rounds_run} rounds)")
        else:
            print(f"best-response dynamics open after {report.rounds_run} rounds")
        payload = {
            "mode": "dynamics",
            "fixed_profile": list(report.fixed_profile) if report.fixed_profile else None,
            "cycle_start": report.cycle_start,
            "cycle_length": report.cycle_length,
            "rounds_run": report.rounds_run,
            "trajectory": [list(p) for p in report.trajectory],
        }
        _write_json(outdir / "dynamics.json", payload)
        return ["dynamics.json"]

    ranks = [w.rank for w in scenario.workers]
    if len(set(ranks)) != len(ranks):
        raise NoEquilibrium(
            "undifferentiated workers admit no pure price equilibrium; "
            "rerun with --dynamics to see the cycling behaviour"
        )
    eq = ranked_price_equilibrium(scenario)
    workers_payload = []
    for outcome in eq.outcomes:
        print(f"rank {outcome.rank}: prices = "
              + ", ".join(_fmt(p) for p in outcome.prices)
              + f", rate = {_fmt(outcome.rate)}, busy = {_fmt(outcome.busy_fraction)}")
        workers_payload.append(
            {
                "rank": outcome.rank,
                "prices": list(outcome.prices),
                "rate": outcome.rate,
                "busy_fraction": outcome.busy_fraction,
            }
        )
    payload = {"mode": "equilibrium", "workers": workers_payload}
    outputs = ["equilibrium.json"]
    if verify:
        matrix = [list(eq.by_rank(w.rank).prices) for w in scenario.workers]
        cfg = SimConfig(
            scenario=scenario,
            base_seed=seed,
            expected_arrivals=20_000,
            replications=16,
        )
        scans = []
        for index in range(len(scenario.workers)):
            base = matrix[index][0]
            grid = np.linspace(0.8 * base, 1.2 * base, 11)
            report = deviation_scan(cfg, matrix, index, grid)
            verdict = "no significant improvement" if not report.any_significant \
                else "IMPROVEMENT FOUND"
            print(f"deviation scan, worker {index}: {verdict} "
                  f"(baseline rate {_fmt(report.baseline_mean)})")
            scans.append(
                {
                    "worker_index": index,
                    "baseline_price": report.baseline_price,
                    "baseline_mean": report.baseline_mean,
                    "baseline_se": report.baseline_se,
                    "any_significant": report.any_significant,
                    "points": [asdict(p) for p in report.points],
                }
            )
        payload["deviation_scans"] = scans
    _write_json(outdir / "equilibrium.json", payload)
    return outputs


# --- validate ---


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _sim_config(scenario: Scenario, seed: int) -> SimConfig:
    return SimConfig(
        scenario=scenario, base_seed=seed, expected_arrivals=20_000, replications=12
    )


def _check_close(name: str, analytic: float, stats: SimStats) -> CheckResult:
    gap = abs(stats.mean - analytic)
    bound = 3.0 * stats.se
    return CheckResult(
        name=name,
        passed=bool(gap <= bound),
        detail=f"analytic {_fmt(analytic)}, simulated {_fmt(stats.mean)} "
               f"(|gap| {_fmt(gap)} vs 3 SE {_fmt(bound)})",
    )


def validation_checks(scenario: Scenario, seed: int) -> list[CheckResult]:
    """Cross-check battery: every analytic model against its simulator."""
    checks: list[CheckResult] = []
    if scenario.queue_capacity == 1:
        prices, rate = queue_optimize(scenario)
        closed = queue_rate(scenario, prices[0], prices[1])
        renewal = first_step_solve(scenario, prices[0], prices[1]).rate
        gap = abs(closed - renewal)
        checks.append(
            CheckResult(
                "queue_closed_form_vs_renewal_equations",
                bool(gap <= 1e-9),
                f"closed form {_fmt(closed)}, renewal solve {_fmt(renewal)}",
            )
        )
        stats = simulate_queue(_sim_config(scenario, seed), prices[0], prices[1])
        checks.append(_check_close("queue_rate_vs_simulation", closed, stats))
    elif isinstance(scenario.discount, MixtureDiscount):
        prices, _ = mixture_horizon_optimize(scenario)
        stats = simulate_discounted(_sim_config(scenario, seed), prices)
        checks.append(
            _check_close("mixture_value_vs_simulation",
                         mixture_horizon_value(scenario, prices), stats)
        )
    elif isinstance(scenario.discount, ExponentialDiscount):
        sol = solve_discounted(scenario)
        stats = simulate_discounted(_sim_config(scenario, seed), sol.prices)
        checks.append(
            _check_close("discounted_value_vs_simulation",
                         discounted_value(scenario, sol.prices), stats)
        )
    elif len(scenario.workers) == 1:
        sol = solve_fixed_point(scenario)
        achieved, _ = rate_map(scenario, sol.rate)
        checks.append(
            CheckResult(
                "fixed_point_consistency",
                bool(abs(achieved - sol.rate) <= 1e-8),
                f"rate {_fmt(sol.rate)}, map at rate {_fmt(achieved)}",
            )
        )
        stats = simulate(_sim_config(scenario, seed), sol.prices)
        checks.append(
            _check_close("loss_rate_vs_simulation",
                         avg_earning_rate(scenario, sol.prices), stats)
        )
    else:
        eq = ranked_price_equilibrium(scenario)
        matrix = [list(eq.by_rank(w.rank).prices) for w in scenario.workers]
        fleet_stats = simulate(_sim_config(scenario, seed), matrix)
        best_index = min(
            range(len(scenario.workers)), key=lambda i: scenario.workers[i].rank
        )
        solo = Scenario(
            classes=scenario.classes, workers=(scenario.workers[best_index],)
        )
        solo_stats = simulate(_sim_config(solo, seed + 1), matrix[best_index])
        fleet_mean, fleet_se = fleet_stats.worker_mean_se(best_index)
        gap = abs(fleet_mean - solo_stats.mean)
        bound = 3.0 * (fleet_se**2 + solo_stats.se**2) ** 0.5
        checks.append(
            CheckResult(
                "best_ranked_worker_unaffected_by_fleet",
                bool(gap <= bound),
                f"fleet {_fmt(fleet_mean)}, solo {_fmt(solo_stats.mean)} "
                f"(|gap| {_fmt(gap)} vs {_fmt(bound)})",
            )
        )
    return checks


def cmd_validate(scenario: Scenario, seed: int, outdir: Path) -> tuple[list[str], bool]:
    checks = validation_checks(scenario, seed)
    for check in checks:
        print(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.detail}")
    payload = [asdict(c) for c in checks]
    _write_json(outdir / "validate.json", payload)
    return ["validate.json"], all(c.passed for c in checks)


# --- entry point ---


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ondemand-pricing",
        description="Optimal per-unit-time pricing for on-demand workers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep", "simulate", "compete", "validate"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="scenario JSON path")
        cmd.add_argument("--seed", type=int, default=DEFAULT_SEED)
        cmd.add_argument("--out", default="out", help="output directory")
        if name == "sweep":
            cmd.add_argument("--param", required=True, choices=SWEEPABLES)
            cmd.add_argument("--grid", help="a:b:n, a:b:n:log, or comma list")
        if name == "simulate":
            cmd.add_argument("--prices", default="solved",
                             help="comma list per class ('solved' to solve first; "
                                  "';' separates workers)")
            cmd.add_argument("--trace", action="store_true",
                             help="write a per-event CSV for the first replication")
        if name == "compete":
            cmd.add_argument("--equilibrium", action="store_true",
                             help="solve the ranked equilibrium (default)")
            cmd.add_argument("--dynamics", action="store_true",
                             help="run best-response dynamics instead")
            cmd.add_argument("--verify", action="store_true",
                             help="deviation-scan each worker at the equilibrium")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        scenario = load_scenario(args.config)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        ok = True
        if args.command == "solve":
            outputs = cmd_solve(scenario, outdir)
        elif args.command == "sweep":
            outputs = cmd_sweep(scenario, args.param, args.grid, outdir)
        elif args.command == "simulate":
            outputs = cmd_simulate(scenario, args.prices, args.seed, outdir, args.trace)
        elif args.command == "compete":
            outputs = cmd_compete(scenario, args.seed, outdir, args.verify, args.dynamics)
        else:
            outputs, ok = cmd_validate(scenario, args.seed, outdir)
        manifest = RunManifest(
            command=args.command,
            config=str(args.config),
            seed=args.seed,
            outputs=tuple(outputs),
            version=__version__,
            wall_time_s=time.perf_counter() - started,
        )
        _write_json(outdir / "manifest.json", asdict(manifest))
        return 0 if ok else 1
    except IrregularDistribution as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NoEquilibrium as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, ModelMismatch, TooManyClasses) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
