"""Command-line front end.

Every subcommand is deterministic given --seed; all randomness flows from
that one value (no environment variables, no timestamps). Figures are
served as plot-ready CSV/JSON data files; plotting itself is external.

Exit codes: 0 success, 2 malformed inputs or arguments, 3 infeasible
request under `feasible`.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import bench as bench_mod
from . import casegen, chance, dispatch, magnitude
from .curves import capacity_curve, demand_curve
from .fleet import Fleet, read_fleet_csv, time_to_go, total_power, write_fleet_csv
from .profiles import RequestProfile, discretize, pulse, read_profile_json, trapezoid


@contextmanager
def _out_stream(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f


def _load_fleet(args) -> Fleet:
    if getattr(args, "case_study", False):
        return casegen.generate_case_study(args.seed)
    return read_fleet_csv(args.fleet)


def _shape_profile(shape: str, duration: float, magnitude_kw: float = 1.0) -> RequestProfile:
    if shape == "pulse":
        return pulse(duration, magnitude_kw)
    if shape == "trapezoid":
        return trapezoid(duration, magnitude_kw)
    raise ValueError(f"unknown shape {shape!r}")


def _add_fleet_source(parser: argparse.ArgumentParser, allow_case_study: bool = True) -> None:
    if allow_case_study:
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument("--fleet", help="fleet CSV path (id,p_max_kw,energy_kwh)")
        group.add_argument(
            "--case-study",
            action="store_true",
            help="use the generated 500-device study fleet (see gen-fleet)",
        )
    else:
        parser.add_argument("--fleet", required=True, help="fleet CSV path (id,p_max_kw,energy_kwh)")


def _add_shape_args(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    parser.add_argument("--shape", choices=("pulse", "trapezoid"), required=True, help="request shape")
    if sweep:
        parser.add_argument(
            "--duration", type=float, nargs="+", required=True, help="total duration(s), hours; several give a sweep"
        )
    else:
        parser.add_argument("--duration", type=float, required=True, help="total duration, hours")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleetcap",
        description="Size shaped discharge services for a storage fleet. Units: power kW, energy kWh, time hours.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-fleet", help="generate a random fleet CSV")
    p.add_argument("--case-study", action="store_true", required=True, help="emit the 500-device study fleet")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--out", help="output CSV path (default stdout)")

    p = sub.add_parser("capacity", help="export a fleet's deliverable-energy curve as CSV (p_kw,e_kwh)")
    _add_fleet_source(p, allow_case_study=False)
    p.add_argument("--out", help="output CSV path (default stdout)")

    p = sub.add_parser("feasible", help="check whether a request profile is deliverable")
    _add_fleet_source(p, allow_case_study=False)
    p.add_argument("--profile", help="request profile JSON path")
    p.add_argument("--shape", choices=("pulse", "trapezoid"), help="built-in shape instead of --profile")
    p.add_argument("--duration", type=float, help="shape duration, hours")
    p.add_argument("--magnitude", type=float, help="shape magnitude, kW")
    p.add_argument(
        "--oracle",
        choices=("curve", "simulation"),
        default="curve",
        help="feasibility check: curve dominance or time-stepped policy simulation",
    )
    p.add_argument("--period-min", type=float, default=1.0, help="simulation step, minutes (simulation oracle)")

    p = sub.add_parser("max-magnitude", help="largest feasible magnitude of a shaped request, kW")
    _add_fleet_source(p, allow_case_study=False)
    _add_shape_args(p, sweep=True)
    p.add_argument("--oracle", choices=("curve", "simulation"), default="curve", help="feasibility oracle")
    p.add_argument("--period-min", type=float, default=1.0, help="simulation step, minutes (simulation oracle)")
    p.add_argument("--tol", type=float, help="bisection tolerance, kW (default 1e-6 of fleet power)")
    p.add_argument("--out", help="output path (default stdout); sweeps emit CSV duration_h,magnitude_kw")

    p = sub.add_parser("cc-solve", help="chance-constrained maximum magnitude under random availability")
    _add_fleet_source(p)
    _add_shape_args(p)
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--availability", type=float, default=0.6, help="per-device availability probability")
    p.add_argument(
        "--confidence", type=float, nargs="+", required=True, help="risk level(s) c in (0,1), max failure probability"
    )
    p.add_argument("--samples", type=int, default=10000, help="Monte Carlo sample count")
    p.add_argument("--workers", type=int, default=1, help="parallel workers (never changes results)")
    p.add_argument("--bootstrap-resamples", type=int, default=chance.DEFAULT_BOOTSTRAP_RESAMPLES, help="bootstrap resamples for the 95%% CI")
    p.add_argument("--tol", type=float, help="bisection tolerance, kW (default 1e-6 of fleet power)")
    p.add_argument(
        "--quantile-approx",
        action="store_true",
        help="also solve against the single quantile curve on the same samples and report the relative error",
    )
    p.add_argument("--grid-cap", type=int, default=chance.DEFAULT_GRID_CAP, help="max quantile-curve grid points")
    p.add_argument("--out", help="output JSON path (default stdout)")

    p = sub.add_parser("quantile-curve", help="pointwise availability-quantile capacity curve as CSV")
    _add_fleet_source(p)
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--availability", type=float, default=0.6, help="per-device availability probability")
    p.add_argument("--confidence", type=float, required=True, help="risk level c in (0,1)")
    p.add_argument("--samples", type=int, default=10000, help="Monte Carlo sample count")
    p.add_argument("--grid-cap", type=int, default=chance.DEFAULT_GRID_CAP, help="max grid points")
    p.add_argument("--out", help="output CSV path (default stdout)")

    p = sub.add_parser("bench", help="paired timing of the curve and policy-simulation oracles")
    _add_fleet_source(p)
    _add_shape_args(p)
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--availability", type=float, default=0.6, help="per-device availability probability")
    p.add_argument("--samples", type=int, default=10000, help="number of sampled states")
    p.add_argument("--period-min", type=float, default=1.0, help="simulation step, minutes")
    p.add_argument("--out", help="also write the report as JSON to this path")

    return parser


def _cmd_gen_fleet(args) -> int:
    fleet = casegen.generate_case_study(args.seed)
    with _out_stream(args.out) as f:
        write_fleet_csv(fleet, f)
    return 0


def _cmd_capacity(args) -> int:
    fleet = read_fleet_csv(args.fleet)
    curve = capacity_curve(fleet.p_max, time_to_go(fleet))
    with _out_stream(args.out) as f:
        curve.to_csv(f)
    return 0


def _cmd_feasible(args) -> int:
    fleet = read_fleet_csv(args.fleet)
    if args.profile is not None:
        profile = read_profile_json(args.profile)
    else:
        if args.shape is None or args.duration is None or args.magnitude is None:
            raise ValueError("feasible needs --profile, or --shape with --duration and --magnitude")
        profile = _shape_profile(args.shape, args.duration, args.magnitude)
    x = time_to_go(fleet)
    if args.oracle == "curve":
        ok = demand_curve(profile).dominated_by(capacity_curve(fleet.p_max, x))
    else:
        steps = discretize(profile, args.period_min / 60.0)
        ok = dispatch.simulate_feasible(fleet.p_max, x, steps)
    print("feasible" if ok else "infeasible")
    return 0 if ok else 3


def _cmd_max_magnitude(args) -> int:
    fleet = read_fleet_csv(args.fleet)
    x = time_to_go(fleet)
    upper = total_power(fleet)
    results = []
    for duration in args.duration:
        shape = _shape_profile(args.shape, duration)
        if args.oracle == "curve":
            oracle = magnitude.dominance_oracle(shape, capacity_curve(fleet.p_max, x))
        else:
            oracle = magnitude.simulation_oracle(shape, fleet.p_max, x, args.period_min / 60.0)
        results.append((duration, magnitude.max_magnitude(oracle, upper, args.tol)))
    with _out_stream(args.out) as f:
        if len(results) == 1:
            f.write(f"{results[0][1]!r}\n")
        else:
            f.write("duration_h,magnitude_kw\n")
            for duration, m in results:
                f.write(f"{duration!r},{m!r}\n")
    return 0


def _cmd_cc_solve(args) -> int:
    fleet = _load_fleet(args)
    model = chance.AvailabilityModel.uniform(args.availability, len(fleet))
    shape = _shape_profile(args.shape, args.duration)
    for c in args.confidence:
        if not 0.0 < c < 1.0:
            raise ValueError(f"--confidence values must lie in (0, 1), got {c}")
    ensemble = chance.draw_availability_ensemble(model, args.samples, args.seed)
    mags = chance.sample_max_magnitudes(
        fleet, model, shape, args.samples, args.seed, ensemble=ensemble, tol=args.tol, workers=args.workers
    )
    results = []
    for c in args.confidence:
        sol = chance.solution_from_magnitudes(
            mags, c, seed=args.seed, bootstrap_resamples=args.bootstrap_resamples
        )
        entry = sol.to_json_dict()
        if args.quantile_approx:
            qcurve = chance.quantile_curve(
                fleet, model, c, args.samples, args.seed, ensemble=ensemble, grid_cap=args.grid_cap
            )
            approx = chance.max_magnitude_vs_quantile(
                qcurve, shape, tol=args.tol, upper=total_power(fleet)
            )
            entry["approx_magnitude_kw"] = approx
            entry["approx_rel_error"] = abs(approx - sol.magnitude) / sol.magnitude if sol.magnitude else 0.0
        results.append(entry)
    payload = results[0] if len(results) == 1 else {"results": results}
    with _out_stream(args.out) as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return 0


def _cmd_quantile_curve(args) -> int:
    fleet = _load_fleet(args)
    model = chance.AvailabilityModel.uniform(args.availability, len(fleet))
    curve = chance.quantile_curve(
        fleet, model, args.confidence, args.samples, args.seed, grid_cap=args.grid_cap
    )
    with _out_stream(args.out) as f:
        curve.to_csv(f)
    return 0


def _cmd_bench(args) -> int:
    fleet = _load_fleet(args)
    model = chance.AvailabilityModel.uniform(args.availability, len(fleet))
    shape = _shape_profile(args.shape, args.duration)
    report = bench_mod.run_bench(fleet, model, shape, args.samples, args.seed, args.period_min / 60.0)
    print(report.table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(report.to_json_dict(), f, indent=2)
            f.write("\n")
    return 0


_COMMANDS = {
    "gen-fleet": _cmd_gen_fleet,
    "capacity": _cmd_capacity,
    "feasible": _cmd_feasible,
    "max-magnitude": _cmd_max_magnitude,
    "cc-solve": _cmd_cc_solve,
    "quantile-curve": _cmd_quantile_curve,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
