"""Command-line entry point: simulate, track, bench, eval.

Every subcommand is a pure function of its input files, flags, and seed;
repeated invocations produce byte-identical outputs. Exit codes: 0 success,
2 usage or input error, 1 internal error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from .estimation import FilterParams
from .models import ClutterModel, DetectionSurvival, MeasurementModel
from .ospa import OspaParams, ospa_distance
from .phd import PhdParams
from .sim import (
    CsvFormatError,
    ESTIMATES_HEADER,
    ScenarioError,
    TRUTH_HEADER,
    benchmark_scenario,
    generate_measurements,
    generate_truth,
    load_scenario,
    read_measurements_csv,
    read_states_csv,
    run_filter,
    run_monte_carlo,
    write_estimates_csv,
    write_measurements_csv,
    write_truth_csv,
)


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        help="scenario JSON path (default: the bundled five-target benchmark)",
    )
    parser.add_argument(
        "--pd", type=float, default=None, help="detection probability (default 0.9)"
    )
    parser.add_argument(
        "--ps", type=float, default=None, help="survival probability (default 0.99)"
    )
    parser.add_argument(
        "--clutter-intensity",
        type=float,
        default=None,
        help="clutter returns per unit area (default 5e-4, i.e. 5 per scan)",
    )
    parser.add_argument(
        "--range-var", type=float, default=None, help="range noise variance (default 0.25)"
    )
    parser.add_argument(
        "--bearing-var",
        type=float,
        default=None,
        help="bearing noise variance (default 0.09)",
    )


def _add_filter_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--max-hypotheses", type=int, default=100, help="hypothesis budget (default 100)"
    )
    parser.add_argument(
        "--target-prune",
        type=float,
        default=1e-5,
        help="marginal-existence pruning threshold (default 1e-5)",
    )
    parser.add_argument(
        "--hyp-prune",
        type=float,
        default=1e-5,
        help="hypothesis-weight pruning threshold (default 1e-5)",
    )
    parser.add_argument(
        "--extract-threshold",
        type=float,
        default=0.5,
        help="existence threshold for state extraction (default 0.5)",
    )
    parser.add_argument(
        "--particles", type=int, default=1000, help="particles per target (default 1000)"
    )


def _add_ospa_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--cutoff", type=float, default=10.0, help="OSPA cutoff in meters (default 10)"
    )
    parser.add_argument("--order", type=float, default=2.0, help="OSPA order (default 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbmtrack",
        description="Multi-target tracking benchmark: simulate range-bearing "
        "scans, track them with the multi-Bernoulli mixture or PHD filter, "
        "and score the estimates with the OSPA metric.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser(
        "simulate", help="write ground-truth and measurement CSV files"
    )
    _add_scenario_flags(p_sim)
    p_sim.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p_sim.add_argument(
        "--out",
        required=True,
        help="output prefix; writes <out>_truth.csv and <out>_measurements.csv",
    )

    p_track = sub.add_parser("track", help="run one filter over a measurements file")
    _add_scenario_flags(p_track)
    _add_filter_flags(p_track)
    p_track.add_argument("--measurements", required=True, help="measurements CSV path")
    p_track.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p_track.add_argument(
        "--filter",
        choices=("mbm", "phd"),
        default="mbm",
        help="filter to run (default mbm)",
    )
    p_track.add_argument("--out", required=True, help="estimates CSV path")

    p_bench = sub.add_parser(
        "bench", help="seeded Monte-Carlo benchmark of both filters"
    )
    _add_scenario_flags(p_bench)
    _add_filter_flags(p_bench)
    _add_ospa_flags(p_bench)
    p_bench.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p_bench.add_argument("--runs", type=int, default=25, help="Monte-Carlo runs")
    p_bench.add_argument(
        "--workers", type=int, default=None, help="parallel worker processes"
    )
    p_bench.add_argument("--out", required=True, help="results CSV path")

    p_eval = sub.add_parser("eval", help="per-scan OSPA between estimates and truth")
    _add_ospa_flags(p_eval)
    p_eval.add_argument("--estimates", required=True, help="estimates CSV path")
    p_eval.add_argument("--truth", required=True, help="truth CSV path")
    p_eval.add_argument("--out", required=True, help="per-scan OSPA CSV path")
    return parser


def _load_configured_scenario(args):
    scenario = load_scenario(args.scenario) if args.scenario else benchmark_scenario()
    models = scenario.models
    if args.pd is not None or args.ps is not None:
        p_d = args.pd if args.pd is not None else models.detection.p_d
        p_s = args.ps if args.ps is not None else models.detection.p_s
        models = replace(models, detection=DetectionSurvival(p_d=p_d, p_s=p_s))
    if args.clutter_intensity is not None:
        models = replace(
            models,
            clutter=ClutterModel(
                fov_x=models.clutter.fov_x,
                fov_y=models.clutter.fov_y,
                area_intensity=args.clutter_intensity,
            ),
        )
    if args.range_var is not None or args.bearing_var is not None:
        measurement = MeasurementModel(
            range_variance=args.range_var
            if args.range_var is not None
            else models.measurement.range_variance,
            bearing_variance=args.bearing_var
            if args.bearing_var is not None
            else models.measurement.bearing_variance,
        )
        models = replace(models, measurement=measurement)
    return replace(scenario, models=models)


def _filter_params(args) -> FilterParams:
    return FilterParams(
        n_h_max=args.max_hypotheses,
        target_prune=args.target_prune,
        hyp_prune=args.hyp_prune,
        extract_threshold=args.extract_threshold,
        particles_per_target=args.particles,
    )


def cmd_simulate(args) -> int:
    scenario = _load_configured_scenario(args)
    rng = np.random.default_rng(args.seed)
    truth = generate_truth(scenario)
    measurements = generate_measurements(truth, scenario, rng)
    write_truth_csv(f"{args.out}_truth.csv", truth)
    write_measurements_csv(f"{args.out}_measurements.csv", measurements)
    print(
        f"wrote {args.out}_truth.csv and {args.out}_measurements.csv "
        f"({scenario.duration} scans)"
    )
    return 0


def cmd_track(args) -> int:
    scenario = _load_configured_scenario(args)
    measurements = read_measurements_csv(args.measurements)
    if len(measurements) > scenario.duration:
        raise CsvFormatError(
            f"measurements cover scan {len(measurements)} but the scenario "
            f"ends at scan {scenario.duration}"
        )
    estimates = run_filter(
        measurements,
        scenario,
        _filter_params(args),
        filter_kind=args.filter,
        rng=np.random.default_rng(args.seed),
    )
    write_estimates_csv(args.out, estimates)
    total = sum(e.cardinality for e in estimates)
    print(f"wrote {args.out} ({total} state estimates over {scenario.duration} scans)")
    return 0


def cmd_bench(args) -> int:
    if args.runs < 1:
        raise ValueError("--runs must be at least 1")
    scenario = _load_configured_scenario(args)
    result = run_monte_carlo(
        scenario,
        _filter_params(args),
        runs=args.runs,
        base_seed=args.seed,
        ospa_params=OspaParams(cutoff=args.cutoff, order=args.order),
        phd_params=PhdParams(particles_per_target=args.particles),
        workers=args.workers,
    )
    result.to_csv(args.out)
    print(f"wrote {args.out} ({scenario.duration} scans, {args.runs} runs)")
    if len(result.scans) > 0:
        print(f"mean OSPA mbm: {result.ospa_mbm.mean():.4f}")
        print(f"mean OSPA phd: {result.ospa_phd.mean():.4f}")
    return 0


def cmd_eval(args) -> int:
    truth = read_states_csv(args.truth, TRUTH_HEADER)
    estimates = read_states_csv(args.estimates, ESTIMATES_HEADER)
    last_scan = max(truth) if truth else (max(estimates) if estimates else 0)
    stray = sorted(s for s in estimates if s < 1 or s > last_scan)
    if stray:
        raise CsvFormatError(
            f"estimate scans outside truth range 1..{last_scan}: {stray}"
        )
    params = OspaParams(cutoff=args.cutoff, order=args.order)
    empty = np.empty((0, 4))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scan", "ospa", "ospa_loc", "ospa_card"])
        for scan in range(1, last_scan + 1):
            d = ospa_distance(
                estimates.get(scan, empty), truth.get(scan, empty), params
            )
            writer.writerow(
                [scan, f"{d.total:.6f}", f"{d.localization:.6f}", f"{d.cardinality:.6f}"]
            )
    print(f"wrote {args.out} ({last_scan} scans)")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "track": cmd_track,
    "bench": cmd_bench,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, CsvFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
