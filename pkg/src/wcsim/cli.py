"""Command-line entry point.

Runs a built-in or file scenario under the fixed (tt) and/or adaptive (ftt)
sampling scheme, writes CSV traces and a summary JSON per run, optionally
renders PNG figures, and prints a per-loop comparison table.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import scenario as scenario_mod
from .metrics import export_run, iae, mean_miss_ratio
from .run import RunResult, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcsim",
        description="Simulate multi-loop wireless control over a shared CSMA/CA "
                    "channel with fixed (tt) or adaptive (ftt) sampling.")
    parser.add_argument("--scenario", required=True,
                        help="built-in name (%s) or path to a scenario JSON file"
                             % ", ".join(scenario_mod.BUILTIN_NAMES))
    parser.add_argument("--scheme", choices=["tt", "ftt", "both"], default="both",
                        help="sampling scheme(s) to run (default: both)")
    parser.add_argument("--seed", type=int, default=1,
                        help="base random seed (default: 1)")
    parser.add_argument("--sweep", type=int, default=1, metavar="K",
                        help="run K consecutive seeds starting at --seed")
    parser.add_argument("--duration", type=float, default=None, metavar="S",
                        help="override the scenario duration in seconds")
    parser.add_argument("--out", default=".", metavar="DIR",
                        help="output directory for traces and figures (default: .)")
    parser.add_argument("--plot", action="store_true",
                        help="also render PNG figures next to the CSV output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _resolve_scenario(args.scenario)
    except scenario_mod.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.sweep < 1:
        print("error: --sweep must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.duration is not None and args.duration <= 0:
        print("error: --duration must be positive", file=sys.stderr)
        return EXIT_CONFIG

    schemes = ["tt", "ftt"] if args.scheme == "both" else [args.scheme]
    seeds = list(range(args.seed, args.seed + args.sweep))
    base = spec.output_prefix or spec.name

    results: list[RunResult] = []
    try:
        for seed in seeds:
            for scheme in schemes:
                result = run_scenario(spec, scheme=scheme, seed=seed,
                                      duration=args.duration)
                prefix = os.path.join(args.out, f"{base}-{scheme}-seed{seed}")
                export_run(result.traces, result.summary, prefix)
                if args.plot:
                    from . import figures
                    figures.render_run(result, prefix)
                results.append(result)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO

    _print_run_table(results)
    if len(seeds) > 1:
        _print_sweep_table(results, schemes)
    return EXIT_OK


def _resolve_scenario(name_or_path: str):
    if name_or_path in scenario_mod.BUILTIN_NAMES:
        return scenario_mod.builtin(name_or_path)
    if os.path.exists(name_or_path):
        return scenario_mod.load(name_or_path)
    raise scenario_mod.ScenarioError(
        f"{name_or_path!r} is neither a built-in scenario "
        f"({', '.join(scenario_mod.BUILTIN_NAMES)}) nor an existing file")


def _print_run_table(results: list[RunResult]) -> None:
    print(f"{'seed':>5} {'scheme':>6} {'loop':>4} {'IAE':>12} {'mean DMR':>9} "
          f"{'diverged':>8} {'delivered/offered':>18}")
    for result in results:
        for loop_id in sorted(result.traces):
            info = result.summary["loops"][str(loop_id)]
            pkts = info["packets"]
            ratio = f"{pkts.get('delivered', 0)}/{pkts.get('offered', 0)}"
            print(f"{result.seed:>5} {result.scheme:>6} {loop_id:>4} "
                  f"{info['iae']:>12.4g} {info['mean_dmr']:>9.3f} "
                  f"{str(info['diverged']).lower():>8} {ratio:>18}")


def _print_sweep_table(results: list[RunResult], schemes: list[str]) -> None:
    print("\nsweep aggregate (per scheme and loop):")
    print(f"{'scheme':>6} {'loop':>4} {'IAE mean':>12} {'IAE min':>12} {'IAE max':>12} "
          f"{'DMR mean':>9}")
    loop_ids = sorted({lid for r in results for lid in r.traces})
    for scheme in schemes:
        for loop_id in loop_ids:
            iaes, dmrs = [], []
            for r in results:
                if r.scheme != scheme or loop_id not in r.traces:
                    continue
                info = r.summary["loops"][str(loop_id)]
                iaes.append(info["iae"])
                dmrs.append(info["mean_dmr"])
            if not iaes:
                continue
            print(f"{scheme:>6} {loop_id:>4} {sum(iaes) / len(iaes):>12.4g} "
                  f"{min(iaes):>12.4g} {max(iaes):>12.4g} "
                  f"{sum(dmrs) / len(dmrs):>9.3f}")


if __name__ == "__main__":
    sys.exit(main())
