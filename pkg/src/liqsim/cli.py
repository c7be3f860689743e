"""Command-line entry point.

Verbs:
  run    -- execute one configured run and write its output directory
  sweep  -- run a {rule} x {strategy} x {seed} grid with shared seeds
  report -- recompute series.csv and summary.csv from a run's episodes.csv

Exit codes: 0 success, 1 config error, 2 runtime invariant violation,
3 partial sweep failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .environment import InvariantViolation
from .runner import grid_configs, report, run_and_write, run_sweep

# CLI flags mirror config keys one to one (dashes for underscores).
_CONFIG_FLAGS: list[tuple[str, type | None]] = [
    ("n_agents", int),
    ("fraction_large", float),
    ("cap_small", int),
    ("cap_large", int),
    ("episodes", int),
    ("clearing_rule", str),
    ("strategy", str),
    ("alpha", float),
    ("gamma", float),
    ("epsilon", float),
    ("repeat_penalty", float),
    ("greedy_penalty_rate", float),
    ("smoothing_window", int),
    ("carryover", str),
    ("next_state_mode", str),
    ("tie_break", str),
    ("hit_threshold", float),
    ("master_seed", int),
    ("n_workers", int),
    ("backend", str),
    ("export_qtables", str),
    ("output_dir", str),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument(
        "--strict-seed",
        action="store_true",
        help="refuse to run unless master_seed is given explicitly",
    )
    for name, typ in _CONFIG_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ)


def _collect_overrides(args: argparse.Namespace) -> dict[str, object]:
    return {
        name: getattr(args, name)
        for name, _ in _CONFIG_FLAGS
        if getattr(args, name, None) is not None
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liqsim",
        description="bilateral liquidity market simulator with independent learners",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a single configured run")
    _add_config_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run a rule x strategy x seed grid")
    _add_config_flags(p_sweep)
    p_sweep.add_argument(
        "--rules", default="minfill,exact", help="comma-separated clearing rules"
    )
    p_sweep.add_argument(
        "--strategies",
        default="diff,local,global,random,greedy",
        help="comma-separated strategies",
    )
    p_sweep.add_argument(
        "--seeds", default="1,2,3,4,5", help="comma-separated master seeds"
    )
    p_sweep.add_argument(
        "--overwrite", action="store_true", help="redo completed run directories"
    )

    p_report = sub.add_parser("report", help="recompute series/summary from episodes.csv")
    p_report.add_argument("--run-dir", required=True)
    p_report.add_argument("--smoothing-window", type=int, dest="smoothing_window")
    p_report.add_argument("--hit-threshold", type=float, dest="hit_threshold")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            overrides = _collect_overrides(args)
            config = load_config(args.config, overrides, require_seed=args.strict_seed)
            result = run_and_write(
                config,
                f"{config.output_dir}/{config.run_name()}",
                given_keys=set(overrides),
            )
            print(f"run complete: {result.run_dir}")
            print(
                f"  total_liquidity={result.summary.total_liquidity:.1f} "
                f"tail_hit={result.summary.mean_hit_rate_tail:.4f} "
                f"to_threshold={result.summary.episodes_to_threshold}"
            )
            return 0
        if args.verb == "sweep":
            overrides = _collect_overrides(args)
            base = load_config(args.config, overrides, require_seed=False)
            seeds = [int(s) for s in args.seeds.split(",") if s]
            configs = grid_configs(
                base,
                [r for r in args.rules.split(",") if r],
                [s for s in args.strategies.split(",") if s],
                seeds,
            )
            result = run_sweep(
                configs,
                base.output_dir,
                given_keys=set(overrides),
                overwrite=args.overwrite,
            )
            print(
                f"sweep complete: {len(result.run_dirs)} runs in {result.out_root}"
                + (f", {len(result.failures)} failed" if result.failures else "")
            )
            for name, err in sorted(result.failures.items()):
                print(f"  FAILED {name}: {err}", file=sys.stderr)
            return 3 if result.failures else 0
        if args.verb == "report":
            summary = report(
                args.run_dir, window=args.smoothing_window, threshold=args.hit_threshold
            )
            print(
                f"report written: total_liquidity={summary.total_liquidity:.1f} "
                f"tail_hit={summary.mean_hit_rate_tail:.4f} "
                f"to_threshold={summary.episodes_to_threshold}"
            )
            return 0
        raise AssertionError(f"unhandled verb {args.verb}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, FileExistsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
