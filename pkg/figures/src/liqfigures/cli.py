"""CLI: render the standard figure set from a sweep directory.

    figures --sweep-dir <dir> --out <dir> [--only <figure_id>]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .pipeline import FIGURE_IDS, MissingSeriesError, SchemaError, render, specs_for_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures", description="render result figures from a liqsim sweep"
    )
    parser.add_argument("--sweep-dir", required=True, help="directory of run directories")
    parser.add_argument("--out", required=True, help="output directory for PNG files")
    parser.add_argument(
        "--only", choices=sorted(FIGURE_IDS), help="render a single figure id"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        specs = specs_for_sweep(args.sweep_dir, only=args.only)
        for spec, filename in specs:
            path = render(spec, Path(args.out) / filename)
            print(f"wrote {path} ({len(spec.input_runs)} series)")
        return 0
    except (MissingSeriesError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
