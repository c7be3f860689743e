"""Plot result series from sweep run directories.

The pipeline is intentionally dumb: it reads series.csv columns written by
the simulator and draws them. It never recomputes a metric. Rendering is a
pure function of the input CSVs -- fixed figure size, DPI, and stripped
volatile PNG metadata make re-renders byte-identical under one matplotlib
version.

A run directory is any directory holding a series.csv; its rule, strategy,
and seed come from run_meta.json when present, else from the directory
naming scheme ``<rule>_<strategy>_seed<seed>``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # pinned backend: deterministic, headless
import matplotlib.pyplot as plt  # noqa: E402

SERIES_HEADER = ["episode", "cum_liquidity", "pct_cleared_smoothed", "hit_rate_smoothed"]
LEARNER_STRATEGIES = ("diff", "local", "global")
STRATEGY_ORDER = {name: k for k, name in enumerate(("diff", "local", "global", "random", "greedy"))}

# figure id -> (series column, rule filter or None)
FIGURE_IDS: dict[str, tuple[str, str | None]] = {
    "cum_liquidity": ("cum_liquidity", None),
    "cum_liq_minfill": ("cum_liquidity", "minfill"),
    "hit_exact": ("hit_rate_smoothed", "exact"),
    "pct_cleared_exact": ("pct_cleared_smoothed", "exact"),
    "pct_cleared_minfill": ("pct_cleared_smoothed", "minfill"),
}

FIGURE_TITLES = {
    "cum_liquidity": "Cumulative liquidity through episodes",
    "cum_liq_minfill": "Cumulative liquidity through episodes (MinFill)",
    "hit_exact": "Hit rate (exact rule)",
    "pct_cleared_exact": "Share of initial balance cleared (exact rule)",
    "pct_cleared_minfill": "Share of initial balance cleared (MinFill)",
}

Y_LABELS = {
    "cum_liquidity": "cumulative cleared volume",
    "hit_rate_smoothed": "hit rate (smoothed)",
    "pct_cleared_smoothed": "fraction of initial balance cleared (smoothed)",
}


class MissingSeriesError(FileNotFoundError):
    pass


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class RunRef:
    path: Path
    rule: str
    strategy: str
    seed: int

    @property
    def label(self) -> str:
        kind = "Learning" if self.strategy in LEARNER_STRATEGIES else "Baseline"
        return f"{kind} ({self.rule}_{self.strategy})"


@dataclass
class FigureSpec:
    figure_id: str
    input_runs: list[Path]
    labels: list[str]

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(
                f"unknown figure_id {self.figure_id!r}; expected one of "
                f"{sorted(FIGURE_IDS)}"
            )
        if len(self.input_runs) != len(self.labels):
            raise ValueError("one label per input run required")


def parse_run_dir(path: Path) -> RunRef:
    meta_path = path / "run_meta.json"
    if meta_path.exists():
        config = json.loads(meta_path.read_text())["config"]
        return RunRef(
            path=path,
            rule=config["clearing_rule"],
            strategy=config["strategy"],
            seed=int(config["master_seed"]),
        )
    parts = path.name.rsplit("_", 2)
    if len(parts) == 3 and parts[2].startswith("seed"):
        return RunRef(
            path=path, rule=parts[0], strategy=parts[1], seed=int(parts[2][4:])
        )
    raise ValueError(
        f"cannot identify run {path}: no run_meta.json and the directory name "
        "does not follow <rule>_<strategy>_seed<seed>"
    )


def discover_runs(sweep_dir: str | Path) -> list[RunRef]:
    sweep_dir = Path(sweep_dir)
    refs = [
        parse_run_dir(p.parent) for p in sorted(sweep_dir.glob("*/series.csv"))
    ]
    if not refs:
        raise MissingSeriesError(f"no run directories with series.csv under {sweep_dir}")
    refs.sort(key=lambda r: (r.rule, STRATEGY_ORDER.get(r.strategy, 99), r.seed))
    return refs


def read_series_column(run_dir: Path, column: str) -> tuple[list[int], list[float]]:
    series_path = run_dir / "series.csv"
    if not series_path.exists():
        raise MissingSeriesError(f"run {run_dir} has no series.csv")
    with series_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SERIES_HEADER:
            raise SchemaError(
                f"{series_path}: unexpected header {reader.fieldnames}; "
                f"expected {SERIES_HEADER}"
            )
        if column not in SERIES_HEADER:
            raise SchemaError(f"unknown series column {column!r}")
        episodes: list[int] = []
        values: list[float] = []
        for row in reader:
            if row[column] == "":  # episodes omitted from this series
                continue
            episodes.append(int(row["episode"]))
            values.append(float(row[column]))
    return episodes, values


def render(spec: FigureSpec, out_path: str | Path) -> Path:
    """Draw one figure with a line per run; returns the written path."""
    if not spec.input_runs:
        raise MissingSeriesError(f"figure {spec.figure_id}: empty input run list")
    column, _ = FIGURE_IDS[spec.figure_id]
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    try:
        for run_dir, label in zip(spec.input_runs, spec.labels):
            episodes, values = read_series_column(Path(run_dir), column)
            ax.plot(episodes, values, linewidth=1.2, label=label)
        ax.set_xlabel("episode")
        ax.set_ylabel(Y_LABELS[column])
        ax.set_title(FIGURE_TITLES[spec.figure_id])
        ax.legend(loc="best", fontsize=8)
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(
            out_path,
            dpi=150,
            format="png",
            metadata={"Software": None},  # strip version-bearing text chunk
        )
    finally:
        plt.close(fig)
    return out_path


def specs_for_sweep(
    sweep_dir: str | Path, only: str | None = None
) -> list[tuple[FigureSpec, str]]:
    """Build the standard figure set from a sweep directory.

    Returns (spec, filename) pairs. Seeds are disambiguated in the legend
    only when a (rule, strategy) combination appears more than once.
    """
    runs = discover_runs(sweep_dir)
    figure_ids = [only] if only else list(FIGURE_IDS)
    specs = []
    for figure_id in figure_ids:
        if figure_id not in FIGURE_IDS:
            raise ValueError(
                f"unknown figure_id {figure_id!r}; expected one of {sorted(FIGURE_IDS)}"
            )
        _, rule_filter = FIGURE_IDS[figure_id]
        chosen = [r for r in runs if rule_filter is None or r.rule == rule_filter]
        if not chosen:
            raise MissingSeriesError(
                f"figure {figure_id}: no runs for rule {rule_filter!r} in {sweep_dir}"
            )
        combo_counts: dict[str, int] = {}
        for r in chosen:
            combo_counts[r.label] = combo_counts.get(r.label, 0) + 1
        labels = [
            r.label if combo_counts[r.label] == 1 else f"{r.label} seed={r.seed}"
            for r in chosen
        ]
        spec = FigureSpec(
            figure_id=figure_id,
            input_runs=[r.path for r in chosen],
            labels=labels,
        )
        specs.append((spec, f"{figure_id}.png"))
    return specs
