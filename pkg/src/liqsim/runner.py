"""Run orchestration and persistent outputs.

Each run directory holds:

* ``episodes.csv`` -- one row per episode:
  episode,total_G,initial_balance_sum,hit_count,paired_count,cohort_liquidity
* ``series.csv``   -- derived series:
  episode,cum_liquidity,pct_cleared_smoothed,hit_rate_smoothed
* ``summary.csv``  -- single row: total_liquidity,mean_hit_rate_tail,
  episodes_to_threshold
* ``run_meta.json`` -- full config echo, default provenance, RNG and
  smoothing notes, code version, backend used.

``cohort_liquidity`` is the per-agent recorded liquidity (greedy over-offer
penalty already applied), which makes summaries recomputable from
episodes.csv alone. Files are written atomically (temp file then rename).
A sweep runs one directory per config; a failing run is recorded in the
failure manifest and the sweep continues.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .agents import LearnerParams, Strategy
from .config import ExperimentConfig, default_provenance
from .environment import Engine, EpisodeRecord, build_population, run_episodes
from .metrics import (
    RunSummary,
    cohort_liquidity,
    cumulative_liquidity,
    hit_rate,
    percent_cleared,
    summarize,
)

EPISODES_HEADER = [
    "episode",
    "total_G",
    "initial_balance_sum",
    "hit_count",
    "paired_count",
    "cohort_liquidity",
]
SERIES_HEADER = ["episode", "cum_liquidity", "pct_cleared_smoothed", "hit_rate_smoothed"]
SUMMARY_HEADER = ["total_liquidity", "mean_hit_rate_tail", "episodes_to_threshold"]

RNG_NOTE = (
    "philox-2x64 keyed by (master_seed, episode_index); per-episode draw "
    "order: balances, pairing permutation, explore uniforms, action uniforms "
    "(uniform arrays indexed by agent id)"
)
SMOOTHING_NOTE = "trailing moving average; partial leading windows use available points"


def _fmt(value: float) -> str:
    """Shortest round-trip decimal form; deterministic for a given double."""
    return repr(float(value))


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_engine(config: ExperimentConfig) -> Engine:
    pop = build_population(
        n_agents=config.n_agents,
        fraction_large=config.fraction_large,
        cap_small=config.cap_small,
        cap_large=config.cap_large,
        strategies=config.strategy,
    )
    return Engine(
        pop=pop,
        rule=config.clearing_rule,
        params=LearnerParams(
            alpha=config.alpha, gamma=config.gamma, epsilon=config.epsilon
        ),
        repeat_penalty=config.repeat_penalty,
        greedy_penalty_rate=config.greedy_penalty_rate,
        next_state_mode=config.next_state_mode,
        tie_break=config.tie_break,
        carryover=config.carryover,
        n_workers=config.n_workers,
        backend=config.backend,
    )


def run_experiment(config: ExperimentConfig) -> list[EpisodeRecord]:
    """Execute the configured number of episodes; deterministic in the seed."""
    config.validate()
    engine = build_engine(config)
    return run_episodes(engine, config.episodes, config.master_seed)


def episodes_csv_text(records: list[EpisodeRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EPISODES_HEADER)
    for r in records:
        writer.writerow(
            [
                r.episode_index,
                r.total_cleared_g,
                r.initial_balance_sum,
                r.hit_count,
                r.paired_count,
                _fmt(cohort_liquidity(r)),
            ]
        )
    return buf.getvalue()


def series_csv_text(records: list[EpisodeRecord], window: int) -> str:
    cum = cumulative_liquidity(records, basis="recorded")
    pct = percent_cleared(records, window)
    hit_eps, hit_vals = hit_rate(records, window)
    hit_by_episode = dict(zip(hit_eps.tolist(), hit_vals.tolist()))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    for i, r in enumerate(records):
        hit = hit_by_episode.get(r.episode_index)
        writer.writerow(
            [
                r.episode_index,
                _fmt(cum[i]),
                _fmt(pct[i]),
                "" if hit is None else _fmt(hit),
            ]
        )
    return buf.getvalue()


def summary_csv_text(summary: RunSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    writer.writerow(
        [
            _fmt(summary.total_liquidity),
            _fmt(summary.mean_hit_rate_tail),
            "" if summary.episodes_to_threshold is None else summary.episodes_to_threshold,
        ]
    )
    return buf.getvalue()


def qtable_csv_text(engine: Engine) -> str:
    """Flat (agent, state, action, value) dump of all feasible entries."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["agent", "state", "action", "value"])
    q = engine.pop.qvalues
    if q is not None:
        caps = engine.pop.caps
        for agent in range(engine.pop.n_agents):
            cap = int(caps[agent])
            for s in range(1, cap + 1):
                for a in range(1, s + 1):
                    writer.writerow([agent, s, a, _fmt(q[agent, s, a - 1])])
    return buf.getvalue()


@dataclass
class RunResult:
    run_dir: Path
    records: list[EpisodeRecord]
    summary: RunSummary


def run_and_write(
    config: ExperimentConfig,
    run_dir: str | Path,
    given_keys: set[str] | None = None,
    overwrite: bool = False,
) -> RunResult:
    run_dir = Path(run_dir)
    if run_dir.exists() and (run_dir / "episodes.csv").exists() and not overwrite:
        raise FileExistsError(
            f"{run_dir} already holds a completed run; pass overwrite to redo"
        )
    run_dir.mkdir(parents=True, exist_ok=True)

    config.validate()
    engine = build_engine(config)
    records = run_episodes(engine, config.episodes, config.master_seed)
    summary = summarize(
        records, window=config.smoothing_window, threshold=config.hit_threshold
    ) if records else RunSummary(0.0, float("nan"), None)

    _atomic_write(run_dir / "episodes.csv", episodes_csv_text(records))
    _atomic_write(run_dir / "series.csv", series_csv_text(records, config.smoothing_window))
    _atomic_write(run_dir / "summary.csv", summary_csv_text(summary))
    meta = {
        "config": config.to_dict(),
        "defaults_provenance": default_provenance(config, given_keys or set()),
        "rng": RNG_NOTE,
        "smoothing": SMOOTHING_NOTE,
        "liquidity_basis": (
            "series cum_liquidity counts each pair's cleared q once, minus the "
            "greedy over-offer penalty where it applies; episodes.csv "
            "cohort_liquidity is the per-agent recorded total (both sides)"
        ),
        "tie_break_resolved": engine.tie_break,
        "backend": engine.backend_name,
        "version": __version__,
    }
    _atomic_write(run_dir / "run_meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if config.export_qtables and engine.pop.qvalues is not None:
        _atomic_write(
            run_dir / f"qtable_{config.strategy.value}.csv", qtable_csv_text(engine)
        )
    return RunResult(run_dir=run_dir, records=records, summary=summary)


def grid_configs(
    base: ExperimentConfig,
    rules: list[str],
    strategies: list[str],
    seeds: list[int],
) -> list[ExperimentConfig]:
    """Cartesian product sweep; shared seeds keep cross-strategy runs paired."""
    configs = []
    for rule in rules:
        for strategy in strategies:
            for seed in seeds:
                configs.append(
                    dataclasses.replace(
                        base,
                        clearing_rule=type(base.clearing_rule).parse(rule),
                        strategy=Strategy.parse(strategy),
                        master_seed=seed,
                    ).validate()
                )
    return configs


@dataclass
class SweepResult:
    out_root: Path
    run_dirs: list[Path]
    failures: dict[str, str]


def run_sweep(
    configs: list[ExperimentConfig],
    out_root: str | Path,
    given_keys: set[str] | None = None,
    overwrite: bool = False,
) -> SweepResult:
    """One directory per config; failures are recorded and do not stop the sweep."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    run_dirs: list[Path] = []
    failures: dict[str, str] = {}
    for config in configs:
        name = config.run_name()
        try:
            result = run_and_write(
                config, out_root / name, given_keys=given_keys, overwrite=overwrite
            )
            run_dirs.append(result.run_dir)
        except Exception as exc:  # noqa: BLE001 -- per-run isolation is the contract
            failures[name] = f"{type(exc).__name__}: {exc}"
    if failures:
        _atomic_write(
            out_root / "failures.json",
            json.dumps(failures, indent=2, sort_keys=True) + "\n",
        )
    return SweepResult(out_root=out_root, run_dirs=run_dirs, failures=failures)


def read_episodes_csv(path: str | Path) -> list[EpisodeRecord]:
    """Rebuild minimal records from episodes.csv for post-hoc reporting.

    The cohort split is not stored per cohort in the CSV, so the recorded
    liquidity is reattached under a single 'all' cohort; series and summary
    computations only need the total.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EPISODES_HEADER:
            raise ValueError(
                f"{path}: unexpected episodes.csv header {reader.fieldnames}; "
                f"expected {EPISODES_HEADER}"
            )
        records = []
        for row in reader:
            records.append(
                EpisodeRecord(
                    episode_index=int(row["episode"]),
                    total_cleared_g=int(row["total_G"]),
                    initial_balance_sum=int(row["initial_balance_sum"]),
                    hit_count=int(row["hit_count"]),
                    paired_count=int(row["paired_count"]),
                    per_cohort_liquidity={"all": float(row["cohort_liquidity"])},
                    per_cohort_trade_volume={},
                )
            )
    return records


def report(run_dir: str | Path, window: int | None = None, threshold: float | None = None) -> RunSummary:
    """Recompute series.csv and summary.csv from episodes.csv.

    Window/threshold default to the values in run_meta.json when present.
    """
    run_dir = Path(run_dir)
    meta_path = run_dir / "run_meta.json"
    if (window is None or threshold is None) and meta_path.exists():
        meta = json.loads(meta_path.read_text())
        window = window if window is not None else meta["config"]["smoothing_window"]
        threshold = threshold if threshold is not None else meta["config"]["hit_threshold"]
    window = window if window is not None else 100
    threshold = threshold if threshold is not None else 0.7

    records = read_episodes_csv(run_dir / "episodes.csv")
    summary = summarize(records, window=window, threshold=threshold)
    _atomic_write(run_dir / "series.csv", series_csv_text(records, window))
    _atomic_write(run_dir / "summary.csv", summary_csv_text(summary))
    return summary
