"""Series and summaries derived from episode records.

Three reported series: cumulative liquidity, smoothed fraction of initial
balance cleared, and smoothed hit rate. Smoothing is a trailing moving
average; partial leading windows average over the points available, so
window=1 is the identity.

Cumulative liquidity supports three bases:

* ``g``        -- raw cleared volume per episode (each pair's q once).
* ``recorded`` -- cleared volume minus the greedy over-offer penalty where
  it applies; identical to ``g`` for every non-greedy run. This is the
  basis for series.csv, summaries, and the strategy-comparison figures,
  since the greedy baseline is only comparable after its penalty.
* ``cohort``   -- per-agent recorded liquidity (each side's q counted,
  penalty applied to the over-offering side), matching the per-cohort
  episode bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import EpisodeRecord

DEFAULT_WINDOW = 100
DEFAULT_THRESHOLD = 0.7
TAIL_FRACTION = 0.1


@dataclass
class RunSummary:
    total_liquidity: float
    mean_hit_rate_tail: float
    episodes_to_threshold: int | None


def trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average; leading partial windows use available points."""
    if window < 1:
        raise ValueError("window must be >= 1")
    v = np.asarray(values, dtype=np.float64)
    if len(v) == 0 or window == 1:
        return v.copy()
    csum = np.cumsum(v)
    out = np.empty_like(csum)
    head = min(window, len(v))
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if len(v) > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out


def cohort_liquidity(record: EpisodeRecord) -> float:
    """Per-agent recorded liquidity summed over the run's cohorts."""
    return float(sum(record.per_cohort_liquidity.values()))


def recorded_liquidity(record: EpisodeRecord) -> float:
    """Cleared volume minus greedy penalties, counted once per pair.

    Each pair's q appears once on each side of the per-agent bookkeeping,
    so recorded = (sum of per-agent liquidity) - G subtracts the double
    count and keeps the full penalty.
    """
    return cohort_liquidity(record) - record.total_cleared_g


def cumulative_liquidity(
    records: list[EpisodeRecord], basis: str = "recorded"
) -> np.ndarray:
    if basis == "g":
        per_episode = np.array([r.total_cleared_g for r in records], dtype=np.float64)
    elif basis == "recorded":
        per_episode = np.array([recorded_liquidity(r) for r in records], dtype=np.float64)
    elif basis == "cohort":
        per_episode = np.array([cohort_liquidity(r) for r in records], dtype=np.float64)
    else:
        raise ValueError(f"basis must be 'g', 'recorded' or 'cohort', got {basis!r}")
    return np.cumsum(per_episode)


def percent_cleared(records: list[EpisodeRecord], window: int) -> np.ndarray:
    """Smoothed per-episode ratio of cleared volume to initial balance."""
    sums = np.array([r.initial_balance_sum for r in records], dtype=np.int64)
    if len(sums) and int(sums.min()) <= 0:
        # balances start at >= 1 per agent, so this cannot happen in a valid run
        raise ValueError("initial_balance_sum must be positive in every episode")
    g = np.array([r.total_cleared_g for r in records], dtype=np.float64)
    return trailing_mean(g / sums, window) if len(sums) else np.zeros(0)


def hit_rate(
    records: list[EpisodeRecord], window: int
) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed fraction of paired agents whose pair cleared.

    Episodes with no pairs are omitted before smoothing; returns
    (episode_indices, smoothed_values).
    """
    kept = [r for r in records if r.paired_count > 0]
    episodes = np.array([r.episode_index for r in kept], dtype=np.int64)
    raw = np.array(
        [r.hit_count / r.paired_count for r in kept], dtype=np.float64
    )
    return episodes, trailing_mean(raw, window)


def first_crossing(
    episodes: np.ndarray, values: np.ndarray, threshold: float
) -> int | None:
    """Episode index at which a series first reaches the threshold."""
    idx = np.flatnonzero(values >= threshold)
    return int(episodes[idx[0]]) if len(idx) else None


def summarize(
    records: list[EpisodeRecord],
    window: int = DEFAULT_WINDOW,
    threshold: float = DEFAULT_THRESHOLD,
    basis: str = "recorded",
) -> RunSummary:
    if not records:
        raise ValueError("cannot summarize an empty run")
    cum = cumulative_liquidity(records, basis=basis)
    episodes, hits = hit_rate(records, window)
    tail = max(1, int(round(TAIL_FRACTION * len(hits)))) if len(hits) else 0
    return RunSummary(
        total_liquidity=float(cum[-1]),
        mean_hit_rate_tail=float(hits[-tail:].mean()) if tail else float("nan"),
        episodes_to_threshold=first_crossing(episodes, hits, threshold),
    )
