"""Bilateral bond-market liquidity simulator with independent tabular learners."""

__version__ = "0.1.0"

from .agents import (
    LearnerParams,
    QTable,
    Strategy,
    greedy_liquidity_penalty,
    greedy_policy,
    q_update,
    random_policy,
    select_action,
)
from .config import ConfigError, ExperimentConfig, load_config
from .environment import (
    Engine,
    EpisodeRecord,
    InvariantViolation,
    Population,
    build_population,
    pair_agents,
    reset_episode,
)
from .game import (
    ClearingRule,
    TradeOutcome,
    best_response_set,
    clear,
    closed_form_pure_nash,
    enumerate_pure_nash,
    payoff,
)
from .metrics import RunSummary, cumulative_liquidity, hit_rate, percent_cleared, summarize
from .rewards import (
    RewardContext,
    RewardMode,
    assign_rewards,
    difference_reward,
    global_reward,
    local_reward,
)
from .runner import grid_configs, report, run_and_write, run_experiment, run_sweep

__all__ = [
    "ClearingRule",
    "ConfigError",
    "Engine",
    "EpisodeRecord",
    "ExperimentConfig",
    "InvariantViolation",
    "LearnerParams",
    "Population",
    "QTable",
    "RewardContext",
    "RewardMode",
    "RunSummary",
    "Strategy",
    "TradeOutcome",
    "assign_rewards",
    "best_response_set",
    "build_population",
    "clear",
    "closed_form_pure_nash",
    "cumulative_liquidity",
    "difference_reward",
    "enumerate_pure_nash",
    "global_reward",
    "greedy_liquidity_penalty",
    "greedy_policy",
    "grid_configs",
    "hit_rate",
    "load_config",
    "local_reward",
    "pair_agents",
    "payoff",
    "percent_cleared",
    "q_update",
    "random_policy",
    "report",
    "reset_episode",
    "run_and_write",
    "run_experiment",
    "run_sweep",
    "select_action",
    "summarize",
]
