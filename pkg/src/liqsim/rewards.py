"""Per-agent learning signals computed from episode trade outcomes.

Three modes share the same Q-learning core and differ only in the scalar
each paired agent receives:

* difference -- the agent's marginal contribution to cleared volume: the
  quantity its pair cleared minus the quantity that would have cleared had
  it offered zero (partner's offer held fixed). Zero offers never clear, so
  this collapses to the pair's cleared quantity under both rules.
* local      -- 2q - a_i, minus a flat 0.1 when the partner repeats from
  the previous episode.
* global     -- total cleared volume across all pairs in the episode,
  broadcast identically to every paired learner.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .game import ClearingRule, TradeOutcome, clear

REPEAT_PARTNER_PENALTY = 0.1


class RewardMode(enum.Enum):
    DIFFERENCE = "diff"
    LOCAL = "local"
    GLOBAL = "global"


@dataclass(frozen=True)
class RewardContext:
    """Inputs for one paired agent's reward; outcome.offer_i is the agent's own."""

    outcome: TradeOutcome
    own_offer: int
    episode_total_g: int
    repeated_partner: bool

    def __post_init__(self) -> None:
        if self.outcome.offer_i != self.own_offer:
            raise ValueError("outcome must be oriented with offer_i = own offer")
        if self.episode_total_g < self.outcome.quantity:
            raise ValueError("episode total G cannot be below the pair's quantity")


def difference_reward(rule: ClearingRule, a_i: int, a_j: int) -> float:
    """Marginal contribution of offering a_i instead of 0 against a fixed a_j."""
    factual = clear(rule, a_i, a_j).quantity
    counterfactual = clear(rule, 0, a_j).quantity
    return float(factual - counterfactual)


def local_reward(
    q: int,
    a_i: int,
    repeated_partner: bool,
    penalty: float = REPEAT_PARTNER_PENALTY,
) -> float:
    """2q - a_i, with a flat repeat-partner penalty."""
    return 2.0 * q - a_i - (penalty if repeated_partner else 0.0)


def global_reward(episode_total_g: int) -> float:
    """Total cleared volume across all pairs, identical for every learner."""
    if episode_total_g < 0:
        raise ValueError("episode total G must be non-negative")
    return float(episode_total_g)


def assign_rewards(
    mode: RewardMode,
    contexts: list[RewardContext],
    rule: ClearingRule,
    penalty: float = REPEAT_PARTNER_PENALTY,
) -> list[float]:
    """Apply the mode's formula elementwise over paired agents.

    Unpaired agents have no context here and therefore receive no reward
    and no update.
    """
    if mode is RewardMode.DIFFERENCE:
        return [
            difference_reward(rule, c.own_offer, c.outcome.offer_j) for c in contexts
        ]
    if mode is RewardMode.LOCAL:
        return [
            local_reward(c.outcome.quantity, c.own_offer, c.repeated_partner, penalty)
            for c in contexts
        ]
    if mode is RewardMode.GLOBAL:
        return [global_reward(c.episode_total_g) for c in contexts]
    raise TypeError(f"unknown reward mode: {mode!r}")
