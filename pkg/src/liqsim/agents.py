"""Agent policies: shared tabular Q-learning core and non-learning baselines.

The learner state is the agent's current balance s, the action set is
{1, ..., s}, and the Q-table holds one entry per feasible (s, a). All three
learner cohorts run the same selection and update code; the reward signal
is the only difference.

Action selection and the TD update exist in two forms: the object API below
(draws from a numpy Generator) and `*_from_uniforms` scalar cores that take
pre-drawn uniforms. The episode kernels consume the scalar cores' exact
arithmetic, which keeps the compiled and pure-Python backends bit-identical.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .rewards import RewardMode


class Strategy(enum.Enum):
    """Policy kind, fixed per agent for a whole run."""

    DIFF = "diff"
    LOCAL = "local"
    GLOBAL = "global"
    RANDOM = "random"
    GREEDY = "greedy"

    @property
    def is_learner(self) -> bool:
        return self in (Strategy.DIFF, Strategy.LOCAL, Strategy.GLOBAL)

    @property
    def reward_mode(self) -> RewardMode:
        if not self.is_learner:
            raise ValueError(f"{self.value} agents receive no reward signal")
        return RewardMode(self.value)

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown strategy {name!r}; expected one of {[s.value for s in cls]}"
            ) from None


@dataclass
class LearnerParams:
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


class QTable:
    """Ragged Q-table: row s holds actions 1..s, so row 0 is empty.

    Entries exist exactly for feasible (s, a) and start at zero.
    """

    def __init__(self, max_state: int) -> None:
        if max_state < 1:
            raise ValueError("max_state must be at least 1")
        self.max_state = max_state
        self._rows = [np.zeros(s, dtype=np.float64) for s in range(max_state + 1)]

    def get(self, s: int, a: int) -> float:
        self._check(s, a)
        return float(self._rows[s][a - 1])

    def set(self, s: int, a: int, value: float) -> None:
        self._check(s, a)
        if not np.isfinite(value):
            raise ValueError("Q values must stay finite")
        self._rows[s][a - 1] = value

    def row(self, s: int) -> np.ndarray:
        if not 0 <= s <= self.max_state:
            raise ValueError(f"state {s} out of range 0..{self.max_state}")
        return self._rows[s]

    def max_value(self, s: int) -> float:
        """max_a Q(s, a); the empty action set at s = 0 maxes to 0."""
        if s == 0:
            return 0.0
        return float(self._rows[s].max())

    def _check(self, s: int, a: int) -> None:
        if not 1 <= s <= self.max_state or not 1 <= a <= s:
            raise ValueError(
                f"(s={s}, a={a}) infeasible for max_state={self.max_state}"
            )

    def items(self):
        """Yield (state, action, value) over all feasible entries."""
        for s in range(1, self.max_state + 1):
            for a in range(1, s + 1):
                yield s, a, float(self._rows[s][a - 1])


def uniform_index(u: float, n: int) -> int:
    """Map u in [0, 1) to an index in 0..n-1; clamps the rounding edge case."""
    k = int(u * n)
    return n - 1 if k >= n else k


TIE_UNIFORM = 0
TIE_LOW = 1
TIE_HIGH = 2
TIE_CODES = {"uniform": TIE_UNIFORM, "low": TIE_LOW, "high": TIE_HIGH}


def select_action_from_uniforms(
    row: np.ndarray,
    s: int,
    epsilon: float,
    u_explore: float,
    u_action: float,
    tie_break: str = "uniform",
) -> tuple[int, bool]:
    """Scalar epsilon-greedy core over Q row `row` (actions 1..s).

    Exactly one uniform is consumed per branch, so the draw pattern is
    independent of which branch fires. Q-ties in the exploit branch resolve
    per `tie_break`: uniformly at random, toward the lowest offer, or toward
    the highest offer. Returns (action, explored).
    """
    if u_explore < epsilon:
        return 1 + uniform_index(u_action, s), True
    tie_code = TIE_CODES[tie_break]
    if tie_code == TIE_HIGH:
        best = row[s - 1]
        action = s
        for a in range(s - 1, 0, -1):
            v = row[a - 1]
            if v > best:
                best = v
                action = a
        return action, False
    if tie_code == TIE_LOW:
        best = row[0]
        action = 1
        for a in range(2, s + 1):
            v = row[a - 1]
            if v > best:
                best = v
                action = a
        return action, False
    best = row[0]
    n_ties = 1
    for a in range(2, s + 1):
        v = row[a - 1]
        if v > best:
            best = v
            n_ties = 1
        elif v == best:
            n_ties += 1
    pick = uniform_index(u_action, n_ties)
    seen = 0
    for a in range(1, s + 1):
        if row[a - 1] == best:
            if seen == pick:
                return a, False
            seen += 1
    raise AssertionError("tie scan must terminate")


def select_action(
    qtable: QTable,
    s: int,
    params: LearnerParams,
    rng: np.random.Generator,
    tie_break: str = "uniform",
) -> int | None:
    """Epsilon-greedy draw from the feasible actions of state s.

    Returns None (dormant) at s = 0: the agent sits the episode out.
    """
    if s == 0:
        return None
    action, _ = select_action_from_uniforms(
        qtable.row(s), s, params.epsilon, rng.random(), rng.random(), tie_break
    )
    return action


def q_update_value(
    q_sa: float, r: float, max_next: float, alpha: float, gamma: float
) -> float:
    """One TD(0) step; shared verbatim by both episode kernels."""
    return q_sa + alpha * (r + gamma * max_next - q_sa)


def q_update(
    qtable: QTable, s: int, a: int, r: float, s_next: int, params: LearnerParams
) -> None:
    """Q(s,a) += alpha * (r + gamma * max_a' Q(s_next, a') - Q(s,a))."""
    if s_next > qtable.max_state or s_next < 0:
        raise ValueError(f"s_next={s_next} out of range 0..{qtable.max_state}")
    current = qtable.get(s, a)
    qtable.set(s, a, q_update_value(current, r, qtable.max_value(s_next), params.alpha, params.gamma))


def random_policy(s: int, rng: np.random.Generator) -> int | None:
    """Uniform offer over {1, ..., s}; dormant at s = 0."""
    if s == 0:
        return None
    return 1 + uniform_index(rng.random(), s)


def greedy_policy(s: int) -> int | None:
    """Offer the entire current balance; dormant at s = 0."""
    if s == 0:
        return None
    return s


def greedy_liquidity_penalty(
    a_i: int, a_j: int, q: int, rate: float = 0.2
) -> float:
    """Recorded-liquidity penalty for a greedy agent over-offering under MinFill.

    Subtracted from the agent's own recorded liquidity contribution only;
    trade quantities and balances are never touched. `q` is accepted for
    signature symmetry with the metrics call site but the excess depends on
    the offers alone.
    """
    del q
    return rate * max(0, a_i - a_j)
