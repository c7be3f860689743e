"""Q-table, epsilon-greedy selection, TD update, and baseline policies."""

import numpy as np
import pytest

from liqsim.agents import (
    LearnerParams,
    QTable,
    Strategy,
    greedy_liquidity_penalty,
    greedy_policy,
    q_update,
    random_policy,
    select_action,
    select_action_from_uniforms,
)
from liqsim.rewards import RewardMode

# chi-square upper quantiles at p = 0.999 for the seeded frequency tests
CHI2_999 = {2: 13.82, 9: 27.88}


def rng(seed=7):
    return np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))


class TestQTable:
    def test_entries_exist_exactly_for_feasible_pairs(self):
        qt = QTable(4)
        assert [(s, a) for s, a, _ in qt.items()] == [
            (s, a) for s in range(1, 5) for a in range(1, s + 1)
        ]
        assert all(v == 0.0 for _, _, v in qt.items())

    def test_infeasible_access_rejected(self):
        qt = QTable(4)
        for s, a in [(0, 1), (5, 1), (3, 4), (2, 0)]:
            with pytest.raises(ValueError):
                qt.get(s, a)

    def test_values_must_stay_finite(self):
        qt = QTable(3)
        with pytest.raises(ValueError):
            qt.set(2, 1, float("inf"))

    def test_empty_action_set_maxes_to_zero(self):
        assert QTable(3).max_value(0) == 0.0


class TestSelectAction:
    def test_singleton_action_set(self):
        qt = QTable(5)
        assert select_action(qt, 1, LearnerParams(), rng()) == 1

    def test_unique_argmax_wins_when_exploiting(self):
        qt = QTable(5)
        qt.set(4, 3, 2.0)
        params = LearnerParams(epsilon=0.0)
        assert all(select_action(qt, 4, params, rng(k)) == 3 for k in range(30))

    def test_dormant_at_zero_balance(self):
        assert select_action(QTable(5), 0, LearnerParams(), rng()) is None

    def test_uniform_tie_break_over_identical_values(self):
        qt = QTable(4)
        params = LearnerParams(epsilon=0.0)
        g = rng(11)
        counts = np.zeros(5)
        n = 40_000
        for _ in range(n):
            counts[select_action(qt, 4, params, g)] += 1
        chi2 = float(((counts[1:] - n / 4) ** 2 / (n / 4)).sum())
        assert chi2 < 16.27  # chi2(3) at p = 0.999

    def test_low_and_high_tie_breaks(self):
        row = np.zeros(6)
        assert select_action_from_uniforms(row, 6, 0.0, 0.9, 0.5, "low") == (1, False)
        assert select_action_from_uniforms(row, 6, 0.0, 0.9, 0.5, "high") == (6, False)
        row[2] = 1.0  # unique argmax overrides any tie policy
        for tb in ("uniform", "low", "high"):
            assert select_action_from_uniforms(row, 6, 0.0, 0.9, 0.5, tb) == (3, False)

    def test_exploration_frequency_within_three_standard_errors(self):
        qt = QTable(4)
        qt.set(4, 2, 5.0)  # unique argmax so exploit picks are identifiable
        params = LearnerParams(epsilon=0.2)
        g = rng(23)
        n = 100_000
        explored = 0
        for _ in range(n):
            _, was_explore = select_action_from_uniforms(
                qt.row(4), 4, params.epsilon, g.random(), g.random()
            )
            explored += was_explore
        se = (0.2 * 0.8 / n) ** 0.5
        assert abs(explored / n - 0.2) < 3 * se

    def test_explore_branch_is_uniform_over_actions(self):
        qt = QTable(10)
        qt.set(10, 7, 9.0)
        g = rng(5)
        n = 100_000
        counts = np.zeros(11)
        for _ in range(n):
            a, was_explore = select_action_from_uniforms(
                qt.row(10), 10, 1.0, g.random(), g.random()
            )
            assert was_explore
            counts[a] += 1
        chi2 = float(((counts[1:] - n / 10) ** 2 / (n / 10)).sum())
        assert chi2 < CHI2_999[9]


class TestQUpdate:
    def test_basic_td_step(self):
        qt = QTable(5)
        q_update(qt, 5, 3, 3.0, 2, LearnerParams(alpha=0.1, gamma=0.9))
        assert qt.get(5, 3) == pytest.approx(0.3)

    def test_terminal_next_state_uses_empty_max(self):
        qt = QTable(5)
        qt.set(5, 5, 1.0)
        q_update(qt, 5, 5, 5.0, 0, LearnerParams(alpha=0.1, gamma=0.9))
        assert qt.get(5, 5) == pytest.approx(1.4)

    def test_zero_td_error_changes_nothing(self):
        qt = QTable(5)
        q_update(qt, 5, 2, 0.0, 5, LearnerParams(alpha=0.1, gamma=0.9))
        assert all(v == 0.0 for _, _, v in qt.items())

    def test_exactly_one_entry_changes(self):
        qt = QTable(6)
        qt.set(4, 2, 0.5)
        q_update(qt, 4, 2, 2.0, 3, LearnerParams())
        changed = [(s, a) for s, a, v in qt.items() if v != 0.0]
        assert changed == [(4, 2)]

    def test_infeasible_update_rejected(self):
        qt = QTable(5)
        with pytest.raises(ValueError):
            q_update(qt, 3, 4, 1.0, 2, LearnerParams())
        with pytest.raises(ValueError):
            q_update(qt, 3, 2, 1.0, 9, LearnerParams())


class TestBaselines:
    def test_random_policy_singleton(self):
        assert random_policy(1, rng()) == 1

    def test_random_policy_dormant(self):
        assert random_policy(0, rng()) is None

    def test_random_policy_uniform_chi_square(self):
        g = rng(31)
        n = 100_000
        counts = np.zeros(11)
        for _ in range(n):
            counts[random_policy(10, g)] += 1
        chi2 = float(((counts[1:] - n / 10) ** 2 / (n / 10)).sum())
        assert chi2 < CHI2_999[9]

    @pytest.mark.parametrize("s", [7, 1, 40])
    def test_greedy_offers_whole_balance(self, s):
        assert greedy_policy(s) == s

    def test_greedy_dormant(self):
        assert greedy_policy(0) is None

    def test_greedy_penalty_examples(self):
        assert greedy_liquidity_penalty(10, 4, 4) == pytest.approx(1.2)
        assert greedy_liquidity_penalty(4, 10, 4) == 0.0
        assert greedy_liquidity_penalty(5, 5, 5) == 0.0


class TestStrategy:
    def test_learner_partition(self):
        learners = {s for s in Strategy if s.is_learner}
        assert learners == {Strategy.DIFF, Strategy.LOCAL, Strategy.GLOBAL}

    def test_reward_mode_mapping(self):
        assert Strategy.DIFF.reward_mode is RewardMode.DIFFERENCE
        assert Strategy.LOCAL.reward_mode is RewardMode.LOCAL
        assert Strategy.GLOBAL.reward_mode is RewardMode.GLOBAL
        with pytest.raises(ValueError):
            Strategy.GREEDY.reward_mode

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            Strategy.parse("martingale")


class TestLearnerParams:
    @pytest.mark.parametrize(
        "kwargs", [{"alpha": 0.0}, {"alpha": 1.5}, {"gamma": 1.0}, {"epsilon": -0.1}]
    )
    def test_range_validation(self, kwargs):
        with pytest.raises(ValueError):
            LearnerParams(**kwargs)
