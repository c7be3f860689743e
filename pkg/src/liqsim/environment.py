"""Population-level episode loop.

Each episode: balances reset (uniform 1..cap per firm size), eligible agents
are paired by a uniform shuffle, paired agents commit offers simultaneously,
pairs clear under the active rule, balances drop by the cleared quantity,
and learners receive their mode's reward plus one TD update.

Determinism contract: every run is a pure function of (config, master seed).
Randomness is drawn per episode from a counter-based Philox stream keyed by
(master_seed, episode_index), in a fixed order -- balances, pairing
permutation, explore uniforms, action uniforms -- with the uniform arrays
indexed by agent id. Pair processing is chunked across workers over
disjoint slots, so threaded execution is observationally identical to
sequential.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py
from .agents import TIE_CODES, LearnerParams, Strategy
from .game import ClearingRule
from .kernel import resolve_backend

POLICY_CODES = {
    Strategy.DIFF: _kernel_py.PCODE_DIFF,
    Strategy.LOCAL: _kernel_py.PCODE_LOCAL,
    Strategy.GLOBAL: _kernel_py.PCODE_GLOBAL,
    Strategy.RANDOM: _kernel_py.PCODE_RANDOM,
    Strategy.GREEDY: _kernel_py.PCODE_GREEDY,
}

NEXT_STATE_MODES = ("terminal", "residual", "fresh_draw")


class InvariantViolation(RuntimeError):
    """An internal run invariant failed; the run aborts with diagnostics."""


@dataclass
class EpisodeRecord:
    episode_index: int
    total_cleared_g: int
    initial_balance_sum: int
    hit_count: int
    paired_count: int
    per_cohort_liquidity: dict[str, float]
    per_cohort_trade_volume: dict[str, int]


@dataclass
class Population:
    """Agent state for one run; Q state persists across episode resets."""

    caps: np.ndarray
    policy_codes: np.ndarray
    strategies: list[Strategy]
    balances: np.ndarray
    prev_partner: np.ndarray
    qvalues: np.ndarray | None
    n_large: int

    @property
    def n_agents(self) -> int:
        return len(self.caps)

    @property
    def max_cap(self) -> int:
        return int(self.caps.max())

    def cohorts(self) -> list[Strategy]:
        seen: list[Strategy] = []
        for s in self.strategies:
            if s not in seen:
                seen.append(s)
        return seen


def build_population(
    n_agents: int,
    fraction_large: float,
    cap_small: int,
    cap_large: int,
    strategies: Strategy | list[Strategy],
) -> Population:
    """Construct the agent population.

    The first round(n * fraction_large) agents are large firms; the split is
    fixed for the run. A single Strategy makes a homogeneous cohort; a list
    gives per-agent assignment (mixed cohorts, not used by the paper-style
    comparisons).
    """
    if n_agents < 1:
        raise ValueError("n_agents must be positive")
    n_large = int(round(n_agents * fraction_large))
    caps = np.full(n_agents, cap_small, dtype=np.int64)
    caps[:n_large] = cap_large
    if isinstance(strategies, Strategy):
        strategy_list = [strategies] * n_agents
    else:
        if len(strategies) != n_agents:
            raise ValueError("per-agent strategy list must have n_agents entries")
        strategy_list = list(strategies)
    policy_codes = np.array([POLICY_CODES[s] for s in strategy_list], dtype=np.int8)
    qvalues = None
    if any(s.is_learner for s in strategy_list):
        max_cap = int(caps.max())
        qvalues = np.zeros((n_agents, max_cap + 1, max_cap), dtype=np.float64)
    return Population(
        caps=caps,
        policy_codes=policy_codes,
        strategies=strategy_list,
        balances=np.zeros(n_agents, dtype=np.int64),
        prev_partner=np.full(n_agents, -1, dtype=np.int64),
        qvalues=qvalues,
        n_large=n_large,
    )


def reset_episode(pop: Population, rng: np.random.Generator) -> Population:
    """Draw fresh balances uniformly from {1..cap}; learning state persists."""
    pop.balances[:] = rng.integers(1, pop.caps + 1, dtype=np.int64)
    return pop


def pair_agents(eligible_ids: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform random perfect matching via shuffle-then-adjacent-pairing.

    Returns a flat int64 array [i0, j0, i1, j1, ...]; with an odd count the
    last shuffled agent is left out entirely.
    """
    perm = rng.permutation(np.asarray(eligible_ids, dtype=np.int64))
    n_pairs = len(perm) // 2
    return perm[: 2 * n_pairs]


def clear_offers_vector(
    rule: ClearingRule, own: np.ndarray, partner: np.ndarray
) -> np.ndarray:
    """Vectorized clearing of offer pairs; same semantics as game.clear."""
    if rule is ClearingRule.EXACT:
        return np.where((own == partner) & (own > 0), own, 0)
    return np.where((own > 0) & (partner > 0), np.minimum(own, partner), 0)


@dataclass
class Engine:
    """Owns one run's population and executes episodes."""

    pop: Population
    rule: ClearingRule
    params: LearnerParams = field(default_factory=LearnerParams)
    repeat_penalty: float = 0.1
    greedy_penalty_rate: float = 0.2
    next_state_mode: str = "residual"
    tie_break: str = "auto"
    carryover: bool = False
    n_workers: int = 1
    backend: str = "auto"

    def __post_init__(self) -> None:
        if self.next_state_mode not in NEXT_STATE_MODES:
            raise ValueError(
                f"next_state_mode must be one of {NEXT_STATE_MODES}, "
                f"got {self.next_state_mode!r}"
            )
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")
        if self.tie_break == "auto":
            # focal exploit tie-breaks per regime: exact matching coordinates
            # on the always-feasible minimal offer, min-fill on full clearance
            self.tie_break = "low" if self.rule is ClearingRule.EXACT else "high"
        if self.tie_break not in TIE_CODES:
            raise ValueError(f"tie_break must be auto|uniform|low|high, got {self.tie_break!r}")
        self._tie_code = TIE_CODES[self.tie_break]
        self._kernel, self.backend_name = resolve_backend(self.backend)
        # fresh_draw mode defers each episode's updates until the next
        # episode's balances are known
        self._pending: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None

    # -- kernel dispatch -------------------------------------------------

    def _chunks(self, n_pairs: int) -> list[tuple[int, int]]:
        w = min(self.n_workers, max(1, n_pairs))
        bounds = np.linspace(0, n_pairs, w + 1, dtype=int)
        return [(int(bounds[k]), int(bounds[k + 1])) for k in range(w)]

    def _run_chunked(self, fn, *args, n_pairs: int) -> None:
        if n_pairs == 0:
            return
        chunks = self._chunks(n_pairs)
        if len(chunks) == 1:
            fn(*args, 0, n_pairs)
            return
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [pool.submit(fn, *args, lo, hi) for lo, hi in chunks]
            for f in futures:
                f.result()

    def _apply_updates(
        self,
        pairs: np.ndarray,
        states: np.ndarray,
        actions: np.ndarray,
        rewards: np.ndarray,
        next_states: np.ndarray,
    ) -> None:
        self._run_chunked(
            self._kernel.apply_q_updates,
            self.pop.policy_codes,
            self.pop.qvalues,
            pairs,
            states,
            actions,
            rewards,
            next_states,
            self.params.alpha,
            self.params.gamma,
            n_pairs=len(pairs) // 2,
        )

    # -- episode ----------------------------------------------------------

    def run_episode(
        self, episode_index: int, rng: np.random.Generator
    ) -> EpisodeRecord:
        pop = self.pop
        n = pop.n_agents

        if not self.carryover or episode_index == 0:
            reset_episode(pop, rng)
        initial_balance_sum = int(pop.balances.sum())

        eligible = np.flatnonzero(pop.balances >= 1)
        pairs = pair_agents(eligible, rng)
        u_explore = rng.random(n)
        u_action = rng.random(n)
        n_pairs = len(pairs) // 2

        # deferred fresh-draw updates bootstrap on this episode's balances
        if self._pending is not None:
            p_pairs, p_states, p_actions, p_rewards = self._pending
            self._apply_updates(
                p_pairs, p_states, p_actions, p_rewards, pop.balances[p_pairs]
            )
            self._pending = None

        offers = np.zeros(n, dtype=np.int64)
        explored = np.zeros(n, dtype=np.uint8)
        qvalues = pop.qvalues
        if qvalues is None:
            # baselines-only runs still call the kernel with an empty table
            qvalues = np.zeros((n, 1, 1), dtype=np.float64)
        self._run_chunked(
            self._kernel.compute_offers,
            pop.policy_codes,
            pop.balances,
            pairs,
            qvalues,
            u_explore,
            u_action,
            self.params.epsilon,
            self._tie_code,
            offers,
            explored,
            n_pairs=n_pairs,
        )

        states = pop.balances[pairs]
        partner_ids = pairs.reshape(-1, 2)[:, ::-1].reshape(-1)
        own_offers = offers[pairs]
        partner_offers = offers[partner_ids]

        # offers committed before any clearing: q is a pure function of them
        q_pair = clear_offers_vector(
            self.rule, own_offers[0::2], own_offers[1::2]
        ).astype(np.int64)
        q_slot = np.repeat(q_pair, 2)
        total_g = int(q_pair.sum())

        if pop.qvalues is not None:
            rewards = self._compute_rewards(
                pairs, own_offers, partner_offers, q_slot, total_g
            )
            if self.next_state_mode == "terminal":
                # one-shot stage game: each trade ends the agent's episode
                self._apply_updates(
                    pairs, states, own_offers, rewards, np.zeros_like(states)
                )
            elif self.next_state_mode == "residual":
                self._apply_updates(pairs, states, own_offers, rewards, states - q_slot)
            else:
                self._pending = (pairs, states, own_offers, rewards)

        pop.balances[pairs] -= q_slot
        pop.prev_partner[:] = -1
        pop.prev_partner[pairs] = partner_ids

        if int(pop.balances.min()) < 0:
            raise InvariantViolation(
                f"episode {episode_index}: negative balance after clearing"
            )
        if total_g > initial_balance_sum:
            raise InvariantViolation(
                f"episode {episode_index}: cleared {total_g} exceeds "
                f"initial balance sum {initial_balance_sum}"
            )

        hit_count = 2 * int((q_pair > 0).sum())
        per_cohort_liquidity: dict[str, float] = {}
        per_cohort_volume: dict[str, int] = {}
        slot_codes = pop.policy_codes[pairs]
        excess = np.maximum(own_offers - partner_offers, 0)
        for cohort in pop.cohorts():
            mask = slot_codes == POLICY_CODES[cohort]
            vol = int(q_slot[mask].sum())
            per_cohort_volume[cohort.value] = vol
            penalty_units = 0
            if cohort is Strategy.GREEDY and self.rule is ClearingRule.MINFILL:
                penalty_units = int(excess[mask].sum())
            # integer accumulators keep the float result independent of
            # pair-processing order
            per_cohort_liquidity[cohort.value] = (
                float(vol) - self.greedy_penalty_rate * float(penalty_units)
            )

        return EpisodeRecord(
            episode_index=episode_index,
            total_cleared_g=total_g,
            initial_balance_sum=initial_balance_sum,
            hit_count=hit_count,
            paired_count=2 * n_pairs,
            per_cohort_liquidity=per_cohort_liquidity,
            per_cohort_trade_volume=per_cohort_volume,
        )

    def _compute_rewards(
        self,
        pairs: np.ndarray,
        own_offers: np.ndarray,
        partner_offers: np.ndarray,
        q_slot: np.ndarray,
        total_g: int,
    ) -> np.ndarray:
        """Vectorized per-slot reward dispatch by cohort."""
        slot_codes = self.pop.policy_codes[pairs]
        rewards = np.zeros(len(pairs), dtype=np.float64)

        diff_mask = slot_codes == _kernel_py.PCODE_DIFF
        if diff_mask.any():
            # marginal contribution: pair quantity minus the zero-offer
            # counterfactual (which clears nothing under either rule)
            counterfactual = clear_offers_vector(
                self.rule, np.zeros_like(own_offers), partner_offers
            )
            rewards[diff_mask] = (q_slot - counterfactual)[diff_mask].astype(np.float64)

        local_mask = slot_codes == _kernel_py.PCODE_LOCAL
        if local_mask.any():
            partner_ids = pairs.reshape(-1, 2)[:, ::-1].reshape(-1)
            repeated = self.pop.prev_partner[pairs] == partner_ids
            rewards[local_mask] = (
                2.0 * q_slot
                - own_offers
                - self.repeat_penalty * repeated
            )[local_mask]

        global_mask = slot_codes == _kernel_py.PCODE_GLOBAL
        if global_mask.any():
            rewards[global_mask] = float(total_g)
        return rewards

    def flush_pending(self) -> None:
        """End of run in fresh_draw mode: close pending updates as terminal."""
        if self._pending is not None:
            p_pairs, p_states, p_actions, p_rewards = self._pending
            self._apply_updates(
                p_pairs,
                p_states,
                p_actions,
                p_rewards,
                np.zeros_like(p_states),
            )
            self._pending = None


def episode_rng(master_seed: int, episode_index: int) -> np.random.Generator:
    """Per-episode stream: Philox keyed by (master seed, episode index)."""
    key = np.array([master_seed, episode_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def run_episodes(engine: Engine, episodes: int, master_seed: int) -> list[EpisodeRecord]:
    records = [
        engine.run_episode(ep, episode_rng(master_seed, ep)) for ep in range(episodes)
    ]
    engine.flush_pending()
    return records
