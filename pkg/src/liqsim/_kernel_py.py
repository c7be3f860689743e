"""Pure-Python episode kernel.

Reference implementation of the two per-agent hot loops: simultaneous offer
selection and the post-clearing Q updates. The compiled kernel in
``_kernel_cy`` mirrors this arithmetic operation for operation; both consume
pre-drawn per-agent uniforms, so their outputs are bit-identical.

All slot arrays are laid out in pair order: slot 2k and 2k+1 are the two
members of pair k. Chunked calls over [start_pair, end_pair) touch disjoint
slots and disjoint agents, which is what makes threaded execution
observationally equal to sequential.
"""

from __future__ import annotations

import numpy as np

from .agents import select_action_from_uniforms, uniform_index

PCODE_DIFF = 0
PCODE_LOCAL = 1
PCODE_GLOBAL = 2
PCODE_RANDOM = 3
PCODE_GREEDY = 4

N_LEARNER_CODES = 3  # codes < 3 learn

TIE_NAMES = {0: "uniform", 1: "low", 2: "high"}


def compute_offers(
    policy_codes: np.ndarray,
    balances: np.ndarray,
    pair_agents: np.ndarray,
    qvalues: np.ndarray,
    u_explore: np.ndarray,
    u_action: np.ndarray,
    epsilon: float,
    tie_code: int,
    offers_out: np.ndarray,
    explored_out: np.ndarray,
    start_pair: int,
    end_pair: int,
) -> None:
    tie_break = TIE_NAMES[tie_code]
    for slot in range(2 * start_pair, 2 * end_pair):
        agent = int(pair_agents[slot])
        s = int(balances[agent])
        code = int(policy_codes[agent])
        explored = False
        if code == PCODE_GREEDY:
            action = s
        elif code == PCODE_RANDOM:
            action = 1 + uniform_index(float(u_action[agent]), s)
        else:
            action, explored = select_action_from_uniforms(
                qvalues[agent, s],
                s,
                epsilon,
                float(u_explore[agent]),
                float(u_action[agent]),
                tie_break,
            )
        offers_out[agent] = action
        explored_out[agent] = 1 if explored else 0


def apply_q_updates(
    policy_codes: np.ndarray,
    qvalues: np.ndarray,
    pair_agents: np.ndarray,
    states: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    next_states: np.ndarray,
    alpha: float,
    gamma: float,
    start_pair: int,
    end_pair: int,
) -> None:
    for slot in range(2 * start_pair, 2 * end_pair):
        agent = int(pair_agents[slot])
        if int(policy_codes[agent]) >= N_LEARNER_CODES:
            continue
        s = int(states[slot])
        a = int(actions[slot])
        r = float(rewards[slot])
        s2 = int(next_states[slot])
        # max over the empty action set at s2 = 0 is defined as 0
        best = float(qvalues[agent, s2, :s2].max()) if s2 > 0 else 0.0
        cur = float(qvalues[agent, s, a - 1])
        qvalues[agent, s, a - 1] = cur + alpha * (r + gamma * best - cur)
