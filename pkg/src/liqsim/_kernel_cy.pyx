# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled episode kernel; mirrors ``_kernel_py`` operation for operation.

Both kernels derive actions and tie-breaks from the same pre-drawn uniforms
with identical double arithmetic, so outputs are bit-identical across
backends and across chunked (threaded) execution.
"""

from libc.stdint cimport int64_t, int8_t, uint8_t


cdef inline Py_ssize_t uniform_index(double u, Py_ssize_t n) nogil:
    cdef Py_ssize_t k = <Py_ssize_t>(u * n)
    if k >= n:
        k = n - 1
    return k


def compute_offers(
    const int8_t[::1] policy_codes,
    const int64_t[::1] balances,
    const int64_t[::1] pair_agents,
    double[:, :, ::1] qvalues,
    const double[::1] u_explore,
    const double[::1] u_action,
    double epsilon,
    int tie_code,
    int64_t[::1] offers_out,
    uint8_t[::1] explored_out,
    Py_ssize_t start_pair,
    Py_ssize_t end_pair,
):
    cdef Py_ssize_t slot, agent, s, a, n_ties, pick, seen, action
    cdef int code
    cdef double best, v, ue, ua
    cdef uint8_t explored
    with nogil:
        for slot in range(2 * start_pair, 2 * end_pair):
            agent = <Py_ssize_t>pair_agents[slot]
            s = <Py_ssize_t>balances[agent]
            code = policy_codes[agent]
            explored = 0
            if code == 4:  # greedy: offer the whole balance
                action = s
            elif code == 3:  # random: uniform over {1..s}
                action = 1 + uniform_index(u_action[agent], s)
            else:  # learners: epsilon-greedy
                ue = u_explore[agent]
                ua = u_action[agent]
                if ue < epsilon:
                    action = 1 + uniform_index(ua, s)
                    explored = 1
                elif tie_code == 2:  # ties toward the highest offer
                    best = qvalues[agent, s, s - 1]
                    action = s
                    for a in range(s - 1, 0, -1):
                        v = qvalues[agent, s, a - 1]
                        if v > best:
                            best = v
                            action = a
                elif tie_code == 1:  # ties toward the lowest offer
                    best = qvalues[agent, s, 0]
                    action = 1
                    for a in range(2, s + 1):
                        v = qvalues[agent, s, a - 1]
                        if v > best:
                            best = v
                            action = a
                else:  # uniform tie-break
                    best = qvalues[agent, s, 0]
                    n_ties = 1
                    for a in range(2, s + 1):
                        v = qvalues[agent, s, a - 1]
                        if v > best:
                            best = v
                            n_ties = 1
                        elif v == best:
                            n_ties += 1
                    pick = uniform_index(ua, n_ties)
                    seen = 0
                    action = 1
                    for a in range(1, s + 1):
                        if qvalues[agent, s, a - 1] == best:
                            if seen == pick:
                                action = a
                                break
                            seen += 1
            offers_out[agent] = action
            explored_out[agent] = explored


def apply_q_updates(
    const int8_t[::1] policy_codes,
    double[:, :, ::1] qvalues,
    const int64_t[::1] pair_agents,
    const int64_t[::1] states,
    const int64_t[::1] actions,
    const double[::1] rewards,
    const int64_t[::1] next_states,
    double alpha,
    double gamma,
    Py_ssize_t start_pair,
    Py_ssize_t end_pair,
):
    cdef Py_ssize_t slot, agent, s, a, s2, a2
    cdef double best, v, r, cur
    with nogil:
        for slot in range(2 * start_pair, 2 * end_pair):
            agent = <Py_ssize_t>pair_agents[slot]
            if policy_codes[agent] >= 3:  # baselines do not learn
                continue
            s = <Py_ssize_t>states[slot]
            a = <Py_ssize_t>actions[slot]
            r = rewards[slot]
            s2 = <Py_ssize_t>next_states[slot]
            # max over the empty action set at s2 = 0 is defined as 0
            best = 0.0
            if s2 > 0:
                best = qvalues[agent, s2, 0]
                for a2 in range(2, s2 + 1):
                    v = qvalues[agent, s2, a2 - 1]
                    if v > best:
                        best = v
            cur = qvalues[agent, s, a - 1]
            qvalues[agent, s, a - 1] = cur + alpha * (r + gamma * best - cur)
