"""Compare the compiled and pure-Python episode kernels.

Runs the same configuration on both backends, checks the outputs are
bit-identical, and reports timings.

    python benchmarks/bench_backends.py [--n-agents N] [--episodes E]
"""

import argparse
import time

import numpy as np

from liqsim.config import ExperimentConfig
from liqsim.environment import run_episodes
from liqsim.kernel import available_backends
from liqsim.runner import build_engine


def bench(backend: str, n_agents: int, episodes: int, seed: int = 1):
    config = ExperimentConfig(
        n_agents=n_agents,
        episodes=episodes,
        master_seed=seed,
        backend=backend,
    ).validate()
    engine = build_engine(config)
    start = time.perf_counter()
    records = run_episodes(engine, config.episodes, config.master_seed)
    elapsed = time.perf_counter() - start
    return elapsed, records, engine.pop.qvalues


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-agents", type=int, default=1300)
    parser.add_argument("--episodes", type=int, default=1000)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {backends}")
    results = {}
    timings = {}
    for backend in backends:
        elapsed, records, qvalues = bench(backend, args.n_agents, args.episodes)
        rate = args.episodes / elapsed
        print(f"{backend:8s}: {elapsed:8.3f}s  ({rate:8.1f} episodes/s)")
        results[backend] = (records, qvalues)
        timings[backend] = elapsed

    if len(results) == 2:
        same_records = results["python"][0] == results["cython"][0]
        same_q = np.array_equal(results["python"][1], results["cython"][1])
        print(f"bit-identical records: {same_records}, Q-tables: {same_q}")
        if not (same_records and same_q):
            raise SystemExit("backend outputs diverged")
        print(f"speedup: {timings['python'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
