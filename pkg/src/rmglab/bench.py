"""Benchmark of the compiled kernels against the numpy fallback."""
import time

import numpy as np

from . import kernels
from .game import default_game, random_game
from .learner import LearnerConfig, robust_q_ftrl


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def run_benchmarks(repeat: int = 5):
    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        pass
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(16), size=20000)
    V = rng.uniform(0, 3, 16)
    game = random_game(3, 2, 6, (4, 3, 3), (0.2, 0.3, 0.4), seed=1)
    U = rng.random((game.S, 4, 512, game.n + 1))
    pol_cdf = np.full((game.n, game.S, 4), np.inf)
    for j, a in enumerate(game.actions):
        pol_cdf[j, :, :a] = kernels.inverse_cdf_table(np.full((game.S, a), 1.0 / a))
    ker_cdf = kernels.inverse_cdf_table(game.transitions[0])
    small = default_game(0)
    cases = {
        "tv_dual_batch 20000x16": lambda b: kernels.tv_dual_batch(P, V, 0.3, backend=b),
        "sample_cells S=6 A=4 N=512 n=3": lambda b: kernels.sample_cells(U, pol_cdf, np.array(game.actions), 0, ker_cdf, backend=b),
        "robust_q_ftrl default game K=256 N=32": lambda b: robust_q_ftrl(small, LearnerConfig(K=256, N=32), backend=b),
    }
    lines = [f"{'case':42s} " + " ".join(f"{b:>10s}" for b in backends) + ("    speedup" if len(backends) == 2 else "")]
    for name, fn in cases.items():
        times = [_best_of(lambda: fn(b), repeat) for b in backends]
        line = f"{name:42s} " + " ".join(f"{t * 1e3:8.2f}ms" for t in times)
        if len(times) == 2:
            line += f"  {times[1] / times[0]:8.1f}x"
        lines.append(line)
    return lines


if __name__ == "__main__":
    for line in run_benchmarks():
        print(line)
