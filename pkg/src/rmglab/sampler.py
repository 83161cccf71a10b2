"""Seeded generative model and N-sample estimation of per-agent empirical models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidConfig
from .game import RobustMarkovGame


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based Philox stream addressed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """Empirical rewards ``r_hat (S, A_i)`` and kernels ``P_hat (S, A_i, S)`` from N samples per cell."""

    r_hat: np.ndarray
    P_hat: np.ndarray
    N: int
    next_counts: np.ndarray
    joint_counts: np.ndarray

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "next_counts": self.next_counts.tolist(),
            "joint_counts": self.joint_counts.tolist(),
            "r_hat": self.r_hat.tolist(),
        }


class GenerativeModel:
    """Simulator over the nominal kernel with keyed, reproducible randomness.

    Sampling for iteration ``k`` of agent ``i`` at step ``h`` draws a block of
    uniforms of shape ``(S, A_i, N, n+1)`` from the Philox stream keyed by
    ``(seed, h, k, i)``; cell ``(s, a_i, t)`` always reads the same counter
    positions, so results do not depend on evaluation order.
    """

    def __init__(self, game: RobustMarkovGame, seed: int, backend: str | None = None):
        self.game = game
        self.seed = int(seed)
        self.backend = backend
        self.kernel_cdf = kernels.inverse_cdf_table(game.transitions)
        self.queries = 0

    def sample_next_state(self, h: int, s: int, joint_a: int, rng: np.random.Generator) -> int:
        """Inverse-CDF draw of ``s' ~ P0_h(. | s, a)``."""
        u = rng.random()
        self.queries += 1
        return int(np.searchsorted(self.kernel_cdf[h, s, joint_a], u, side="right"))

    def draw_uniforms(self, h: int, k: int, i: int, N: int) -> np.ndarray:
        g = self.game
        return stream(self.seed, h, k, i).random((g.S, g.actions[i], N, g.n + 1))


def _policy_cdf(game: RobustMarkovGame, step_rows) -> np.ndarray:
    width = max(game.actions)
    table = np.full((game.n, game.S, width), np.inf)
    for j, rows in enumerate(step_rows):
        rows = np.asarray(rows, dtype=float)
        if rows.shape != (game.S, game.actions[j]):
            raise DimensionMismatch(f"policy rows of agent {j} have shape {rows.shape}")
        table[j, :, : game.actions[j]] = kernels.inverse_cdf_table(rows)
    return table


def n_sample_estimation(
    model: GenerativeModel, step_rows, i: int, h: int, N: int, k: int = 0
) -> EmpiricalModel:
    """Empirical model for agent i at step h under the step policy ``step_rows``.

    For every ``(s, a_i)`` draws N joint actions with agent i pinned to ``a_i``
    and the others sampled from their rows, queries one next state per joint
    action, and averages. ``k`` selects the random stream (iteration index).
    """
    game = model.game
    if N < 1:
        raise InvalidConfig("N must be at least 1")
    if not (0 <= i < game.n and 0 <= h < game.H):
        raise DimensionMismatch(f"agent {i} / step {h} out of range")
    U = model.draw_uniforms(h, k, i, N)
    pol_cdf = _policy_cdf(game, step_rows)
    next_counts, joint_counts = kernels.sample_cells(
        U, pol_cdf, np.asarray(game.actions), i, model.kernel_cdf[h], backend=model.backend
    )
    model.queries += N * game.S * game.actions[i]
    P_hat = next_counts / N
    r_hat = (joint_counts * game.rewards[i, h][:, None, :]).sum(axis=-1) / N
    return EmpiricalModel(
        r_hat=np.clip(r_hat, 0.0, 1.0),
        P_hat=P_hat,
        N=int(N),
        next_counts=next_counts,
        joint_counts=joint_counts,
    )
