"""Exact robust evaluation of policies and policy mixtures, and the robust CCE gap.

Value tables have shape ``(H + 1, S)`` with the terminal row ``H`` equal to 0.

Two notions of mixture value are provided. The *recursive* one pushes the
mixture expectation inside the worst-case expectation at every step; the
*literal* one averages per-policy robust values over policies drawn from the
mixture (exactly by enumeration when ``K**H <= ENUMERATION_LIMIT``, otherwise
by Monte Carlo). They coincide when all radii are zero.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidConfig
from .game import (
    PolicyMixture,
    ProductPolicy,
    RobustMarkovGame,
    marginal_kernels_batch,
    marginal_rewards_batch,
)
from .sampler import stream

ENUMERATION_LIMIT = 4096
MIN_CI_SAMPLES = 30
Z_95 = 1.959963984540054


def _policy_marginals(game, policy: ProductPolicy, i):
    """Per-step marginal kernels ``(H, S, A_i, S)`` and rewards ``(H, S, A_i)``."""
    kern = np.stack([marginal_kernels_batch(game, h, i, [r[h][None] for r in policy.rows])[0] for h in range(game.H)])
    rew = np.stack([marginal_rewards_batch(game, h, i, [r[h][None] for r in policy.rows])[0] for h in range(game.H)])
    return kern, rew


def robust_policy_value(game: RobustMarkovGame, policy: ProductPolicy, i: int) -> np.ndarray:
    """Robust value of agent i under the product policy, shape ``(H + 1, S)``."""
    kern, rew = _policy_marginals(game, policy, i)
    V = np.zeros((game.H + 1, game.S))
    for h in reversed(range(game.H)):
        q = rew[h] + kernels.tv_dual_batch(kern[h], V[h + 1], game.radii[i])
        V[h] = (policy.rows[i][h] * q).sum(axis=-1)
    return V


def robust_best_response(game: RobustMarkovGame, policy: ProductPolicy, i: int):
    """Deterministic robust best response of agent i to the others in ``policy``.

    Agent i's own rows in ``policy`` are ignored. Returns ``(rows, V)`` where
    ``rows`` has shape ``(H, S, A_i)`` (one-hot, lowest index on ties).
    """
    kern, rew = _policy_marginals(game, policy, i)
    A_i = game.actions[i]
    V = np.zeros((game.H + 1, game.S))
    rows = np.zeros((game.H, game.S, A_i))
    for h in reversed(range(game.H)):
        q = rew[h] + kernels.tv_dual_batch(kern[h], V[h + 1], game.radii[i])
        best = np.argmax(q, axis=-1)
        V[h] = q[np.arange(game.S), best]
        rows[h, np.arange(game.S), best] = 1.0
    return rows, V


def mixture_marginals(game: RobustMarkovGame, mixture: PolicyMixture, i: int):
    """Marginal kernels ``(H, K, S, A_i, S)`` and rewards ``(H, K, S, A_i)`` of every component."""
    kern = np.stack([marginal_kernels_batch(game, h, i, [r[h] for r in mixture.rows]) for h in range(game.H)])
    rew = np.stack([marginal_rewards_batch(game, h, i, [r[h] for r in mixture.rows]) for h in range(game.H)])
    return kern, rew


def mixture_value_recursive(game: RobustMarkovGame, mixture: PolicyMixture, i: int, marginals=None) -> np.ndarray:
    kern, rew = marginals if marginals is not None else mixture_marginals(game, mixture, i)
    W = np.zeros((game.H + 1, game.S))
    for h in reversed(range(game.H)):
        q = rew[h] + kernels.tv_dual_batch(kern[h], W[h + 1], game.radii[i])  # (K, S, A_i)
        played = (mixture.rows[i][h] * q).sum(axis=-1)
        W[h] = mixture.weights[h] @ played
    return W


def mixture_best_response_recursive(game: RobustMarkovGame, mixture: PolicyMixture, i: int, marginals=None) -> np.ndarray:
    kern, rew = marginals if marginals is not None else mixture_marginals(game, mixture, i)
    B = np.zeros((game.H + 1, game.S))
    for h in reversed(range(game.H)):
        q = rew[h] + kernels.tv_dual_batch(kern[h], B[h + 1], game.radii[i])
        B[h] = np.tensordot(mixture.weights[h], q, axes=1).max(axis=-1)
    return B


# --- literal mixture values ---------------------------------------------------


def component_sequences(mixture: PolicyMixture, M: int, seed: int, force_mc: bool = False):
    """Policy-index sequences ``(count, H)`` with their probabilities.

    All ``K**H`` sequences with exact probabilities when that is at most
    ``ENUMERATION_LIMIT`` (and ``force_mc`` is off); otherwise ``M`` independent
    draws with weight ``1/M``. Returns ``(sequences, probabilities, exact)``.
    """
    H, K = mixture.H, mixture.K
    if K**H <= ENUMERATION_LIMIT and not force_mc:
        grids = np.meshgrid(*[np.arange(K)] * H, indexing="ij")
        seqs = np.stack([g.ravel() for g in grids], axis=1)
        probs = np.prod(mixture.weights[np.arange(H), seqs], axis=1)
        return seqs, probs, True
    if M < 1:
        raise InvalidConfig("M must be at least 1")
    u = stream(seed, 0xC0FFEE).random((M, H))
    cdf = kernels.inverse_cdf_table(mixture.weights)
    seqs = np.stack([np.searchsorted(cdf[h], u[:, h], side="right") for h in range(H)], axis=1)
    return seqs, np.full(M, 1.0 / M), False


def sequence_values(game: RobustMarkovGame, mixture: PolicyMixture, i: int, seqs, marginals=None):
    """Robust value and robust best-response value at step 0 for each sequence.

    Returns two arrays of shape ``(len(seqs), S)``.
    """
    kern, rew = marginals if marginals is not None else mixture_marginals(game, mixture, i)
    sigma = game.radii[i]
    m = len(seqs)
    V = np.zeros((m, game.S))
    B = np.zeros((m, game.S))
    for h in reversed(range(game.H)):
        k = seqs[:, h]
        kh, rh = kern[h, k], rew[h, k]  # (m, S, A, S), (m, S, A)
        qv = rh + kernels.tv_dual_rows(kh, V[:, None, None, :], sigma)
        qb = rh + kernels.tv_dual_rows(kh, B[:, None, None, :], sigma)
        V = (mixture.rows[i][h, k] * qv).sum(axis=-1)
        B = qb.max(axis=-1)
    return V, B


def _weighted_stats(x, probs, exact):
    mean = probs @ x
    if exact or len(x) < 2:
        return mean, np.zeros_like(mean)
    return mean, x.std(axis=0, ddof=1) / np.sqrt(len(x))


def mixture_value_mc(game, mixture, i, M, seed=0, force_mc=False):
    """Literal mixture value at step 0: ``(estimate, standard_error)`` per state."""
    seqs, probs, exact = component_sequences(mixture, M, seed, force_mc)
    V, _ = sequence_values(game, mixture, i, seqs)
    return _weighted_stats(V, probs, exact)


def mixture_best_response_mc(game, mixture, i, M, seed=0, force_mc=False):
    """Literal mixture of per-policy best-response values at step 0."""
    seqs, probs, exact = component_sequences(mixture, M, seed, force_mc)
    _, B = sequence_values(game, mixture, i, seqs)
    return _weighted_stats(B, probs, exact)


# --- gap --------------------------------------------------------------------


@dataclass
class GapReport:
    method: str
    best_response: np.ndarray  # (n, S)
    value: np.ndarray  # (n, S)
    std_error: np.ndarray | None = None  # (n, S), standard error of the difference
    samples: int = 0
    exact: bool = True
    run_id: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def diff(self) -> np.ndarray:
        return self.best_response - self.value

    @property
    def per_agent_gap(self) -> np.ndarray:
        return self.diff.max(axis=1)

    @property
    def gap(self) -> float:
        return float(self.diff.max())

    @property
    def overall_std_error(self) -> float:
        """Standard error at the (agent, state) attaining the gap."""
        if self.std_error is None:
            return 0.0
        idx = np.unravel_index(int(np.argmax(self.diff)), self.diff.shape)
        return float(self.std_error[idx])

    @property
    def half_width(self) -> float:
        return Z_95 * self.overall_std_error

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "gap": self.gap,
            "per_agent_gap": self.per_agent_gap.tolist(),
            "best_response": self.best_response.tolist(),
            "value": self.value.tolist(),
        }
        if self.method == "mc":
            out.update(
                samples=self.samples,
                exact=self.exact,
                std_error=self.std_error.tolist(),
                half_width=self.half_width,
            )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def csv_header(self):
        n = len(self.per_agent_gap)
        return ["run_id", "method"] + [f"gap_agent{i}" for i in range(n)] + ["gap", "std_error"]

    def csv_row(self):
        return [self.run_id, self.method] + [repr(float(g)) for g in self.per_agent_gap] + [
            repr(self.gap),
            repr(self.overall_std_error),
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.csv_header())
        w.writerow(self.csv_row())
        return buf.getvalue()


def cce_gap(
    game: RobustMarkovGame,
    mixture: PolicyMixture,
    method: str = "recursive",
    M: int = 1000,
    seed: int = 0,
    force_mc: bool = False,
) -> GapReport:
    """Robust CCE gap ``max_{i,s} BR_i(s) - V_i(s)`` at step 0.

    ``method="recursive"`` uses the recursive mixture values; ``"mc"`` uses the
    literal per-policy expectation (enumerated when small, else M draws; M must
    be at least 30 for the normal-approximation confidence interval).
    ``force_mc`` draws M sequences even when enumeration is possible.
    """
    n, S = game.n, game.S
    br = np.zeros((n, S))
    val = np.zeros((n, S))
    if method == "recursive":
        for i in range(n):
            marg = mixture_marginals(game, mixture, i)
            br[i] = mixture_best_response_recursive(game, mixture, i, marg)[0]
            val[i] = mixture_value_recursive(game, mixture, i, marg)[0]
        return GapReport("recursive", br, val)
    if method != "mc":
        raise InvalidConfig(f"unknown gap method {method!r}")
    if M < MIN_CI_SAMPLES:
        raise InvalidConfig(f"Monte-Carlo evaluation needs M >= {MIN_CI_SAMPLES}, got {M}")
    seqs, probs, exact = component_sequences(mixture, M, seed, force_mc)
    se = np.zeros((n, S))
    for i in range(n):
        V, B = sequence_values(game, mixture, i, seqs)
        val[i] = probs @ V
        br[i] = probs @ B
        _, se[i] = _weighted_stats(B - V, probs, exact)
    return GapReport("mc", br, val, std_error=se, samples=len(seqs), exact=exact)
