"""Robust-Q-FTRL: backward-in-time online learning of a robust CCE.

For each step ``h = H-1, ..., 0`` the agents run K rounds of exponential
weights against robust Q estimates built from N-sample empirical models,
then the step value is set to an optimistic (bonus-inflated, clamped)
average of the per-round robust Q values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidConfig, ResourceLimitExceeded
from .game import PolicyMixture, RobustMarkovGame
from .sampler import EmpiricalModel, GenerativeModel, n_sample_estimation

DEFAULT_SAMPLE_BUDGET = 10**9


@dataclass(frozen=True, eq=False)
class Schedule:
    """Learning-rate schedule for K rounds (arrays are 0-based in the round).

    ``alpha[k]`` is the Q-averaging rate of round k, ``weights[k]`` the final
    mixture weight of round k, and ``eta[k]`` the exponential-weights rate used
    to form the policy of round k+1 from the Q estimate after round k.
    """

    K: int
    H: int
    c_alpha: float
    alpha: np.ndarray
    weights: np.ndarray
    eta: np.ndarray

    @property
    def log_K(self) -> float:
        return math.log(self.K)

    def partial_weights(self, k: int) -> np.ndarray:
        """``alpha_i^k`` for ``i = 1..k`` (1-based k), i.e. weights after k rounds."""
        a = self.alpha[:k]
        tail = np.append(np.cumprod((1.0 - a[1:])[::-1])[::-1], 1.0)
        return a * tail


def build_schedule(K: int, H: int, c_alpha: float = 24.0) -> Schedule:
    if K < 1 or H < 1:
        raise InvalidConfig(f"need K >= 1 and H >= 1, got K={K}, H={H}")
    if c_alpha < 24:
        raise InvalidConfig(f"c_alpha must be at least 24, got {c_alpha}")
    log_K = math.log(K)
    k = np.arange(1, K + 1, dtype=float)
    if K == 1:
        alpha = np.ones(1)
    else:
        alpha = c_alpha * log_K / (k - 1.0 + c_alpha * log_K)
    # weights[k] = alpha_k * prod_{j > k} (1 - alpha_j)
    survive = np.append(np.cumprod((1.0 - alpha[1:])[::-1])[::-1], 1.0)
    weights = alpha * survive
    eta = np.sqrt(log_K / (alpha * H))
    for arr in (alpha, weights, eta):
        arr.flags.writeable = False
    return Schedule(K=K, H=H, c_alpha=float(c_alpha), alpha=alpha, weights=weights, eta=eta)


@dataclass(frozen=True)
class LearnerConfig:
    K: int
    N: int
    c_alpha: float = 24.0
    c_b: float = 1.0
    delta: float = 0.1
    seed: int = 0
    archive: bool = False
    max_samples: int = DEFAULT_SAMPLE_BUDGET

    def validate(self):
        if self.K < 1 or self.N < 1:
            raise InvalidConfig(f"K and N must be positive, got K={self.K}, N={self.N}")
        if self.c_alpha < 24:
            raise InvalidConfig(f"c_alpha must be at least 24, got {self.c_alpha}")
        if not self.c_b > 0:
            raise InvalidConfig(f"c_b must be positive, got {self.c_b}")
        if not 0 < self.delta < 1:
            raise InvalidConfig(f"delta must lie in (0, 1), got {self.delta}")

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "N": self.N,
            "c_alpha": self.c_alpha,
            "c_b": self.c_b,
            "delta": self.delta,
            "seed": self.seed,
        }


@dataclass(eq=False)
class Archive:
    """Per-round learning traces, ``q[i]`` of shape ``(H, K, S, A_i)`` etc."""

    q: list
    r_hat: list
    P_hat: list


@dataclass(eq=False)
class LearnerOutput:
    mixture: PolicyMixture
    v_hat: np.ndarray  # (n, H+1, S); row H is the terminal zero
    bonus: np.ndarray  # (n, H, S)
    schedule: Schedule
    config: LearnerConfig
    samples: int
    archive: Archive | None = None

    @property
    def policies(self):
        return self.mixture.rows


def estimate_robust_q(emp: EmpiricalModel, V_next, sigma: float) -> np.ndarray:
    """``r_hat(s, a) + inf over the TV ball around P_hat(s, a) of Q.V_next``."""
    return emp.r_hat + kernels.tv_dual_batch(emp.P_hat, V_next, sigma)


def q_mix_update(Q_prev, q_k, alpha_k: float) -> np.ndarray:
    return (1.0 - alpha_k) * np.asarray(Q_prev) + alpha_k * np.asarray(q_k)


def ftrl_policy_update(Q, eta: float) -> np.ndarray:
    """Exponential weights ``pi(a|s) ∝ exp(eta * Q(s, a))`` per state row."""
    z = eta * np.asarray(Q, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def policy_variance(pi, q) -> np.ndarray:
    """``Var_{pi(.|s)}(q(s, .))`` along the last axis."""
    mean = (pi * q).sum(axis=-1, keepdims=True)
    return (pi * (q - mean) ** 2).sum(axis=-1)


def bonus_scale(K: int, H: int, c_b: float, delta: float, S: int, sum_actions: int) -> float:
    return c_b * math.sqrt(math.log(K * S * sum_actions / delta) ** 3 / (K * H))


def bonus(q_history, pi_history, schedule: Schedule, H: int, c_b: float, delta: float, S: int, sum_actions: int):
    """Optimism bonus per state from round histories of shape ``(K, S, A_i)``."""
    var = policy_variance(np.asarray(pi_history), np.asarray(q_history))  # (K, S)
    weighted = schedule.weights @ (var + H)
    return bonus_scale(schedule.K, H, c_b, delta, S, sum_actions) * weighted


def finalize_value(q_history, pi_history, beta, h: int, H: int, weights) -> np.ndarray:
    """``min(sum_k w_k <pi^k(.|s), q^k(s, .)> + beta(s), H - h)`` for 0-based step h."""
    played = (np.asarray(pi_history) * np.asarray(q_history)).sum(axis=-1)  # (K, S)
    return np.minimum(np.asarray(weights) @ played + beta, float(H - h))


def robust_q_ftrl(game: RobustMarkovGame, config: LearnerConfig, backend: str | None = None) -> LearnerOutput:
    config.validate()
    n, H, S, A = game.n, game.H, game.S, game.actions
    K, N = config.K, config.N
    projected = game.total_samples(K, N)
    if projected > config.max_samples:
        raise ResourceLimitExceeded(f"run needs {projected} samples, budget is {config.max_samples}")
    sched = build_schedule(K, H, config.c_alpha)
    model = GenerativeModel(game, config.seed, backend=backend)

    rows = [np.empty((H, K, S, A[i])) for i in range(n)]
    v_hat = np.zeros((n, H + 1, S))
    beta = np.zeros((n, H, S))
    archive = None
    if config.archive:
        archive = Archive(
            q=[np.empty((H, K, S, A[i])) for i in range(n)],
            r_hat=[np.empty((H, K, S, A[i])) for i in range(n)],
            P_hat=[np.empty((H, K, S, A[i], S)) for i in range(n)],
        )

    for h in reversed(range(H)):
        pi = [np.full((S, A[i]), 1.0 / A[i]) for i in range(n)]
        Q = [np.zeros((S, A[i])) for i in range(n)]
        q_hist = [np.empty((K, S, A[i])) for i in range(n)]
        for k in range(K):
            for i in range(n):
                rows[i][h, k] = pi[i]
            nxt = []
            for i in range(n):
                emp = n_sample_estimation(model, pi, i, h, N, k)
                q = estimate_robust_q(emp, v_hat[i, h + 1], game.radii[i])
                Q[i] = q_mix_update(Q[i], q, sched.alpha[k])
                nxt.append(ftrl_policy_update(Q[i], sched.eta[k]))
                q_hist[i][k] = q
                if archive is not None:
                    archive.q[i][h, k] = q
                    archive.r_hat[i][h, k] = emp.r_hat
                    archive.P_hat[i][h, k] = emp.P_hat
            pi = nxt
        for i in range(n):
            beta[i, h] = bonus(q_hist[i], rows[i][h], sched, H, config.c_b, config.delta, S, sum(A))
            v_hat[i, h] = finalize_value(q_hist[i], rows[i][h], beta[i, h], h, H, sched.weights)

    mixture = PolicyMixture(tuple(rows), np.tile(sched.weights, (H, 1)))
    return LearnerOutput(
        mixture=mixture,
        v_hat=v_hat,
        bonus=beta,
        schedule=sched,
        config=config,
        samples=model.queries,
        archive=archive,
    )
