"""Deterministic checks on archived learner runs.

The auxiliary recursions reuse the learner's own empirical models, so the
optimism statements they support hold exactly (no sampling error involved).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidConfig
from .game import RobustMarkovGame
from .learner import LearnerOutput

TOL = 1e-9
# Large-K regime in which the best-response optimism and regret checks are
# expected to hold at desk scale (H <= 3); smaller K is reported only.
MIN_K_FOR_REGRET = 1024
MAX_H_FOR_REGRET = 3


def _require_archive(out: LearnerOutput):
    if out.archive is None:
        raise InvalidConfig("learner run was not archived; rerun with archive=True")
    return out.archive


def auxiliary_mixture_value(game: RobustMarkovGame, out: LearnerOutput, i: int) -> np.ndarray:
    """Mixture value recomputed on the empirical models, shape ``(H + 1, S)``."""
    arc = _require_archive(out)
    w = out.schedule.weights
    E = np.zeros((game.H + 1, game.S))
    for h in reversed(range(game.H)):
        q = arc.r_hat[i][h] + kernels.tv_dual_batch(arc.P_hat[i][h], E[h + 1], game.radii[i])
        E[h] = w @ (out.mixture.rows[i][h] * q).sum(axis=-1)
    return E


def auxiliary_best_response(game: RobustMarkovGame, out: LearnerOutput, i: int) -> np.ndarray:
    arc = _require_archive(out)
    w = out.schedule.weights
    B = np.zeros((game.H + 1, game.S))
    for h in reversed(range(game.H)):
        q = arc.r_hat[i][h] + kernels.tv_dual_batch(arc.P_hat[i][h], B[h + 1], game.radii[i])
        B[h] = np.tensordot(w, q, axes=1).max(axis=-1)
    return B


def ftrl_regret(out: LearnerOutput, i: int) -> np.ndarray:
    """Weighted regret ``max_a sum_k w_k q^k(s,a) - sum_k w_k <pi^k, q^k>``, shape ``(H, S)``."""
    arc = _require_archive(out)
    w = out.schedule.weights
    q = arc.q[i]  # (H, K, S, A)
    best = np.einsum("k,hksa->hsa", w, q).max(axis=-1)
    played = np.einsum("k,hks->hs", w, (out.mixture.rows[i] * q).sum(axis=-1))
    return best - played


def k_condition(K: int, H: int) -> bool:
    return K >= MIN_K_FOR_REGRET and H <= MAX_H_FOR_REGRET


@dataclass
class InvariantReport:
    optimism_ok: bool
    optimism_br_ok: bool
    regret_le_bonus_ok: bool
    span_ok: bool
    value_range_ok: bool
    k_condition: bool
    min_optimism_margin: float
    min_regret_margin: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_invariants(game: RobustMarkovGame, out: LearnerOutput, tol: float = TOL) -> InvariantReport:
    H = game.H
    opt_margin = math.inf
    br_ok = True
    reg_margin = math.inf
    span_ok = True
    range_ok = True
    for i in range(game.n):
        V = out.v_hat[i]
        E = auxiliary_mixture_value(game, out, i)
        B = auxiliary_best_response(game, out, i)
        opt_margin = min(opt_margin, float((V[:H] - E[:H]).min()))
        br_ok &= bool(np.all(V[:H] >= B[:H] - tol))
        reg_margin = min(reg_margin, float((out.bonus[i] - ftrl_regret(out, i)).min()))
        for h in range(H):
            cap = min(1.0 / game.radii[i], H - h)
            span_ok &= bool(np.ptp(E[h]) <= cap + tol)
            range_ok &= bool(np.all(V[h] >= -tol) and np.all(V[h] <= H - h + tol))
    return InvariantReport(
        optimism_ok=opt_margin >= -tol,
        optimism_br_ok=br_ok,
        regret_le_bonus_ok=reg_margin >= -tol,
        span_ok=span_ok,
        value_range_ok=range_ok,
        k_condition=k_condition(out.config.K, H),
        min_optimism_margin=opt_margin,
        min_regret_margin=reg_margin,
    )
