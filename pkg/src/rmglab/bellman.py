"""Robust inner minimization over total-variation balls.

The robust expectation ``inf { Q.V : Q in simplex, TV(Q, P) <= sigma }`` is
computed through its one-dimensional dual

    max_{alpha in [min V, max V]}  P.[V]_alpha - sigma * (alpha - min_s [V]_alpha(s))

whose objective is concave and piecewise linear in ``alpha`` with kinks at the
entries of ``V``; evaluating it at every entry of ``V`` is therefore exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatch, EmptyVector
from .game import RobustMarkovGame, marginal_kernel, marginal_reward

VALUE_TOL = 1e-9


def clip(V, alpha: float) -> np.ndarray:
    """``[V]_alpha``: entries above ``alpha`` are replaced by ``alpha``."""
    V = np.asarray(V, dtype=float)
    return np.where(V > alpha, alpha, V)


def _check(P0row, V):
    P0row = np.asarray(P0row, dtype=float)
    V = np.asarray(V, dtype=float)
    if V.size == 0 or P0row.size == 0:
        raise EmptyVector("value vector and kernel row must be non-empty")
    if P0row.shape != V.shape or V.ndim != 1:
        raise DimensionMismatch(f"kernel row shape {P0row.shape} vs value shape {V.shape}")
    return P0row, V


def dual_objective(P0row, V, sigma: float, alpha: float, literal: bool = False) -> float:
    """Dual objective at level ``alpha``.

    With ``literal=True`` the penalty uses ``min_s [V]_alpha(s)``; otherwise the
    simplification ``min_s V(s)`` (equal for ``alpha >= min V``).
    """
    P0row, V = _check(P0row, V)
    clipped = clip(V, alpha)
    floor = clipped.min() if literal else V.min()
    return float(P0row @ clipped - sigma * (alpha - floor))


def tv_support_value(P0row, V, sigma: float) -> float:
    """Worst-case expectation of ``V`` over the TV ball of radius ``sigma`` around ``P0row``."""
    P0row, V = _check(P0row, V)
    return float(kernels.tv_dual_batch(P0row[None, :], V, sigma)[0])


@dataclass(frozen=True)
class InnerMinResult:
    value: float
    alpha_star: float
    worst_kernel: np.ndarray


def _argmax_alpha(P0row, V, sigma):
    levels = np.unique(V)
    objs = [dual_objective(P0row, V, sigma, a) for a in levels]
    return float(levels[int(np.argmax(objs))])


def tv_worst_case_kernel(P0row, V, sigma: float) -> InnerMinResult:
    """Greedy minimizer: shift up to ``sigma`` mass from the highest-value states
    onto the lowest-index minimizer of ``V``.

    Donors with equal value give in decreasing index order.
    """
    P0row, V = _check(P0row, V)
    kernel = P0row.copy()
    vmin = V.min()
    sink = int(np.flatnonzero(V == vmin)[0])
    # decreasing V, and among ties the highest index first
    donors = np.lexsort((-np.arange(V.size), -V))
    budget = float(sigma)
    for s in donors:
        if budget <= 0.0 or V[s] <= vmin:
            break
        take = min(kernel[s], budget)
        kernel[s] -= take
        kernel[sink] += take
        budget -= take
    value = tv_support_value(P0row, V, sigma)
    alpha = float(vmin) if V.max() == vmin else _argmax_alpha(P0row, V, sigma)
    return InnerMinResult(value=value, alpha_star=alpha, worst_kernel=kernel)


def lp_inner_min_oracle(P0row, V, sigma: float) -> float:
    """Primal solution of ``min Q.V`` over the TV ball, by direct mass transport.

    Walks the states from the largest value downwards and moves their mass onto
    the minimum value until ``sigma`` is used up; independent of the dual path.
    """
    P0row, V = _check(P0row, V)
    p = [float(x) for x in P0row]
    v = [float(x) for x in V]
    lowest = min(v)
    value = float((P0row * V).sum())
    remaining = float(sigma)
    for s in sorted(range(len(v)), key=lambda s: v[s], reverse=True):
        if remaining <= 0.0:
            break
        moved = min(p[s], remaining)
        value -= moved * (v[s] - lowest)
        remaining -= moved
    return value


def robust_backup(game: RobustMarkovGame, i: int, h: int, V_next, step_rows) -> np.ndarray:
    """One robust Bellman backup for agent i at step h, shape ``(S, A_i)``.

    ``step_rows`` holds every agent's ``(S, A_j)`` policy rows at step h; agent
    i's own rows are not used.
    """
    V_next = np.asarray(V_next, dtype=float)
    if V_next.shape != (game.S,):
        raise DimensionMismatch(f"V_next has shape {V_next.shape}, expected ({game.S},)")
    kernel = marginal_kernel(game, h, i, step_rows)
    reward = marginal_reward(game, h, i, step_rows)
    return reward + kernels.tv_dual_batch(kernel, V_next, game.radii[i])
