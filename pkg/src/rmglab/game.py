"""Robust Markov game data model, policies and reductions over other agents.

Conventions used throughout the package:

* agents, steps, states and actions are 0-based; step ``h`` runs over
  ``0..H-1`` and the value at step ``h`` lies in ``[0, H - h]``;
* a joint action is a mixed-radix integer with agent 0 as the most
  significant digit, which is exactly numpy's C-order flattening of an
  ``(A_0, ..., A_{n-1})`` array;
* ``transitions`` has shape ``(H, S, J, S)`` and ``rewards`` has shape
  ``(n, H, S, J)`` where ``J = prod(actions)``.
"""
from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidSimplexRow,
    RadiusOutOfRange,
    RewardOutOfRange,
    ValidationError,
)

SIMPLEX_TOL = 1e-12


def _frozen(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


class JointActionCodec:
    """Mixed-radix joint-action encoding, agent 0 most significant."""

    def __init__(self, radices: Sequence[int]):
        self.radices = tuple(int(r) for r in radices)
        if not self.radices or min(self.radices) < 1:
            raise ValidationError("every agent needs at least one action")
        self.size = int(np.prod(self.radices))

    def encode(self, joint: Sequence[int]) -> int:
        if len(joint) != len(self.radices):
            raise DimensionMismatch(f"expected {len(self.radices)} actions, got {len(joint)}")
        index = 0
        for a, r in zip(joint, self.radices):
            if not 0 <= a < r:
                raise DimensionMismatch(f"action {a} out of range for radix {r}")
            index = index * r + int(a)
        return index

    def decode(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise DimensionMismatch(f"joint index {index} out of range [0, {self.size})")
        digits = []
        for r in reversed(self.radices):
            index, a = divmod(int(index), r)
            digits.append(a)
        return tuple(reversed(digits))

    def encode_many(self, actions: np.ndarray) -> np.ndarray:
        """Encode an integer array whose last axis holds one action per agent."""
        actions = np.asarray(actions, dtype=np.int64)
        out = np.zeros(actions.shape[:-1], dtype=np.int64)
        for j, r in enumerate(self.radices):
            out = out * r + actions[..., j]
        return out

    def __repr__(self):
        return f"JointActionCodec({self.radices})"


@dataclass(frozen=True, eq=False)
class RobustMarkovGame:
    actions: tuple
    transitions: np.ndarray
    rewards: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))
        object.__setattr__(self, "transitions", _frozen(self.transitions))
        object.__setattr__(self, "rewards", _frozen(self.rewards))
        object.__setattr__(self, "radii", _frozen(np.atleast_1d(self.radii)))
        object.__setattr__(self, "codec", JointActionCodec(self.actions))
        if self.transitions.ndim != 4:
            raise DimensionMismatch("transitions must have shape (H, S, J, S)")
        H, S, J, S2 = self.transitions.shape
        if S != S2 or J != self.codec.size:
            raise DimensionMismatch(
                f"transitions shape {self.transitions.shape} inconsistent with actions {self.actions}"
            )
        if self.rewards.shape != (self.n, H, S, J):
            raise DimensionMismatch(
                f"rewards shape {self.rewards.shape}, expected {(self.n, H, S, J)}"
            )
        if self.radii.shape != (self.n,):
            raise DimensionMismatch(f"need one radius per agent, got {self.radii.shape}")

    @property
    def n(self) -> int:
        return len(self.actions)

    @property
    def H(self) -> int:
        return self.transitions.shape[0]

    @property
    def S(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_joint(self) -> int:
        return self.codec.size

    def with_radii(self, radii) -> "RobustMarkovGame":
        """Copy of the game with different radii (not validated, so ``0`` is allowed)."""
        return RobustMarkovGame(self.actions, self.transitions, self.rewards, radii)

    def total_samples(self, K: int, N: int) -> int:
        """Generative-model queries made by one learner run: ``H*K*N*S*sum(A_i)``."""
        return self.H * K * N * self.S * sum(self.actions)

    def __repr__(self):
        return (
            f"RobustMarkovGame(n={self.n}, H={self.H}, S={self.S}, "
            f"actions={self.actions}, radii={self.radii.tolist()})"
        )


def _check_simplex_rows(rows: np.ndarray, what: str):
    if not np.all(np.isfinite(rows)):
        loc = tuple(int(x) for x in np.argwhere(~np.isfinite(rows))[0])
        raise InvalidSimplexRow((what,) + loc[:-1], float("inf"))
    neg = rows < 0
    if neg.any():
        loc = tuple(int(x) for x in np.argwhere(neg)[0])
        raise InvalidSimplexRow((what,) + loc[:-1], float(-rows[loc]))
    dev = np.abs(rows.sum(axis=-1) - 1.0)
    if dev.size and dev.max() > SIMPLEX_TOL:
        loc = tuple(int(x) for x in np.unravel_index(int(np.argmax(dev)), dev.shape))
        raise InvalidSimplexRow((what,) + loc, float(dev.max()))


def validate_game(game: RobustMarkovGame) -> None:
    """Raise unless every kernel row is a simplex row, rewards lie in [0, 1]
    and every radius lies in (0, 1]."""
    _check_simplex_rows(game.transitions, "transitions")
    bad = ~((game.rewards >= 0.0) & (game.rewards <= 1.0))
    if bad.any():
        raise RewardOutOfRange(tuple(int(x) for x in np.argwhere(bad)[0]))
    for i, sigma in enumerate(game.radii):
        if not (0.0 < sigma <= 1.0):
            raise RadiusOutOfRange(i)


# --- policies -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProductPolicy:
    """Per-agent arrays ``rows[i][h, s, a_i] = pi_{i,h}(a_i | s)``."""

    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(_frozen(r) for r in self.rows))

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def H(self) -> int:
        return self.rows[0].shape[0]

    def step(self, h: int) -> list:
        return [r[h] for r in self.rows]

    @classmethod
    def uniform(cls, game: RobustMarkovGame) -> "ProductPolicy":
        return cls(tuple(np.full((game.H, game.S, a), 1.0 / a) for a in game.actions))

    @classmethod
    def from_steps(cls, steps: Sequence[Sequence[np.ndarray]]) -> "ProductPolicy":
        """Build from ``steps[h][i]`` arrays of shape ``(S, A_i)``."""
        n = len(steps[0])
        return cls(tuple(np.stack([steps[h][i] for h in range(len(steps))]) for i in range(n)))

    def replace_agent(self, i: int, rows_i: np.ndarray) -> "ProductPolicy":
        rows = list(self.rows)
        rows[i] = rows_i
        return ProductPolicy(tuple(rows))


def validate_policy(game: RobustMarkovGame, policy: ProductPolicy) -> None:
    if policy.n != game.n:
        raise DimensionMismatch(f"policy has {policy.n} agents, game has {game.n}")
    for i, r in enumerate(policy.rows):
        if r.shape != (game.H, game.S, game.actions[i]):
            raise DimensionMismatch(f"agent {i} policy shape {r.shape}")
        _check_simplex_rows(r, f"policy[{i}]")


@dataclass(frozen=True, eq=False)
class PolicyMixture:
    """Per-step distribution over K product step-policies.

    ``rows[i][h, k, s, a_i]`` is agent i's k-th stored policy at step h and
    ``weights[h, k]`` its probability.
    """

    rows: tuple
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(_frozen(r) for r in self.rows))
        object.__setattr__(self, "weights", _frozen(self.weights))
        if self.weights.ndim != 2:
            raise DimensionMismatch("weights must have shape (H, K)")
        for i, r in enumerate(self.rows):
            if r.ndim != 4 or r.shape[:2] != self.weights.shape:
                raise DimensionMismatch(f"agent {i} mixture rows shape {r.shape}")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def H(self) -> int:
        return self.weights.shape[0]

    @property
    def K(self) -> int:
        return self.weights.shape[1]

    def step_policy(self, h: int, k: int) -> list:
        return [r[h, k] for r in self.rows]

    def select(self, ks: Sequence[int]) -> ProductPolicy:
        """The product policy that plays component ``ks[h]`` at step h."""
        return ProductPolicy(tuple(np.stack([r[h, k] for h, k in enumerate(ks)]) for r in self.rows))

    @classmethod
    def point_mass(cls, policy: ProductPolicy) -> "PolicyMixture":
        return cls(tuple(r[:, None] for r in policy.rows), np.ones((policy.H, 1)))


def validate_mixture(game: RobustMarkovGame, mixture: PolicyMixture) -> None:
    if mixture.n != game.n or mixture.H != game.H:
        raise DimensionMismatch("mixture does not match the game's agents/horizon")
    _check_simplex_rows(mixture.weights, "weights")
    for i, r in enumerate(mixture.rows):
        if r.shape[2:] != (game.S, game.actions[i]):
            raise DimensionMismatch(f"agent {i} mixture rows shape {r.shape}")
        _check_simplex_rows(r, f"mixture[{i}]")


# --- reductions over the other agents ---------------------------------------


def _others_subscripts(n: int, i: int, tail: str, batch: str = ""):
    letters = string.ascii_letters[1 : n + 1]
    full = "a" + letters + tail
    operands = [batch + "a" + letters[j] for j in range(n) if j != i]
    out = f"{batch}a{letters[i]}{tail}"
    return f"{full},{','.join(operands)}->{out}" if operands else f"{full}->{out}"


def marginal_kernel(game: RobustMarkovGame, h: int, i: int, step_rows: Sequence[np.ndarray]) -> np.ndarray:
    """Kernels ``P^{pi_-i}_{h,s,a_i}`` for all ``(s, a_i)``, shape ``(S, A_i, S)``.

    ``step_rows[j]`` has shape ``(S, A_j)``; agent i's own entry is ignored.
    """
    S = game.S
    T = game.transitions[h].reshape((S,) + game.actions + (S,))
    others = [np.asarray(step_rows[j]) for j in range(game.n) if j != i]
    return np.einsum(_others_subscripts(game.n, i, "z"), T, *others)


def marginal_reward(game: RobustMarkovGame, h: int, i: int, step_rows: Sequence[np.ndarray]) -> np.ndarray:
    """Expected rewards ``r^{pi_-i}_{i,h}(s, a_i)``, shape ``(S, A_i)``."""
    S = game.S
    R = game.rewards[i, h].reshape((S,) + game.actions)
    others = [np.asarray(step_rows[j]) for j in range(game.n) if j != i]
    return np.einsum(_others_subscripts(game.n, i, ""), R, *others)


def marginal_kernels_batch(game: RobustMarkovGame, h: int, i: int, rows) -> np.ndarray:
    """:func:`marginal_kernel` over a batch: ``rows[j]`` has shape ``(B, S, A_j)``,
    result ``(B, S, A_i, S)``."""
    S = game.S
    T = game.transitions[h].reshape((S,) + game.actions + (S,))
    others = [np.asarray(rows[j]) for j in range(game.n) if j != i]
    if not others:
        B = np.asarray(rows[i]).shape[0]
        return np.broadcast_to(game.transitions[h].reshape((S, game.actions[i], S)), (B, S, game.actions[i], S)).copy()
    return np.einsum(_others_subscripts(game.n, i, "z", batch="y"), T, *others)


def marginal_rewards_batch(game: RobustMarkovGame, h: int, i: int, rows) -> np.ndarray:
    S = game.S
    R = game.rewards[i, h].reshape((S,) + game.actions)
    others = [np.asarray(rows[j]) for j in range(game.n) if j != i]
    if not others:
        B = np.asarray(rows[i]).shape[0]
        return np.broadcast_to(game.rewards[i, h].reshape(S, game.actions[i]), (B, S, game.actions[i])).copy()
    return np.einsum(_others_subscripts(game.n, i, "", batch="y"), R, *others)


def _check_single(game, h, s, a_i, i, others):
    if not (0 <= i < game.n and 0 <= h < game.H and 0 <= s < game.S and 0 <= a_i < game.actions[i]):
        raise DimensionMismatch(f"index out of range: i={i}, h={h}, s={s}, a_i={a_i}")
    if len(others) != game.n:
        raise DimensionMismatch(f"need one row slot per agent ({game.n}), got {len(others)}")
    rows = []
    for j in range(game.n):
        if j == i:
            continue
        r = np.asarray(others[j], dtype=float)
        if r.shape != (game.actions[j],):
            raise DimensionMismatch(f"row of agent {j} has shape {r.shape}, expected ({game.actions[j]},)")
        rows.append(r)
    return rows


def _single_subscripts(n: int, i: int, tail: str):
    letters = string.ascii_letters[1 : n + 1]
    full = "".join(letters[j] for j in range(n) if j != i) + tail
    operands = [letters[j] for j in range(n) if j != i]
    return f"{full},{','.join(operands)}->{tail}" if operands else f"{full}->{tail}"


def expected_kernel_row(game: RobustMarkovGame, h: int, s: int, a_i: int, i: int, others) -> np.ndarray:
    """``sum_{a_-i} prod_{j != i} pi_j(a_j) P0_{h,s,(a_i,a_-i)}``.

    ``others`` has one entry per agent; the entry at index ``i`` is ignored
    (pass ``None``).
    """
    rows = _check_single(game, h, s, a_i, i, others)
    T = game.transitions[h, s].reshape(game.actions + (game.S,))
    T = np.take(T, a_i, axis=i)
    return np.einsum(_single_subscripts(game.n, i, "z"), T, *rows)


def expected_reward(game: RobustMarkovGame, h: int, s: int, a_i: int, i: int, others) -> float:
    """Expected reward of agent i for own action ``a_i`` with the others randomized."""
    rows = _check_single(game, h, s, a_i, i, others)
    R = np.take(game.rewards[i, h, s].reshape(game.actions), a_i, axis=i)
    return float(np.einsum(_single_subscripts(game.n, i, ""), R, *rows))


# --- generators -----------------------------------------------------------


def random_game(n: int, H: int, S: int, actions: Sequence[int], radii: Sequence[float], seed: int) -> RobustMarkovGame:
    """Dirichlet(1) kernel rows and Uniform[0, 1] rewards, deterministic in ``seed``."""
    actions = tuple(int(a) for a in actions)
    if n < 1 or H < 1 or S < 1 or len(actions) != n or min(actions) < 1:
        raise ValidationError(f"invalid sizes n={n}, H={H}, S={S}, actions={actions}")
    if len(radii) != n:
        raise ValidationError(f"need {n} radii, got {len(radii)}")
    rng = np.random.default_rng(seed)
    J = int(np.prod(actions))
    P = rng.dirichlet(np.ones(S), size=(H, S, J))
    P /= P.sum(axis=-1, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=(n, H, S, J))
    return RobustMarkovGame(actions, P, r, np.asarray(radii, dtype=float))


def default_game(seed: int = 0) -> RobustMarkovGame:
    """The desk-scale 2-agent experiment game: S=3, A=(2,2), H=3, sigma=(0.3,0.3)."""
    return random_game(2, 3, 3, (2, 2), (0.3, 0.3), seed)
