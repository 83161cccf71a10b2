"""JSON file formats for games, policies, mixtures and learner archives.

Game file (UTF-8 JSON)::

    {"format": "rmglab.game", "n": 2, "H": 3, "S": 3, "actions": [2, 2],
     "radii": [0.3, 0.3],
     "transitions": [h][s][joint][s'],     # h is the 0-based step
     "rewards": [i][h][s][joint]}

Joint actions are mixed-radix with agent 0 most significant. Policy and
mixture files::

    {"format": "rmglab.policy", "n", "H", "S", "actions",
     "policy": [h][i][s][a_i]}
    {"format": "rmglab.mixture", "n", "H", "S", "K", "actions",
     "weights": [h][k], "policies": [h][k][i][s][a_i]}

Floats are written with Python's shortest round-trip repr, so a
write/read cycle reproduces every value bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .game import (
    PolicyMixture,
    ProductPolicy,
    RobustMarkovGame,
    validate_game,
    validate_mixture,
    validate_policy,
)


def _parse(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object", 1)
    return doc


def _get(doc, key):
    if key not in doc:
        raise ParseError(f"missing key {key!r}")
    return doc[key]


def _array(value, key, shape=None):
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"key {key!r} is not a rectangular numeric array") from exc
    if shape is not None and arr.shape != shape:
        raise ParseError(f"key {key!r} has shape {arr.shape}, expected {shape}")
    return arr


def _dumps(doc: dict) -> str:
    return json.dumps(doc, separators=(",", ":")) + "\n"


# --- games --------------------------------------------------------------------


def game_to_dict(game: RobustMarkovGame) -> dict:
    return {
        "format": "rmglab.game",
        "n": game.n,
        "H": game.H,
        "S": game.S,
        "actions": list(game.actions),
        "radii": game.radii.tolist(),
        "transitions": game.transitions.tolist(),
        "rewards": game.rewards.tolist(),
    }


def game_from_dict(doc: dict, validate: bool = True) -> RobustMarkovGame:
    n, H, S = (int(_get(doc, k)) for k in ("n", "H", "S"))
    actions = [int(a) for a in _get(doc, "actions")]
    if len(actions) != n or min(actions, default=0) < 1:
        raise ParseError(f"'actions' must list {n} positive integers")
    J = int(np.prod(actions))
    radii = _array(_get(doc, "radii"), "radii", (n,))
    P = _array(_get(doc, "transitions"), "transitions", (H, S, J, S))
    r = _array(_get(doc, "rewards"), "rewards", (n, H, S, J))
    game = RobustMarkovGame(tuple(actions), P, r, radii)
    if validate:
        validate_game(game)
    return game


def dumps_game(game: RobustMarkovGame) -> str:
    return _dumps(game_to_dict(game))


def loads_game(text: str, validate: bool = True) -> RobustMarkovGame:
    return game_from_dict(_parse(text), validate)


def save_game(game: RobustMarkovGame, path) -> None:
    Path(path).write_text(dumps_game(game), encoding="utf-8")


def load_game(path, validate: bool = True) -> RobustMarkovGame:
    return loads_game(Path(path).read_text(encoding="utf-8"), validate)


# --- policies and mixtures -------------------------------------------------------


def _header(n, H, S, actions):
    return {"n": n, "H": H, "S": S, "actions": list(actions)}


def policy_to_dict(policy: ProductPolicy) -> dict:
    S = policy.rows[0].shape[1]
    doc = {"format": "rmglab.policy", **_header(policy.n, policy.H, S, [r.shape[2] for r in policy.rows])}
    doc["policy"] = [[r[h].tolist() for r in policy.rows] for h in range(policy.H)]
    return doc


def mixture_to_dict(mixture: PolicyMixture) -> dict:
    S = mixture.rows[0].shape[2]
    actions = [r.shape[3] for r in mixture.rows]
    doc = {"format": "rmglab.mixture", **_header(mixture.n, mixture.H, S, actions), "K": mixture.K}
    doc["weights"] = mixture.weights.tolist()
    doc["policies"] = [
        [[r[h, k].tolist() for r in mixture.rows] for k in range(mixture.K)] for h in range(mixture.H)
    ]
    return doc


def _read_header(doc):
    n, H, S = (int(_get(doc, k)) for k in ("n", "H", "S"))
    actions = [int(a) for a in _get(doc, "actions")]
    if len(actions) != n:
        raise ParseError(f"'actions' must list {n} entries")
    return n, H, S, actions


def policy_from_dict(doc: dict, game: RobustMarkovGame | None = None) -> ProductPolicy:
    n, H, S, actions = _read_header(doc)
    raw = _get(doc, "policy")
    try:
        rows = tuple(
            _array([raw[h][i] for h in range(H)], "policy", (H, S, actions[i])) for i in range(n)
        )
    except (IndexError, TypeError) as exc:
        raise ParseError("'policy' does not match the declared sizes") from exc
    policy = ProductPolicy(rows)
    if game is not None:
        validate_policy(game, policy)
    return policy


def mixture_from_dict(doc: dict, game: RobustMarkovGame | None = None) -> PolicyMixture:
    n, H, S, actions = _read_header(doc)
    K = int(_get(doc, "K"))
    weights = _array(_get(doc, "weights"), "weights", (H, K))
    raw = _get(doc, "policies")
    try:
        rows = tuple(
            _array([[raw[h][k][i] for k in range(K)] for h in range(H)], "policies", (H, K, S, actions[i]))
            for i in range(n)
        )
    except (IndexError, TypeError) as exc:
        raise ParseError("'policies' does not match the declared sizes") from exc
    mixture = PolicyMixture(rows, weights)
    if game is not None:
        validate_mixture(game, mixture)
    return mixture


def dumps_policy(policy: ProductPolicy) -> str:
    return _dumps(policy_to_dict(policy))


def dumps_mixture(mixture: PolicyMixture) -> str:
    return _dumps(mixture_to_dict(mixture))


def loads_policy(text: str, game=None) -> ProductPolicy:
    return policy_from_dict(_parse(text), game)


def loads_mixture(text: str, game=None) -> PolicyMixture:
    """Read a mixture file; a product-policy file is read as a point mass."""
    doc = _parse(text)
    if doc.get("format") == "rmglab.policy":
        return PolicyMixture.point_mass(policy_from_dict(doc, game))
    return mixture_from_dict(doc, game)


def save_mixture(mixture: PolicyMixture, path) -> None:
    Path(path).write_text(dumps_mixture(mixture), encoding="utf-8")


def load_mixture(path, game=None) -> PolicyMixture:
    return loads_mixture(Path(path).read_text(encoding="utf-8"), game)


# --- learner archive -------------------------------------------------------------


def archive_to_dict(out) -> dict:
    """Debug archive: per ``(i, h, k)`` robust Q table, empirical rewards and kernel."""
    arc = out.archive
    if arc is None:
        raise ValueError("learner output has no archive")
    n = len(arc.q)
    H, K = arc.q[0].shape[:2]
    return {
        "format": "rmglab.archive",
        "K": K,
        "N": out.config.N,
        "weights": out.schedule.weights.tolist(),
        "v_hat": out.v_hat.tolist(),
        "bonus": out.bonus.tolist(),
        "entries": [
            [
                [
                    {"q": arc.q[i][h, k].tolist(), "r_hat": arc.r_hat[i][h, k].tolist(), "P_hat": arc.P_hat[i][h, k].tolist()}
                    for k in range(K)
                ]
                for h in range(H)
            ]
            for i in range(n)
        ],
    }
