import json

import numpy as np
import pytest

from conftest import random_policy
from oracles import single_agent_robust_vi, standard_policy_evaluation
from rmglab.errors import InvalidConfig
from rmglab.evaluator import (
    GapReport,
    cce_gap,
    component_sequences,
    mixture_best_response_recursive,
    mixture_value_mc,
    mixture_value_recursive,
    robust_best_response,
    robust_policy_value,
)
from rmglab.game import PolicyMixture, ProductPolicy, random_game


def random_mixture(game, K, rng):
    rows = tuple(rng.dirichlet(np.ones(a), (game.H, K, game.S)) for a in game.actions)
    return PolicyMixture(rows, rng.dirichlet(np.ones(K), game.H))


def test_zero_radius_matches_standard_evaluation(game, rng):
    g0 = game.with_radii((0.0, 0.0))
    pol = random_policy(g0, rng)
    for i in range(2):
        np.testing.assert_allclose(robust_policy_value(g0, pol, i), standard_policy_evaluation(g0, pol, i), atol=1e-12)


def test_robust_value_below_nominal(game, rng):
    pol = random_policy(game, rng)
    for i in range(2):
        V = robust_policy_value(game, pol, i)
        assert np.all(V <= standard_policy_evaluation(game, pol, i) + 1e-12)
        assert np.all(V >= 0)
        assert np.all(V[game.H] == 0)


def test_best_response_dominates_every_deviation(three_agent_game, rng):
    g = three_agent_game
    pol = random_policy(g, rng)
    for i in range(g.n):
        rows, B = robust_best_response(g, pol, i)
        assert np.all(rows.sum(axis=-1) == 1.0)
        np.testing.assert_allclose(robust_policy_value(g, pol.replace_agent(i, rows), i), B, atol=1e-12)
        for _ in range(5):
            dev = pol.replace_agent(i, rng.dirichlet(np.ones(g.actions[i]), (g.H, g.S)))
            assert np.all(robust_policy_value(g, dev, i) <= B + 1e-12)


def test_best_response_breaks_ties_low():
    g = random_game(2, 1, 2, (3, 1), (0.2, 0.2), seed=0)
    r = np.zeros_like(g.rewards)
    g = type(g)(g.actions, g.transitions, r, g.radii)
    rows, _ = robust_best_response(g, ProductPolicy.uniform(g), 0)
    assert np.all(rows[..., 0] == 1.0)


@pytest.mark.parametrize("seed", range(4))
def test_single_agent_embed_matches_value_iteration(seed):
    g = random_game(2, 3, 4, (3, 1), (0.4, 0.1), seed=seed)
    _, B = robust_best_response(g, ProductPolicy.uniform(g), 0)
    np.testing.assert_allclose(B, single_agent_robust_vi(g, 0), atol=1e-9)


def test_point_mass_mixture_matches_policy_value(game, rng):
    pol = random_policy(game, rng)
    mix = PolicyMixture.point_mass(pol)
    for i in range(2):
        V = robust_policy_value(game, pol, i)
        np.testing.assert_allclose(mixture_value_recursive(game, mix, i), V, atol=1e-12)
        mean, se = mixture_value_mc(game, mix, i, M=100)
        np.testing.assert_allclose(mean, V[0], atol=1e-12)
        assert np.all(se == 0)
        np.testing.assert_allclose(mixture_best_response_recursive(game, mix, i), robust_best_response(game, pol, i)[1], atol=1e-12)


def test_component_sequences_enumeration_and_sampling(game, rng):
    mix = random_mixture(game, 3, rng)
    seqs, probs, exact = component_sequences(mix, 10, 0)
    assert exact and seqs.shape == (27, 3)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    big = random_mixture(random_game(1, 3, 2, (2,), (0.3,), 0), 17, rng)
    seqs, probs, exact = component_sequences(big, 500, 1)
    assert not exact and seqs.shape == (500, 3)
    assert seqs.min() >= 0 and seqs.max() < 17
    again, _, _ = component_sequences(big, 500, 1)
    np.testing.assert_array_equal(seqs, again)


def test_zero_radius_recursion_equals_literal(game, rng):
    g0 = game.with_radii((0.0, 0.0))
    mix = random_mixture(g0, 2, rng)
    for i in range(2):
        mean, _ = mixture_value_mc(g0, mix, i, M=100)
        np.testing.assert_allclose(mixture_value_recursive(g0, mix, i)[0], mean, atol=1e-12)


def test_literal_value_not_below_recursive_value(game, rng):
    # the inner infimum of an average is at least the average of infima
    mix = random_mixture(game, 2, rng)
    for i in range(2):
        mean, _ = mixture_value_mc(game, mix, i, M=100)
        assert np.all(mean <= mixture_value_recursive(game, mix, i)[0] + 1e-12)


def test_gap_is_nonnegative_and_zero_for_best_response_game():
    g = random_game(2, 2, 3, (1, 1), (0.3, 0.3), seed=0)
    mix = PolicyMixture.point_mass(ProductPolicy.uniform(g))
    for method in ("recursive", "mc"):
        assert cce_gap(g, mix, method).gap == pytest.approx(0.0, abs=1e-12)


def test_gap_report_serialization(game, rng):
    rep = cce_gap(game, random_mixture(game, 2, rng), "mc", M=50)
    rep.run_id = "abc"
    doc = json.loads(rep.to_json())
    assert doc["method"] == "mc" and doc["exact"] is True
    assert doc["gap"] == rep.gap >= 0
    lines = rep.to_csv().split("\r\n")
    assert lines[0] == "run_id,method,gap_agent0,gap_agent1,gap,std_error"
    assert lines[1].startswith("abc,mc,")
    assert float(lines[1].split(",")[4]) == rep.gap


def test_gap_report_half_width():
    rep = GapReport("mc", np.array([[1.0, 2.0]]), np.array([[0.5, 0.5]]), std_error=np.array([[0.1, 0.2]]), samples=40, exact=False)
    assert rep.gap == 1.5
    assert rep.overall_std_error == 0.2
    assert rep.half_width == pytest.approx(1.96 * 0.2, rel=1e-3)


def test_gap_argument_checks(game, rng):
    mix = random_mixture(game, 2, rng)
    with pytest.raises(InvalidConfig):
        cce_gap(game, mix, "mc", M=29)
    with pytest.raises(InvalidConfig):
        cce_gap(game, mix, "exact")


def test_span_bound_on_evaluator_values(rng):
    for seed in range(10):
        g = random_game(2, 3, 4, (2, 2), (0.5, 0.9), seed=seed)
        pol = random_policy(g, rng)
        mix = random_mixture(g, 2, rng)
        for i in range(2):
            cap = [min(1 / g.radii[i], g.H - h) for h in range(g.H)]
            for table in (robust_policy_value(g, pol, i), robust_best_response(g, pol, i)[1], mixture_value_recursive(g, mix, i)):
                for h in range(g.H):
                    assert np.ptp(table[h]) <= cap[h] + 1e-9
