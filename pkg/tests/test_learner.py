import math

import numpy as np
import pytest

from rmglab import kernels
from rmglab.errors import InvalidConfig, ResourceLimitExceeded
from rmglab.game import random_game
from rmglab.learner import (
    LearnerConfig,
    bonus_scale,
    build_schedule,
    estimate_robust_q,
    finalize_value,
    ftrl_policy_update,
    policy_variance,
    q_mix_update,
    robust_q_ftrl,
)
from rmglab.sampler import GenerativeModel, n_sample_estimation


@pytest.mark.parametrize("K", [2, 64, 1000])
def test_schedule_basic_identities(K):
    s = build_schedule(K, 2)
    assert s.alpha[0] == 1.0
    assert abs(s.weights.sum() - 1.0) <= 1e-12
    assert s.weights[-1] == s.alpha[-1]
    assert s.weights.max() <= 2 * 24 * math.log(K) / K + 1e-12
    np.testing.assert_allclose(s.eta, np.sqrt(math.log(K) / (s.alpha * 2)))


def test_schedule_eta_substitution():
    K = int(round(math.exp(8)))
    s = build_schedule(K, 2)
    # log K = 4H with alpha_1 = 1 gives eta_2 = 2
    assert s.eta[0] == pytest.approx(2 * math.sqrt(math.log(K) / 8), rel=1e-12)


def test_schedule_partial_weights():
    s = build_schedule(50, 1)
    np.testing.assert_allclose(s.partial_weights(50), s.weights, atol=1e-15)
    for k in (1, 7, 30):
        assert s.partial_weights(k).sum() == pytest.approx(1.0, abs=1e-12)


def test_schedule_single_round():
    s = build_schedule(1, 3)
    np.testing.assert_array_equal(s.alpha, [1.0])
    np.testing.assert_array_equal(s.weights, [1.0])


def test_schedule_validation():
    with pytest.raises(InvalidConfig):
        build_schedule(10, 1, c_alpha=23.9)
    with pytest.raises(InvalidConfig):
        build_schedule(0, 1)


def test_config_validation():
    for bad in (dict(K=0, N=1), dict(K=1, N=0), dict(K=1, N=1, c_b=0), dict(K=1, N=1, delta=1.0)):
        with pytest.raises(InvalidConfig):
            LearnerConfig(**bad).validate()


def test_robust_q_reduces_at_zero_radius(game):
    emp = n_sample_estimation(GenerativeModel(game, 0), [np.full((game.S, a), 1 / a) for a in game.actions], 0, 0, 10)
    V = np.array([0.3, 1.7, 2.2])
    np.testing.assert_array_equal(estimate_robust_q(emp, V, 0.0), emp.r_hat + (emp.P_hat * V).sum(axis=-1))
    q = estimate_robust_q(emp, V, 0.3)
    assert np.all(q <= emp.r_hat + emp.P_hat @ V + 1e-12)
    assert np.all(q >= emp.r_hat + V.min() - 1e-12)


def test_q_mix_and_ftrl_updates():
    np.testing.assert_allclose(q_mix_update([1.0, 0.0], [0.0, 1.0], 0.25), [0.75, 0.25])
    pi = ftrl_policy_update(np.array([[0.0, 0.0], [1.0, 0.0], [1000.0, 0.0]]), 1.0)
    np.testing.assert_allclose(pi[0], [0.5, 0.5])
    np.testing.assert_allclose(pi[1], [math.e / (1 + math.e), 1 / (1 + math.e)])
    np.testing.assert_allclose(pi[2], [1.0, 0.0])
    np.testing.assert_allclose(ftrl_policy_update(np.array([[3.0, 1.0]]), 0.0), [[0.5, 0.5]])


def test_policy_variance_and_finalize():
    pi = np.array([[0.5, 0.5]])
    q = np.array([[0.0, 2.0]])
    assert policy_variance(pi, q)[0] == pytest.approx(1.0)
    # clamped at H - h
    out = finalize_value(np.array([[[2.0, 2.0]]]), np.array([[[0.5, 0.5]]]), np.array([0.5]), 1, 3, np.array([1.0]))
    assert out[0] == 2.0
    out = finalize_value(np.array([[[1.0, 1.0]]]), np.array([[[0.5, 0.5]]]), np.array([0.25]), 0, 3, np.array([1.0]))
    assert out[0] == 1.25


def test_bonus_scale_formula():
    K, H, S, sa, d = 100, 2, 3, 4, 0.1
    assert bonus_scale(K, H, 2.0, d, S, sa) == pytest.approx(2 * math.sqrt(math.log(K * S * sa / d) ** 3 / (K * H)))


def test_learner_output_structure(game):
    out = robust_q_ftrl(game, LearnerConfig(K=16, N=4, archive=True))
    mix = out.mixture
    assert mix.K == 16 and mix.H == game.H
    for h in range(game.H):
        np.testing.assert_allclose(mix.weights[h], out.schedule.weights)
        for i in range(game.n):
            np.testing.assert_allclose(mix.rows[i][h, 0], 1.0 / game.actions[i])
            np.testing.assert_allclose(mix.rows[i][h].sum(axis=-1), 1.0)
    assert out.samples == game.total_samples(16, 4)
    assert np.all(out.v_hat[:, game.H] == 0)
    for h in range(game.H):
        assert np.all(out.v_hat[:, h] <= game.H - h) and np.all(out.v_hat[:, h] >= 0)
    assert np.all(out.bonus > 0)


def test_learner_is_deterministic(game):
    a = robust_q_ftrl(game, LearnerConfig(K=8, N=3, seed=5))
    b = robust_q_ftrl(game, LearnerConfig(K=8, N=3, seed=5))
    c = robust_q_ftrl(game, LearnerConfig(K=8, N=3, seed=6))
    for x, y in zip(a.mixture.rows, b.mixture.rows):
        np.testing.assert_array_equal(x, y)
    np.testing.assert_array_equal(a.v_hat, b.v_hat)
    assert not np.array_equal(a.mixture.rows[0], c.mixture.rows[0])


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_learner_backends_agree(game):
    a = robust_q_ftrl(game, LearnerConfig(K=8, N=3), backend="python")
    b = robust_q_ftrl(game, LearnerConfig(K=8, N=3), backend="cython")
    np.testing.assert_allclose(a.v_hat, b.v_hat, atol=1e-12)


def test_learner_sample_budget(game):
    with pytest.raises(ResourceLimitExceeded):
        robust_q_ftrl(game, LearnerConfig(K=100, N=100, max_samples=1000))


def test_learner_single_round():
    g = random_game(2, 2, 2, (2, 2), (0.5, 0.5), seed=1)
    out = robust_q_ftrl(g, LearnerConfig(K=1, N=2))
    assert out.mixture.K == 1
    np.testing.assert_array_equal(out.mixture.weights, np.ones((2, 1)))
