import numpy as np
import pytest

from rmglab import kernels
from rmglab.errors import DimensionMismatch, InvalidConfig
from rmglab.game import random_game
from rmglab.sampler import GenerativeModel, n_sample_estimation, stream


def _uniform_step(game):
    return [np.full((game.S, a), 1.0 / a) for a in game.actions]


def test_stream_is_keyed():
    a = stream(5, 1, 2, 3).random(4)
    b = stream(5, 1, 2, 3).random(4)
    c = stream(5, 1, 2, 4).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_next_state_respects_support():
    g = random_game(1, 1, 3, (1,), (0.3,), seed=0)
    P = np.zeros_like(g.transitions)
    P[..., 2] = 1.0
    g = type(g)(g.actions, P, g.rewards, g.radii)
    model = GenerativeModel(g, seed=0)
    rng = stream(0)
    assert {model.sample_next_state(0, s, 0, rng) for s in range(3) for _ in range(20)} == {2}
    assert model.queries == 60


def test_estimation_shapes_and_counts(game):
    model = GenerativeModel(game, seed=1)
    emp = n_sample_estimation(model, _uniform_step(game), 0, 1, N=20, k=3)
    assert emp.P_hat.shape == (game.S, game.actions[0], game.S)
    assert emp.r_hat.shape == (game.S, game.actions[0])
    np.testing.assert_allclose(emp.P_hat.sum(axis=-1), 1.0)
    assert np.all(emp.next_counts.sum(axis=-1) == 20)
    assert np.all(emp.joint_counts.sum(axis=-1) == 20)
    assert model.queries == 20 * game.S * game.actions[0]
    assert np.all((emp.r_hat >= 0) & (emp.r_hat <= 1))


def test_pinned_action_only_in_joint_counts(game):
    model = GenerativeModel(game, seed=2)
    emp = n_sample_estimation(model, _uniform_step(game), 1, 0, N=30)
    for a in range(game.actions[1]):
        joints = np.flatnonzero(emp.joint_counts[:, a].sum(axis=0))
        assert all(game.codec.decode(j)[1] == a for j in joints)


def test_estimation_is_reproducible(game):
    step = _uniform_step(game)
    e1 = n_sample_estimation(GenerativeModel(game, seed=9), step, 0, 0, N=15, k=2)
    e2 = n_sample_estimation(GenerativeModel(game, seed=9), step, 0, 0, N=15, k=2)
    e3 = n_sample_estimation(GenerativeModel(game, seed=9), step, 0, 0, N=15, k=3)
    np.testing.assert_array_equal(e1.next_counts, e2.next_counts)
    np.testing.assert_array_equal(e1.r_hat, e2.r_hat)
    assert not np.array_equal(e1.next_counts, e3.next_counts)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_estimation_identical_across_backends(three_agent_game):
    g = three_agent_game
    step = _uniform_step(g)
    a = n_sample_estimation(GenerativeModel(g, 4, backend="python"), step, 2, 1, N=25)
    b = n_sample_estimation(GenerativeModel(g, 4, backend="cython"), step, 2, 1, N=25)
    np.testing.assert_array_equal(a.next_counts, b.next_counts)
    np.testing.assert_array_equal(a.r_hat, b.r_hat)


def test_estimation_converges(game):
    rng = np.random.default_rng(0)
    step = [rng.dirichlet(np.ones(a), game.S) for a in game.actions]
    emp = n_sample_estimation(GenerativeModel(game, seed=3), step, 0, 2, N=40000)
    from rmglab.game import marginal_kernel, marginal_reward

    # 5 binomial standard deviations at N = 40000 is at most 0.0125
    np.testing.assert_allclose(emp.P_hat, marginal_kernel(game, 2, 0, step), atol=0.0125)
    np.testing.assert_allclose(emp.r_hat, marginal_reward(game, 2, 0, step), atol=0.0125)


def test_deterministic_policy_and_kernel(game):
    P = np.zeros_like(game.transitions)
    P[..., 1] = 1.0
    g = type(game)(game.actions, P, game.rewards, game.radii)
    step = [np.eye(a)[np.zeros(g.S, int)] for a in g.actions]
    emp = n_sample_estimation(GenerativeModel(g, 0), step, 0, 0, N=5)
    assert np.all(emp.P_hat[..., 1] == 1.0)
    for a in range(g.actions[0]):
        np.testing.assert_allclose(emp.r_hat[:, a], g.rewards[0, 0, :, g.codec.encode((a, 0))], atol=1e-15)


def test_estimation_errors(game):
    model = GenerativeModel(game, 0)
    with pytest.raises(InvalidConfig):
        n_sample_estimation(model, _uniform_step(game), 0, 0, N=0)
    with pytest.raises(DimensionMismatch):
        n_sample_estimation(model, _uniform_step(game), 2, 0, N=1)
    with pytest.raises(DimensionMismatch):
        n_sample_estimation(model, [np.ones((game.S, 3)) / 3, np.ones((game.S, 2)) / 2], 0, 0, N=1)
