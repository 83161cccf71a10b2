import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rmglab.game import ProductPolicy, default_game, random_game  # noqa: E402


@pytest.fixture
def game():
    return default_game(0)


@pytest.fixture
def three_agent_game():
    return random_game(3, 2, 4, (2, 3, 2), (0.2, 0.5, 1.0), seed=7)


def random_policy(game, rng):
    return ProductPolicy(tuple(rng.dirichlet(np.ones(a), size=(game.H, game.S)) for a in game.actions))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
