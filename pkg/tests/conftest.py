from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from coop_eq.io import load_game
from coop_eq.model import Flavor, Game

FIXTURES = Path(__file__).parent / "fixtures"
C, D = 0, 1


def fixture_path(name: str) -> Path:
    return FIXTURES / name


@pytest.fixture
def pd():
    return load_game(FIXTURES / "prisoners_dilemma.json")


@pytest.fixture
def pennies():
    return load_game(FIXTURES / "matching_pennies.json")


@pytest.fixture
def coordination():
    return load_game(FIXTURES / "coordination.json")


@pytest.fixture
def solo():
    return load_game(FIXTURES / "single_player.json")


@pytest.fixture
def chain():
    return load_game(FIXTURES / "chain_factored.json")


def constant_game(counts, value=1.5):
    return Game.normal_form([np.full(counts, value) for _ in counts])


@st.composite
def small_games(draw, max_agents=3, max_actions=3, factored=True, low=-5.0, high=5.0):
    """Random normal-form or factored games with at most 27 joint profiles."""
    n = draw(st.integers(1, max_agents))
    counts = tuple(draw(st.integers(1, max_actions)) for _ in range(n))
    use_scopes = factored and n > 1 and draw(st.booleans())
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    scopes, tables = [], []
    for i in range(n):
        if use_scopes:
            others = [j for j in range(n) if j != i and rng.random() < 0.5]
            scope = tuple(sorted([i] + others))
        else:
            scope = tuple(range(n))
        scopes.append(scope)
        tables.append(rng.uniform(low, high, tuple(counts[v] for v in scope)))
    flavor = Flavor.FACTORED if use_scopes else Flavor.NORMAL_FORM
    return Game(counts, tuple(scopes), tuple(tables), flavor)


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[k])
    if acceptance.FINDINGS:
        terminalreporter.section("global-optimum findings")
        for line in acceptance.FINDINGS:
            terminalreporter.write_line(line)
