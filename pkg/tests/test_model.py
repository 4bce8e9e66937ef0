import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coop_eq.errors import CapacityError, ConfigError, InputError, MalformedProfileError
from coop_eq.model import (
    Flavor,
    Game,
    StrategyProfile,
    agent_payoff,
    expected_agent_payoff,
    global_utility,
    permute_agents,
    random_profile,
    split_objective,
    uniform_profile,
)

from conftest import C, D, constant_game, small_games


def test_global_utility_pd(pd):
    # hand-summed table lookups for all four profiles
    expected = {(C, C): 6.0, (C, D): 5.0, (D, C): 5.0, (D, D): 2.0}
    for x, value in expected.items():
        assert global_utility(pd, x) == value


def test_global_utility_trivial_cases(solo):
    assert global_utility(constant_game((2, 3), 0.0), (1, 2)) == 0.0
    assert global_utility(solo, (1,)) == 7.0


def test_agent_payoff(pd):
    assert agent_payoff(pd, 0, (D, C)) == 5.0
    assert agent_payoff(pd, 1, (D, C)) == 0.0
    assert agent_payoff(constant_game((2, 2), 0.0), 1, (0, 1)) == 0.0


def test_factored_singleton_scope_ignores_others(chain):
    # agent 3 only sees its own variable
    for x1, x2 in itertools.product(range(2), range(3)):
        assert agent_payoff(chain, 2, (x1, x2, 1)) == 0.6


def test_factored_lookup_uses_scope_order(chain):
    # owner 2, scope (1,2,3): flat index x1*6 + x2*2 + x3 = 10
    assert agent_payoff(chain, 1, (1, 2, 0)) == 0.2
    assert agent_payoff(chain, 0, (1, 1, 0)) == 1.5


@pytest.mark.parametrize("x", [(2, 0), (0, -1), (0,), (0, 0, 0)])
def test_out_of_range_assignment(pd, x):
    with pytest.raises(InputError):
        global_utility(pd, x)


def test_expected_payoff_constant_utility():
    game = Game.normal_form([np.zeros(2)])
    assert expected_agent_payoff(game, 0, uniform_profile(game), 1.0) == pytest.approx(1.0, abs=1e-15)


def test_expected_payoff_point_mass(pd):
    profile = StrategyProfile.point_mass(pd, (D, C))
    assert expected_agent_payoff(pd, 0, profile, 1.0) == pytest.approx(math.exp(5), rel=1e-12)


def test_expected_payoff_pd_uniform(pd):
    # brute-force average over the four equally likely profiles
    expected = (math.exp(3) + math.exp(0) + math.exp(5) + math.exp(1)) / 4
    got = expected_agent_payoff(pd, 0, uniform_profile(pd), 1.0)
    assert got == pytest.approx(expected, rel=1e-12)


def test_expected_payoff_log_form_never_overflows(pd):
    value = expected_agent_payoff(pd, 0, uniform_profile(pd), 1e-3, log=True)
    assert value == pytest.approx(5000 + math.log(0.25), rel=1e-12)
    with pytest.raises(OverflowError):
        expected_agent_payoff(pd, 0, uniform_profile(pd), 1e-3)


def test_expected_payoff_rejects_bad_hbar(pd):
    with pytest.raises(ConfigError):
        expected_agent_payoff(pd, 0, uniform_profile(pd), 0.0)


@pytest.mark.parametrize("counts, expected", [
    ((2, 2), [[0.5, 0.5], [0.5, 0.5]]),
    ((1,), [[1.0]]),
    ((3, 2), [[1 / 3] * 3, [0.5, 0.5]]),
])
def test_uniform_profile(counts, expected):
    profile = uniform_profile(constant_game(counts))
    for p, q in zip(profile, expected):
        np.testing.assert_array_equal(p, q)


def test_random_profile_deterministic_and_normalized():
    game = constant_game((3, 4, 2))
    a, b = random_profile(game, 7), random_profile(game, 7)
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p, q)
    assert a.sup_distance(random_profile(game, 8)) > 0
    for seed in range(1000):
        for p in random_profile(game, seed):
            assert abs(math.fsum(p) - 1) <= 1e-12
            assert np.all(p > 0)


def test_profile_validation():
    with pytest.raises(MalformedProfileError):
        StrategyProfile((np.array([0.0, 0.0]),))
    with pytest.raises(MalformedProfileError):
        StrategyProfile((np.array([0.7, 0.4]),))
    with pytest.raises(MalformedProfileError):
        StrategyProfile((np.array([1.2, -0.2]),))


def test_game_validation():
    with pytest.raises(InputError):
        Game((2, 2), ((0, 1), (0,)), (np.zeros(4), np.zeros(2)), Flavor.FACTORED)
    with pytest.raises(InputError):
        Game((2, 2), ((1, 0), (0, 1)), (np.zeros(4), np.zeros(4)), Flavor.FACTORED)
    with pytest.raises(InputError):
        Game.normal_form([np.zeros((2, 2)), np.zeros(3)], action_counts=(2, 2))
    with pytest.raises(InputError):
        Game.normal_form([np.array([np.nan, 0.0])])
    with pytest.raises(CapacityError):
        Game((10**4, 10**4), ((0, 1), (0, 1)), (np.zeros(1), np.zeros(1)))


def test_game_is_immutable(pd):
    with pytest.raises(ValueError):
        pd.tables[0][0, 0] = 10.0


def test_split_objective():
    table = np.arange(6.0).reshape(2, 3)
    game = split_objective(table)
    for x in itertools.product(range(2), range(3)):
        assert global_utility(game, x) == pytest.approx(table[x])


@given(small_games())
@settings(max_examples=100, deadline=None)
def test_global_utility_is_sum_of_agent_payoffs(game):
    for x in itertools.product(*(range(m) for m in game.action_counts)):
        total = 0.0
        for i in range(game.n):
            total += agent_payoff(game, i, x)
        assert global_utility(game, x) == total


@given(small_games(), st.integers(0, 10**6), st.floats(0.2, 5.0))
@settings(max_examples=100, deadline=None)
def test_point_mass_expectation(game, seed, hbar):
    rng = np.random.default_rng(seed)
    x = tuple(int(rng.integers(m)) for m in game.action_counts)
    profile = StrategyProfile.point_mass(game, x)
    for i in range(game.n):
        got = expected_agent_payoff(game, i, profile, hbar)
        assert got == pytest.approx(math.exp(agent_payoff(game, i, x) / hbar), rel=1e-12)


@given(small_games(), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_expected_payoff_invariant_under_relabeling(game, seed):
    rng = np.random.default_rng(seed)
    perm = [int(v) for v in rng.permutation(game.n)]
    moved = permute_agents(game, perm)
    profile = random_profile(game, seed)
    moved_profile = StrategyProfile(tuple(profile[p] for p in perm))
    for new, old in enumerate(perm):
        a = expected_agent_payoff(game, old, profile, 1.0, log=True)
        b = expected_agent_payoff(moved, new, moved_profile, 1.0, log=True)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
