from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgmarl.envs import ToyMatrixGame, random_toy_game
from mgmarl.game import joint_action_table
from mgmarl.oracle import (EnumerationBoundExceeded, TabularPolicy, baseline_zero_mean, check_identities,
                           cooperation_probability, exact_objective_and_gradient, exact_variance,
                           expected_gradient, finite_difference_gradient, sample_estimator, solve_tabular)
from mgmarl.oracle.suites import coop_suite, gradient_suite, identity_suite, variance_suite

seeds = st.integers(0, 2**31 - 1)


def small_game(seed, agents=2):
    rng = np.random.default_rng(seed)
    game = random_toy_game(rng, num_states=int(rng.integers(2, 5)), num_agents=agents,
                           num_actions=2, horizon=int(rng.integers(1, 4)), num_goals=2)
    return game, TabularPolicy.random(game, rng, eps=float(rng.uniform(0, 0.3)))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_dp_identities_hold(seed):
    game, policy = small_game(seed)
    for goal_index, _ in game.goal_assignments():
        assert check_identities(solve_tabular(game, policy, goal_index))["ok"]


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_dp_objective_matches_trajectory_enumeration(seed):
    game, policy = small_game(seed)
    dp = sum(p * solve_tabular(game, policy, g).objective() for g, p in game.goal_assignments())
    enumerated = exact_objective_and_gradient(game, policy, with_gradient=False)
    assert dp == pytest.approx(enumerated, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_joint_action_probabilities_sum_to_one(seed):
    game, policy = small_game(seed, agents=int(np.random.default_rng(seed).integers(1, 4)))
    for g, _ in game.goal_assignments():
        pj = solve_tabular(game, policy, g).pi_joint
        assert np.allclose(pj.sum(axis=1), 1.0, atol=1e-12)
    state = 0
    policies = [lambda o, gl, m=m: policy.probs(game.observe[m, state], gl) for m in range(game.num_agents)]
    table = joint_action_table(policies, [0] * game.num_agents, [0] * game.num_agents, game.action_sizes)
    assert table.sum() == pytest.approx(1.0, abs=1e-12)


def test_identity_check_detects_corruption():
    game, policy = small_game(3)
    sol = solve_tabular(game, policy, game.goal_assignments()[0][0])
    sol.credit[0, 0, 1, 0, 0] += 1e-6
    report = check_identities(sol)
    assert not report["ok"]
    assert not report["passed"]["credit_marginal"]


def test_enumeration_gradient_matches_finite_differences():
    game, policy = small_game(11)
    _, grad = exact_objective_and_gradient(game, policy)
    assert np.allclose(grad, finite_difference_gradient(game, policy), atol=1e-8)


def test_enumeration_bound():
    rng = np.random.default_rng(0)
    game = random_toy_game(rng, num_states=5, num_agents=2, num_actions=3, horizon=5)
    with pytest.raises(EnumerationBoundExceeded):
        exact_objective_and_gradient(game, TabularPolicy.random(game, rng), bound=1000)


@pytest.mark.parametrize("estimator", ["cm3", "qv", "coma"])
def test_estimators_unbiased_on_two_agents(estimator):
    game, policy = small_game(5)
    fd = finite_difference_gradient(game, policy)
    err = np.linalg.norm(expected_gradient(game, policy, estimator) - fd) / np.linalg.norm(fd)
    assert err <= 1e-6


@pytest.mark.parametrize("estimator", ["iac", "stage1"])
def test_single_agent_estimators_unbiased(estimator):
    game, policy = small_game(6, agents=1)
    fd = finite_difference_gradient(game, policy)
    err = np.linalg.norm(expected_gradient(game, policy, estimator) - fd) / np.linalg.norm(fd)
    assert err <= 1e-6


def test_unknown_estimator_rejected():
    game, policy = small_game(1)
    with pytest.raises(ValueError):
        expected_gradient(game, policy, "reinforce")


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_baselines_have_zero_mean(seed):
    game, policy = small_game(seed)
    assert baseline_zero_mean(game, policy) <= 1e-12


def test_sampled_estimator_mean_matches_expectation():
    game, policy = small_game(8)
    samples = sample_estimator(game, policy, "cm3", 40_000, np.random.default_rng(0))
    exact = expected_gradient(game, policy, "cm3")
    se = samples.reshape(len(samples), -1).std(axis=0) / np.sqrt(len(samples))
    assert np.all(np.abs(samples.reshape(len(samples), -1).mean(axis=0) - exact) <= 5 * se + 1e-12)


def test_cm3_and_qv_variance_coincide_under_exact_critics():
    game, policy = small_game(9)
    assert exact_variance(game, policy, "cm3")["variance"] == pytest.approx(
        exact_variance(game, policy, "qv")["variance"], rel=1e-10)


def test_cooperation_probability_closed_form():
    e = Fraction(1, 2)
    assert cooperation_probability(0.5)[0] == pytest.approx(float(2 * e**2 * (1 - e + e / 4) ** 8), abs=1e-15)
    assert cooperation_probability(0.5)[1] == pytest.approx(float(Fraction(2, 4**8)), abs=1e-15)
    assert cooperation_probability(0.0)[0] == 0.0
    with pytest.raises(ValueError):
        cooperation_probability(1.5)


def test_toy_game_validation():
    with pytest.raises(ValueError):
        ToyMatrixGame(np.full((2, 1, 2), 0.4), np.zeros((2, 1, 1)), [1, 0], [[0, 1]], (1,), horizon=1)


def test_suites_report_pass():
    assert identity_suite(trials=3, seed=1)["passed"]
    assert gradient_suite(trials=2, seed=1)["passed"]
    assert variance_suite(samples=20_000, seed=1)["passed"]
    assert coop_suite()["passed"]
