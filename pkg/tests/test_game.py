import numpy as np
import pytest

from mgmarl.envs import CheckersWorld, LaneMergeWorld, NavigationWorld, ToyMatrixGame
from mgmarl.game import (DecomposedState, Transition, UnsupportedReduction, induce_single_agent_mdp,
                         joint_action_table, joint_policy_probability)


def test_state_concatenation_roundtrip():
    s = DecomposedState(np.array([1.0, 2.0]), np.array([[3.0, 4.0], [5.0, 6.0]]))
    assert np.array_equal(s.full(), [1, 2, 3, 4, 5, 6])
    assert np.array_equal(s.others(0), [5, 6])


def test_transition_requires_one_reward_per_agent():
    s = DecomposedState(np.zeros(0), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        Transition(s, None, np.zeros((2, 1)), np.zeros(2), np.zeros(1), s, None, False)


def test_step_checks_action_count_and_range(rng):
    game = NavigationWorld()
    game.reset(rng)
    with pytest.raises(ValueError):
        game.step([0])
    with pytest.raises(ValueError):
        game.step([0, 7])


def test_goals_are_immutable_within_episode(rng):
    game = NavigationWorld()
    game.reset(rng)
    with pytest.raises(ValueError):
        game.goals[0, 0] = 5.0


def test_horizon_reports_timeout(rng):
    game = NavigationWorld(horizon=3)
    game.reset(rng)
    results = [game.step([0, 0]) for _ in range(3)]
    assert [r.terminal for r in results] == [False, False, True]
    assert results[-1].timeout
    with pytest.raises(RuntimeError):
        game.step([0, 0])


def test_lane_merge_timeout_penalty_only_for_unfinished(rng):
    game = LaneMergeWorld(horizon=2, jitter=False)
    game.reset(rng)
    game.step([0, 0])
    last = game.step([0, 0])
    assert last.timeout
    assert np.all(last.rewards == -10.0)


@pytest.mark.parametrize("game", [NavigationWorld(num_agents=4, formation="antipodal"),
                                  CheckersWorld(), LaneMergeWorld()])
def test_induced_mdp_has_one_agent(game):
    single = induce_single_agent_mdp(game)
    assert single.num_agents == 1
    assert single.layout()["obs_self"] == game.layout()["obs_self"]


def test_induced_navigation_has_no_collision_term(rng):
    single = NavigationWorld(num_agents=4, formation="antipodal").induced_mdp()
    single.reset(rng)
    res = single.step([0])
    assert not res.info["collisions"].any()
    assert res.rewards[0] == pytest.approx(-res.info["distances"][0])


def test_induced_checkers_role_is_random():
    single = CheckersWorld().induced_mdp()
    roles = {single.sample_goals(np.random.default_rng(s)).layout["roles"][0] for s in range(20)}
    assert roles == {0, 1}


def test_irreducible_game_raises():
    game = NavigationWorld()
    game.reducible = False
    with pytest.raises(UnsupportedReduction):
        induce_single_agent_mdp(game)


def test_joint_policy_probability_product():
    half = lambda o, g: np.array([0.5, 0.5])
    assert joint_policy_probability([half, half], [0, 0], [0, 0], [1, 0]) == 0.25
    zero = lambda o, g: np.array([0.0, 1.0])
    assert joint_policy_probability([half, zero], [0, 0], [0, 0], [1, 0]) == 0.0
    with pytest.raises(ValueError):
        joint_policy_probability([half], [0, 0], [0, 0], [1, 0])


def test_joint_action_table_three_agents_sums_to_one(rng):
    tables = [rng.dirichlet(np.ones(k)) for k in (2, 3, 2)]
    policies = [lambda o, g, p=p: p for p in tables]
    table = joint_action_table(policies, [0] * 3, [0] * 3, (2, 3, 2))
    assert table.sum() == pytest.approx(1.0, abs=1e-12)
    assert table[1, 2, 0] == pytest.approx(tables[0][1] * tables[1][2] * tables[2][0])


def test_toy_induced_mdp_matches_frozen_partner(rng):
    # agent 1 absent == agent 1 frozen on action 0 in the toy reduction
    from mgmarl.envs import random_toy_game
    game = random_toy_game(rng, num_states=3, num_agents=2, num_actions=2, horizon=2)
    single = game.induced_mdp()
    assert isinstance(single, ToyMatrixGame) and single.num_agents == 1
    for a in range(2):
        j = game.joint_index([a, 0])
        assert np.allclose(single.transitions[:, a], game.transitions[:, j])
        assert np.allclose(single.rewards[:, a], game.rewards[:, j])


@pytest.mark.parametrize("make", [lambda: NavigationWorld(), lambda: LaneMergeWorld(traffic=3),
                                  lambda: CheckersWorld(3, 4)])
def test_environments_deterministic_given_seed(make):
    def rollout():
        game = make()
        rng = np.random.default_rng(5)
        game.reset(rng)
        acts = np.random.default_rng(9)
        out = []
        for _ in range(10):
            res = game.step(acts.integers(0, 5, game.num_agents))
            out.append(np.concatenate([res.rewards, res.state.full()]))
            if res.terminal:
                break
        return np.concatenate(out)
    assert np.array_equal(rollout(), rollout())
