"""Small tabular multi-goal games that can be enumerated exhaustively."""

from itertools import product

import numpy as np

from ..game import DecomposedState, GoalAssignment, JointObservation, MultiGoalGame


class ToyMatrixGame(MultiGoalGame):
    """Finite-horizon tabular multi-goal game.

    Joint actions are flattened in C order over ``action_sizes``. Goals come
    from a finite set of size ``num_goals``; each agent's goal is drawn from
    ``goal_probs`` independently. The episode always lasts ``horizon`` steps.

    Arrays:
      transitions  [S, |A|, S]   rows sum to one
      rewards      [S, |A|, K]   reward of the joint action under goal k
      initial      [S]
      observe      [N, S]        integer observation of each agent
    """

    name = "toy"

    def __init__(self, transitions, rewards, initial, observe, action_sizes,
                 horizon, discount=0.9, goal_probs=None):
        super().__init__()
        self.transitions = np.asarray(transitions, dtype=np.float64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.initial = np.asarray(initial, dtype=np.float64)
        self.observe = np.asarray(observe, dtype=np.int64)
        self.action_sizes = tuple(int(k) for k in action_sizes)
        self.num_agents = len(self.action_sizes)
        self.num_actions = max(self.action_sizes)
        self.horizon = int(horizon)
        self.discount = float(discount)
        self.num_states = self.transitions.shape[0]
        self.num_goals = self.rewards.shape[2]
        self.goal_dim = self.num_goals
        self.num_obs = int(self.observe.max()) + 1
        self.goal_probs = (np.full(self.num_goals, 1.0 / self.num_goals)
                           if goal_probs is None else np.asarray(goal_probs, dtype=np.float64))
        self._validate()

    def _validate(self):
        S, A = self.num_states, int(np.prod(self.action_sizes))
        if self.transitions.shape != (S, A, S):
            raise ValueError(f"transitions must be [{S}, {A}, {S}]")
        if not np.allclose(self.transitions.sum(-1), 1.0, atol=1e-12):
            raise ValueError("transition rows must sum to one")
        if self.rewards.shape[:2] != (S, A):
            raise ValueError("rewards must be [S, |A|, K]")
        if self.observe.shape != (self.num_agents, S):
            raise ValueError("observe must be [N, S]")
        if not np.isclose(self.initial.sum(), 1.0) or not np.isclose(self.goal_probs.sum(), 1.0):
            raise ValueError("initial and goal distributions must sum to one")

    @property
    def num_joint(self):
        return int(np.prod(self.action_sizes))

    def joint_index(self, actions):
        return int(np.ravel_multi_index(tuple(actions), self.action_sizes))

    def joint_actions(self):
        """All joint actions as an array [|A|, N] in flattened order."""
        return np.array(list(product(*(range(k) for k in self.action_sizes))), dtype=np.int64)

    def goal_assignments(self):
        """Every goal assignment with its probability."""
        out = []
        for combo in product(range(self.num_goals), repeat=self.num_agents):
            out.append((np.array(combo), float(np.prod(self.goal_probs[list(combo)]))))
        return out

    def layout(self):
        return {
            "state_env": (self.num_states,),
            "state_agent": (0,),
            "obs_self": (self.num_obs,),
            "obs_others": (0,),
            "goal": (self.num_goals,),
        }

    def sample_goals(self, rng):
        idx = rng.choice(self.num_goals, size=self.num_agents, p=self.goal_probs)
        return GoalAssignment(np.eye(self.num_goals)[idx], {"goal_index": idx})

    def _reset(self, rng):
        self._rng = rng
        self.goal_index = np.asarray(self.assignment.layout.get(
            "goal_index", np.argmax(self.assignment.goals, axis=1)))
        self.s = int(rng.choice(self.num_states, p=self.initial))
        return self._encode()

    def _step(self, actions):
        if np.any(np.asarray(actions) >= np.asarray(self.action_sizes)):
            raise ValueError("action outside this agent's action set")
        j = self.joint_index(actions)
        rewards = self.rewards[self.s, j, self.goal_index]
        self.s = int(self._rng.choice(self.num_states, p=self.transitions[self.s, j]))
        state, obs = self._encode()
        return state, obs, rewards, False, {"state_index": self.s}

    def _encode(self):
        state = DecomposedState(np.eye(self.num_states)[self.s], np.zeros((self.num_agents, 0)))
        self_parts = np.eye(self.num_obs)[self.observe[:, self.s]]
        return state, JointObservation(self_parts, np.zeros((self.num_agents, 0)))

    def induced_mdp(self):
        """Agent 0 alone; the others are frozen on action 0."""
        sizes = self.action_sizes
        idx = [np.ravel_multi_index((a,) + (0,) * (len(sizes) - 1), sizes) for a in range(sizes[0])]
        return ToyMatrixGame(
            self.transitions[:, idx], self.rewards[:, idx], self.initial, self.observe[:1],
            sizes[:1], self.horizon, self.discount, self.goal_probs,
        )


def random_toy_game(rng, num_states=6, num_agents=2, num_actions=3, horizon=3,
                    num_goals=2, num_obs=None, support=None, discount=0.9):
    """Random game with Dirichlet transitions and rewards uniform in [-1, 1].

    ``support`` limits each transition row to that many successor states.
    ``num_obs`` < ``num_states`` makes observations aliased.
    """
    sizes = (num_actions,) * num_agents if np.isscalar(num_actions) else tuple(num_actions)
    A = int(np.prod(sizes))
    P = rng.dirichlet(np.ones(num_states), size=(num_states, A))
    if support is not None and support < num_states:
        for s in range(num_states):
            for a in range(A):
                keep = rng.choice(num_states, size=support, replace=False)
                row = np.zeros(num_states)
                row[keep] = rng.dirichlet(np.ones(support))
                P[s, a] = row
    R = rng.uniform(-1.0, 1.0, size=(num_states, A, num_goals))
    p0 = rng.dirichlet(np.ones(num_states))
    n_obs = num_states if num_obs is None else num_obs
    observe = np.stack([
        np.arange(num_states) if n_obs == num_states else rng.integers(0, n_obs, num_states)
        for _ in range(num_agents)
    ])
    # every observation index must occur so tabular policies stay well defined
    observe[:, :n_obs] = np.arange(n_obs)
    return ToyMatrixGame(P, R, p0, observe, sizes, horizon, discount)
