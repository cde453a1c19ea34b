"""Multi-goal Markov game contract.

A game owns its goal distribution and exposes states and observations in
decomposed form so that networks can route the "self" and "others" parts to
different branches without per-environment special cases.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from itertools import product

import numpy as np


class UnsupportedReduction(Exception):
    """The game cannot be reduced to a single-agent MDP."""


@dataclass
class DecomposedState:
    env_part: np.ndarray          # [d_env]
    agent_parts: np.ndarray       # [N, d_agent]

    def full(self):
        return np.concatenate([self.env_part, self.agent_parts.ravel()])

    def others(self, n):
        """s^{-n}: every agent part except agent n, in agent order."""
        return np.delete(self.agent_parts, n, axis=0).ravel()


@dataclass
class DecomposedObservation:
    self_part: np.ndarray
    others_part: np.ndarray


@dataclass
class JointObservation:
    """Observations of all agents stacked along the first axis."""

    self_parts: np.ndarray        # [N, d_self]
    others_parts: np.ndarray      # [N, *others_shape]

    def __getitem__(self, n):
        return DecomposedObservation(self.self_parts[n], self.others_parts[n])

    def __len__(self):
        return len(self.self_parts)


@dataclass
class GoalAssignment:
    """Per-episode goals plus whatever initial layout the game tied to them."""

    goals: np.ndarray             # [N, d_goal]
    layout: dict = field(default_factory=dict)


@dataclass
class Transition:
    state: DecomposedState
    observations: JointObservation
    goals: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_state: DecomposedState
    next_observations: JointObservation
    terminal: bool

    def __post_init__(self):
        if len(self.rewards) != len(self.actions):
            raise ValueError("one reward per agent goal is required")


@dataclass
class StepResult:
    state: DecomposedState
    observations: JointObservation
    rewards: np.ndarray
    terminal: bool
    timeout: bool = False
    info: dict = field(default_factory=dict)


class MultiGoalGame(ABC):
    """Episodic multi-goal Markov game with N agents and discrete actions.

    Subclasses implement ``sample_goals``, ``_reset`` and ``_step``; the base
    class enforces the action count, goal immutability and the horizon.
    Reaching the horizon is reported as a terminal step with ``timeout=True``.
    """

    num_agents: int
    num_actions: int = 5
    discount: float = 0.99
    horizon: int = 25
    goal_dim: int
    name: str = "game"
    reducible: bool = True

    def __init__(self):
        self.t = 0
        self.assignment = None
        self.done = True

    @property
    def action_space_sizes(self):
        return (self.num_actions,) * self.num_agents

    @property
    def goals(self):
        return self.assignment.goals

    # -- contract ----------------------------------------------------------

    @abstractmethod
    def sample_goals(self, rng) -> GoalAssignment:
        """Draw per-agent goals (and their initial layout) for one episode."""

    @abstractmethod
    def _reset(self, rng) -> tuple:
        """Return (DecomposedState, JointObservation) for self.assignment."""

    @abstractmethod
    def _step(self, actions) -> tuple:
        """Return (state, observations, rewards, terminal, info)."""

    def induced_mdp(self):
        """Single-agent game with all interaction terms removed."""
        raise UnsupportedReduction(f"{type(self).__name__} declares no single-agent reduction")

    def layout(self):
        """Shapes of every array the game emits, for network wiring."""
        raise NotImplementedError

    # -- driver ------------------------------------------------------------

    def reset(self, rng, assignment=None):
        self.assignment = assignment if assignment is not None else self.sample_goals(rng)
        self.assignment.goals.setflags(write=False)
        self.t = 0
        self.done = False
        return self._reset(rng)

    def step(self, actions):
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (self.num_agents,):
            raise ValueError(f"expected {self.num_agents} actions, got shape {actions.shape}")
        if np.any(actions < 0) or np.any(actions >= self.num_actions):
            raise ValueError(f"action out of range: {actions}")
        state, obs, rewards, terminal, info = self._step(actions)
        self.t += 1
        timeout = False
        if not terminal and self.t >= self.horizon:
            terminal = True
            timeout = True
            rewards = rewards + self.timeout_rewards(state)
        rewards = np.asarray(rewards, dtype=np.float64)
        if rewards.shape != (self.num_agents,):
            raise ValueError("game produced the wrong number of rewards")
        self.done = terminal
        return StepResult(state, obs, rewards, terminal, timeout, info)

    def timeout_rewards(self, state):
        return np.zeros(self.num_agents)


def induce_single_agent_mdp(game):
    """Reduce ``game`` to its N = 1 induced MDP (used by curriculum stage 1)."""
    if not game.reducible:
        raise UnsupportedReduction(f"{type(game).__name__} is irreducible")
    single = game.induced_mdp()
    if single.num_agents != 1:
        raise UnsupportedReduction("reduction did not produce a single-agent game")
    return single


def joint_policy_probability(policies, observations, goals, joint_action):
    """Product of per-agent action probabilities.

    ``policies[n]`` is a callable ``(observation, goal) -> probability vector``.
    """
    if not (len(policies) == len(observations) == len(goals) == len(joint_action)):
        raise ValueError("need exactly one policy, observation, goal and action per agent")
    p = 1.0
    for pi, o, g, a in zip(policies, observations, goals, joint_action):
        p *= float(pi(o, g)[a])
        if p == 0.0:
            return 0.0
    return p


def joint_action_table(policies, observations, goals, sizes):
    """Probabilities of every joint action, shape ``sizes``."""
    out = np.empty(sizes)
    for joint in product(*(range(k) for k in sizes)):
        out[joint] = joint_policy_probability(policies, observations, goals, joint)
    return out
