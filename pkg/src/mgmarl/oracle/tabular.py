"""Exact policy evaluation on enumerable games.

All tables are time-indexed because toy games have a fixed horizon H:

  V[t, s, n]            value of goal n, t = 0..H (V[H] = 0)
  Q[t, s, j, n]         joint action-value for flattened joint action j
  credit[t, n, m, s, k] credit of agent m's action k toward goal n

The joint tables come from the usual backward recursion. The credit tables
come from their own recursion, which bootstraps through agent m's next
action only, so agreement between the two is a genuine check.
"""

from dataclasses import dataclass, field

import numpy as np

from ..nn.policy import action_distribution, logprob_grad_logits


class TabularPolicy:
    """Shared softmax table over (observation, goal, action) with an eps floor."""

    def __init__(self, logits, eps=0.0):
        self.logits = np.asarray(logits, dtype=np.float64)
        self.eps = float(eps)

    @classmethod
    def random(cls, game, rng, scale=1.0, eps=0.0):
        return cls(rng.normal(0.0, scale, (game.num_obs, game.num_goals, game.num_actions)), eps)

    @property
    def size(self):
        return self.logits.size

    def with_logits(self, flat):
        return TabularPolicy(np.asarray(flat).reshape(self.logits.shape), self.eps)

    def probs(self, obs, goal):
        return action_distribution(self.logits[obs, goal], self.eps)

    def agent_tables(self, game, goal_index):
        """pi[m, s, k] for every agent and state."""
        obs = game.observe
        out = np.empty((game.num_agents, game.num_states, game.num_actions))
        for m in range(game.num_agents):
            out[m] = action_distribution(self.logits[obs[m], goal_index[m]], self.eps)
        return out

    def score(self, game, goal_index, agent, state, action):
        """grad_theta log pi^m(action | o^m(s), g^m), flattened."""
        o = game.observe[agent, state]
        g = goal_index[agent]
        z = np.zeros_like(self.logits)
        z[o, g] = logprob_grad_logits(self.logits[o, g][None], np.array([action]), np.ones(1), self.eps)[0]
        return z.ravel()

    def score_tables(self, game, goal_index):
        """z[m, s, k, :] = flattened score of agent m taking k in s."""
        P = self.size
        out = np.zeros((game.num_agents, game.num_states, game.num_actions, P))
        for m in range(game.num_agents):
            for s in range(game.num_states):
                for k in range(game.num_actions):
                    out[m, s, k] = self.score(game, goal_index, m, s, k)
        return out


def joint_probabilities(game, pi_agent):
    """pi(a | s) for every flattened joint action: [S, J]."""
    joint = game.joint_actions()
    out = np.ones((game.num_states, len(joint)))
    for m in range(game.num_agents):
        out *= pi_agent[m][:, joint[:, m]]
    return out


@dataclass
class TabularSolution:
    game: object
    goal_index: np.ndarray
    pi_agent: np.ndarray          # [M, S, A]
    pi_joint: np.ndarray          # [S, J]
    V: np.ndarray                 # [H + 1, S, N]
    Q: np.ndarray                 # [H, S, J, N]
    credit: np.ndarray            # [H, N, M, S, A]
    occupancy: np.ndarray = field(default=None)  # [H, S] state distribution at t

    @property
    def horizon(self):
        return self.Q.shape[0]

    def rewards(self):
        """R[s, j, n] under this goal assignment."""
        return self.game.rewards[:, :, self.goal_index]

    def objective(self):
        """Expected discounted return summed over goals, from the initial distribution."""
        return float(self.game.initial @ self.V[0].sum(axis=1))


def solve_tabular(game, policy, goal_index):
    """Evaluate ``policy`` exactly on ``game`` for one goal assignment."""
    if not np.allclose(game.transitions.sum(-1), 1.0, atol=1e-12):
        raise ValueError("transition rows must sum to one")
    goal_index = np.asarray(goal_index)
    H, S, N = game.horizon, game.num_states, game.num_agents
    A = game.num_actions
    joint = game.joint_actions()
    J = len(joint)
    gamma = game.discount
    P = game.transitions
    R = game.rewards[:, :, goal_index]                       # [S, J, N]
    pi = policy.agent_tables(game, goal_index)
    pj = joint_probabilities(game, pi)

    V = np.zeros((H + 1, S, N))
    Q = np.zeros((H, S, J, N))
    for t in range(H - 1, -1, -1):
        Q[t] = R + gamma * np.einsum("sjx,xn->sjn", P, V[t + 1])
        V[t] = np.einsum("sj,sjn->sn", pj, Q[t])

    credit = np.zeros((H, N, N, S, A))
    for t in range(H - 1, -1, -1):
        for m in range(N):
            # tail[s', n] = sum_k pi^m(k | s') credit[t+1, n, m, s', k]
            if t + 1 < H:
                tail = np.einsum("xk,nxk->xn", pi[m], credit[t + 1, :, m])
            else:
                tail = np.zeros((S, N))
            backup = R + gamma * np.einsum("sjx,xn->sjn", P, tail)   # [S, J, N]
            others = pj / np.maximum(pi[m][:, joint[:, m]], 1e-300)    # pi(a^-m | s)
            for k in range(A):
                sel = joint[:, m] == k
                credit[t, :, m, :, k] = np.einsum("sj,sjn->ns", others[:, sel], backup[:, sel])

    occ = np.zeros((H, S))
    occ[0] = game.initial
    for t in range(1, H):
        occ[t] = np.einsum("s,sj,sjx->x", occ[t - 1], pj, P)
    return TabularSolution(game, goal_index, pi, pj, V, Q, credit, occ)


def check_identities(sol, tol=1e-10):
    """Maximum absolute residual of each value relation, with pass flags.

    credit_bellman   credit equals its own one-step backup
    credit_marginal  V_n(s) = sum_k pi^m(k) credit_n(s, a^m = k), every m
    joint_marginal   V_n(s) = sum_a pi(a | s) Q_n(s, a)
    joint_bellman    Q_n(s, a) = R_n(s, a) + gamma sum_s' P(s' | s, a) V_n(s')
    credit_joint     credit_n(s, a^m) = sum_{a^-m} pi(a^-m | s) Q_n(s, a)
    """
    game = sol.game
    H, N = sol.horizon, game.num_agents
    joint = game.joint_actions()
    gamma, P = game.discount, game.transitions
    R = sol.rewards()
    pi, pj = sol.pi_agent, sol.pi_joint
    res = dict.fromkeys(
        ("credit_bellman", "credit_marginal", "joint_marginal", "joint_bellman", "credit_joint"), 0.0)

    def bump(key, value):
        res[key] = max(res[key], float(np.max(np.abs(value))))

    for t in range(H):
        bump("joint_bellman", sol.Q[t] - R - gamma * np.einsum("sjx,xn->sjn", P, sol.V[t + 1]))
        bump("joint_marginal", sol.V[t] - np.einsum("sj,sjn->sn", pj, sol.Q[t]))
        for m in range(N):
            onehot = np.eye(game.num_actions)[joint[:, m]]                    # [J, A]
            others = pj / pi[m][:, joint[:, m]]
            via_credit = np.einsum("sk,nsk->sn", pi[m], sol.credit[t, :, m])
            bump("credit_marginal", sol.V[t] - via_credit)
            via_joint = np.einsum("sj,jk,sjn->nsk", others, onehot, sol.Q[t])
            bump("credit_joint", sol.credit[t, :, m] - via_joint)
            tail = (np.einsum("xk,nxk->xn", pi[m], sol.credit[t + 1, :, m])
                    if t + 1 < H else np.zeros_like(sol.V[0]))
            backup = R + gamma * np.einsum("sjx,xn->sjn", P, tail)
            bump("credit_bellman", sol.credit[t, :, m] - np.einsum("sj,jk,sjn->nsk", others, onehot, backup))
    return {
        "residuals": res,
        "passed": {k: v <= tol for k, v in res.items()},
        "ok": all(v <= tol for v in res.values()),
    }
