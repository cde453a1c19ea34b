"""Objective and gradient by exhaustive trajectory enumeration.

Independent of the dynamic-programming tables: every trajectory
(s_0, a_0, ..., s_{H-1}, a_{H-1}) is listed with its probability, its
discounted return summed over goals and its accumulated score vector, so

  J      = sum_tau P(tau) G(tau)
  grad J = sum_tau P(tau) G(tau) sum_t grad log pi(a_t | s_t)
"""

import numpy as np

DEFAULT_BOUND = 10**6


class EnumerationBoundExceeded(RuntimeError):
    pass


def trajectory_count(game):
    S, J, H = game.num_states, game.num_joint, game.horizon
    per_goal = S * J**H * S ** (H - 1)
    return per_goal * len(game.goal_assignments())


def exact_objective_and_gradient(game, policy, bound=DEFAULT_BOUND, with_gradient=True):
    count = trajectory_count(game)
    if count > bound:
        raise EnumerationBoundExceeded(f"{count} trajectories exceed the bound {bound}")
    joint = game.joint_actions()
    S, J, H, N = game.num_states, len(joint), game.horizon, game.num_agents
    gamma = game.discount
    total_j = 0.0
    total_g = np.zeros(policy.size)
    for goal_index, p_goal in game.goal_assignments():
        pi = policy.agent_tables(game, goal_index)
        R = game.rewards[:, :, goal_index].sum(axis=2)        # [S, J] summed over goals
        if with_gradient:
            z = policy.score_tables(game, goal_index)         # [M, S, A, P]
            zj = sum(z[m][:, joint[:, m]] for m in range(N))  # [S, J, P]
        pj = np.ones((S, J))
        for m in range(N):
            pj *= pi[m][:, joint[:, m]]

        state = np.arange(S)
        prob = game.initial.copy()
        ret = np.zeros(S)
        score = np.zeros((S, policy.size)) if with_gradient else None
        for t in range(H):
            # branch on the joint action
            k = len(state)
            state_j = np.repeat(state, J)
            act = np.tile(np.arange(J), k)
            prob = np.repeat(prob, J) * pj[state_j, act]
            ret = np.repeat(ret, J) + gamma**t * R[state_j, act]
            if with_gradient:
                score = np.repeat(score, J, axis=0) + zj[state_j, act]
            if t == H - 1:
                break
            # branch on the successor state
            k = len(state_j)
            nxt = np.tile(np.arange(S), k)
            rep_s = np.repeat(state_j, S)
            rep_a = np.repeat(act, S)
            prob = np.repeat(prob, S) * game.transitions[rep_s, rep_a, nxt]
            ret = np.repeat(ret, S)
            if with_gradient:
                score = np.repeat(score, S, axis=0)
            state = nxt
        total_j += p_goal * float(prob @ ret)
        if with_gradient:
            total_g += p_goal * ((prob * ret) @ score)
    return (total_j, total_g) if with_gradient else total_j


def finite_difference_gradient(game, policy, step=1e-5, bound=DEFAULT_BOUND):
    """Central differences of the enumerated objective in every logit."""
    theta = policy.logits.ravel().copy()
    grad = np.empty_like(theta)
    for i in range(len(theta)):
        up, down = theta.copy(), theta.copy()
        up[i] += step
        down[i] -= step
        j_up = exact_objective_and_gradient(game, policy.with_logits(up), bound, with_gradient=False)
        j_down = exact_objective_and_gradient(game, policy.with_logits(down), bound, with_gradient=False)
        grad[i] = (j_up - j_down) / (2 * step)
    return grad
