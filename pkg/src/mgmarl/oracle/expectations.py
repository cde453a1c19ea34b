"""Exact expectations and variances of the policy-gradient estimators.

An estimator sample is drawn by picking a goal assignment, a time t with
probability proportional to gamma^t, the state s_t under the policy, and a
joint action. Scaling the per-sample gradient by Z = sum_t gamma^t makes its
mean equal to grad J. On an enumerable game every such "atom"
(goal, t, s, a) is listed with its probability, so mean and variance are
exact. Advantages come from :mod:`mgmarl.gradients` fed with exact tables.
"""

import numpy as np

from .. import gradients as G
from ..nn.policy import action_distribution
from .tabular import solve_tabular

ESTIMATORS = ("cm3", "qv", "coma", "iac", "stage1")


def _check(estimator, game):
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator in ("iac", "stage1") and game.num_agents != 1:
        raise ValueError(f"{estimator} is defined for single-agent games")


def _replace_index(game):
    """rep[j, m, k]: joint index of j with agent m's action replaced by k."""
    joint = game.joint_actions()
    J, N, A = len(joint), game.num_agents, game.num_actions
    rep = np.empty((J, N, A), dtype=np.int64)
    for j in range(J):
        for m in range(N):
            for k in range(A):
                a = joint[j].copy()
                a[m] = k
                rep[j, m, k] = game.joint_index(a)
    return rep


def atom_terms(sol, policy, estimator, t, s, j):
    """Per-atom gradient pieces for atoms (t[i], s[i], j[i]).

    Returns ``[B, N, M, P]`` for cm3/qv (goal n, agent m) and ``[B, M, P]``
    for coma/stage1 (one counterfactual term per agent), unscaled by Z.
    """
    game = sol.game
    joint = game.joint_actions()
    actions = joint[j]                                                  # [B, M]
    probs = np.transpose(sol.pi_agent[:, s], (1, 0, 2))                 # [B, M, A]
    z = policy.score_tables(game, sol.goal_index)                       # [M, S, A, P]
    M = game.num_agents
    zb = np.stack([z[m, s, actions[:, m]] for m in range(M)], axis=1)   # [B, M, P]
    joint_q = sol.Q[t, s, j]                                            # [B, N]
    if estimator in ("cm3", "qv"):
        credit_q = sol.credit[t, :, :, s]                               # [B, N, M, A]
        if estimator == "cm3":
            adv = G.cm3_advantages(joint_q, credit_q, probs)
        else:
            values = G.credit_state_values(credit_q, probs).mean(axis=2)
            adv = G.qv_advantages(joint_q, values, M)
        return adv[..., None] * zb[:, None]
    if estimator == "coma":
        rep = _replace_index(game)[j]                                   # [B, M, A]
        total = sol.Q.sum(axis=3)                                       # [H, S, J]
        q_own = total[t[:, None, None], s[:, None, None], rep]
        adv = G.coma_advantages(q_own, probs, actions)
        return adv[..., None] * zb
    if estimator == "stage1":
        adv = G.stage1_advantages(sol.Q[t, s, :, 0], probs[:, 0], actions[:, 0])
        return adv[:, None, None] * zb
    raise ValueError(estimator)


def _atoms(sol):
    H, S, J = sol.Q.shape[:3]
    gamma = sol.game.discount
    t, s, j = (a.ravel() for a in np.meshgrid(np.arange(H), np.arange(S), np.arange(J), indexing="ij"))
    prob = gamma**t * sol.occupancy[t, s] * sol.pi_joint[s, j]
    return t, s, j, prob


def _iac_expectation(sol, policy):
    """TD-weighted score, enumerating the successor state too."""
    game = sol.game
    t, s, j, prob = _atoms(sol)
    X = game.num_states
    H = sol.horizon
    tt, ss, jj = (np.repeat(a, X) for a in (t, s, j))
    xx = np.tile(np.arange(X), len(t))
    p = np.repeat(prob, X) * game.transitions[ss, jj, xx]
    r = game.rewards[ss, jj, sol.goal_index[0]]
    terminal = tt == H - 1
    next_v = sol.V[np.minimum(tt + 1, H), xx, 0]
    td = G.td_advantages(r, sol.V[tt, ss, 0], next_v, terminal, game.discount)
    z = policy.score_tables(game, sol.goal_index)[0]
    acts = game.joint_actions()[jj, 0]
    return (p * td) @ z[ss, acts]


def expected_gradient(game, policy, estimator):
    """Exact E[estimator], summed over goal assignments."""
    _check(estimator, game)
    total = np.zeros(policy.size)
    for goal_index, p_goal in game.goal_assignments():
        sol = solve_tabular(game, policy, goal_index)
        if estimator == "iac":
            total += p_goal * _iac_expectation(sol, policy)
            continue
        t, s, j, prob = _atoms(sol)
        terms = atom_terms(sol, policy, estimator, t, s, j)
        flat = terms.reshape(len(t), -1, policy.size).sum(axis=1)
        total += p_goal * (prob @ flat)
    return total


def baseline_zero_mean(game, policy):
    """max |E[grad log pi^m(a^m) * b_m]| over agents, goals and parameters.

    Covers the credit baseline sum_k pi^m(k) Q_n(s, a^m = k) for every goal
    n and the global counterfactual baseline sum_k pi^m(k) Q(s, (k, a^-m)).
    """
    worst = 0.0
    rep = _replace_index(game)
    joint = game.joint_actions()
    for goal_index, p_goal in game.goal_assignments():
        sol = solve_tabular(game, policy, goal_index)
        t, s, j, prob = _atoms(sol)
        probs = np.transpose(sol.pi_agent[:, s], (1, 0, 2))
        z = policy.score_tables(game, goal_index)
        credit_q = sol.credit[t, :, :, s]
        total = sol.Q.sum(axis=3)
        q_own = total[t[:, None, None], s[:, None, None], rep[j]]
        for m in range(game.num_agents):
            zm = z[m, s, joint[j, m]]                                   # [B, P]
            for n in range(game.num_agents):
                b = G.counterfactual_baseline(credit_q[:, n, m], probs[:, m])
                worst = max(worst, float(np.max(np.abs(p_goal * (prob * b) @ zm))))
            b = G.counterfactual_baseline(q_own[:, m], probs[:, m])
            worst = max(worst, float(np.max(np.abs(p_goal * (prob * b) @ zm))))
    return worst


def _all_atoms(game, policy, estimator):
    """Normalised atom probabilities and Z-scaled terms over all goal assignments."""
    Z = sum(game.discount**t for t in range(game.horizon))
    probs, terms, keys = [], [], []
    for goal_index, p_goal in game.goal_assignments():
        sol = solve_tabular(game, policy, goal_index)
        t, s, j, prob = _atoms(sol)
        probs.append(p_goal * prob / Z)
        terms.append(Z * atom_terms(sol, policy, estimator, t, s, j))
        keys.append((tuple(goal_index), t, s, j))
    return np.concatenate(probs), np.concatenate(terms), keys


def _vec_var(p, x):
    mean = p @ x
    return float(p @ (x * x).sum(axis=1) - mean @ mean)


def _cov(p, x, y):
    return float(p @ (x * y).sum(axis=1) - (p @ x) @ (p @ y))


def exact_variance(game, policy, estimator):
    """Closed-form vector variance (covariance trace) with its term breakdown.

    COMA, per agent n with f_n = z_n (Q - b_n):
      sum_n E[z_n.z_n (Q - b_n)^2] + sum_{n != m} E[z_n.z_m (Q - b_n)(Q - b_m)] - |E sum_n f_n|^2
    CM3, with h_nm = z_m A_nm and h_n = sum_m h_nm:
      sum_n [sum_m Var(h_nm) + sum_{m != k} Cov(h_nm, h_nk)] + sum_{n != m} Cov(h_n, h_m)
    """
    if estimator not in ("cm3", "coma", "qv"):
        raise ValueError("closed-form variance is defined for cm3, coma and qv")
    p, terms, _ = _all_atoms(game, policy, estimator)
    if estimator == "coma":
        f = terms                                                       # [B, M, P]
        M = f.shape[1]
        diag = sum(float(p @ (f[:, n] * f[:, n]).sum(axis=1)) for n in range(M))
        cross = sum(float(p @ (f[:, n] * f[:, m]).sum(axis=1))
                    for n in range(M) for m in range(M) if m != n)
        mean = p @ f.sum(axis=1)
        sq_mean = float(mean @ mean)
        return {"variance": diag + cross - sq_mean,
                "terms": {"second_moment_diag": diag, "second_moment_cross": cross, "squared_mean": sq_mean},
                "mean": mean}
    h = terms                                                           # [B, N, M, P]
    N, M = h.shape[1], h.shape[2]
    within_var = sum(_vec_var(p, h[:, n, m]) for n in range(N) for m in range(M))
    within_cov = sum(_cov(p, h[:, n, m], h[:, n, k])
                     for n in range(N) for m in range(M) for k in range(M) if k != m)
    hn = h.sum(axis=2)
    across_cov = sum(_cov(p, hn[:, n], hn[:, m]) for n in range(N) for m in range(N) if m != n)
    return {"variance": within_var + within_cov + across_cov,
            "terms": {"pair_variance": within_var, "pair_covariance": within_cov, "goal_covariance": across_cov},
            "mean": p @ h.sum(axis=(1, 2))}


def sample_estimator(game, policy, estimator, num_samples, rng):
    """Monte-Carlo draws of the Z-scaled estimator by forward simulation.

    Each draw samples a goal assignment, a time t with probability
    proportional to gamma^t, rolls the tabular policy and the transition
    kernel forward t steps, then samples the joint action at s_t. All draws
    advance in lockstep.
    """
    _check(estimator, game)
    H, gamma = game.horizon, game.discount
    w = gamma ** np.arange(H)
    Z = w.sum()
    M = game.num_agents
    ts = rng.choice(H, size=num_samples, p=w / Z)
    goals = rng.choice(game.num_goals, size=(num_samples, M), p=game.goal_probs)
    states = _draw(rng, np.broadcast_to(game.initial, (num_samples, game.num_states)))
    def joint_actions(states):
        acts = np.empty((num_samples, M), dtype=np.int64)
        for m in range(M):
            p = action_table(policy)[game.observe[m, states], goals[:, m]]
            acts[:, m] = _draw(rng, p)
        return np.ravel_multi_index(tuple(acts.T), game.action_sizes)

    for step in range(H):
        j = joint_actions(states)
        moving = ts > step
        if not moving.any():
            break
        nxt = _draw(rng, game.transitions[states, j])
        states = np.where(moving, nxt, states)
    j = joint_actions(states)

    out = np.zeros((num_samples, policy.size))
    keys, inverse = np.unique(goals, axis=0, return_inverse=True)
    for g, goal_index in enumerate(keys):
        idx = np.flatnonzero(inverse.ravel() == g)
        sol = solve_tabular(game, policy, goal_index)
        terms = atom_terms(sol, policy, estimator, ts[idx], states[idx], j[idx])
        out[idx] = Z * terms.reshape(len(idx), -1, policy.size).sum(axis=1)
    return out


def action_table(policy):
    """pi[o, g, k] for every observation and goal."""
    return action_distribution(policy.logits, policy.eps)


def _draw(rng, probs):
    """One categorical draw per row of ``probs``."""
    u = rng.random((probs.shape[0], 1))
    return np.minimum((np.cumsum(probs, axis=1) < u).sum(axis=1), probs.shape[1] - 1)
