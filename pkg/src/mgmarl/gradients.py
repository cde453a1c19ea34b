"""Policy-gradient estimators and their advantages.

Array conventions (B = batch, N = goals/agents, M = acting agents, A = actions):

  joint_q   [B, N]        Q_n(s, a) for the executed joint action
  credit_q  [B, N, M, A]  Q_n(s, a^m = k) for every action k of agent m
  probs     [B, M, A]     executed (eps-floored) policy of agent m
  actions   [B, M]

Advantages feed :func:`score_weights`, which collapses them into one weight
per (sample, agent). A policy gradient is then sum over agents of
``weight * grad log pi^m(a^m)``, which :func:`policy_gradient` evaluates for a
parameter-shared network by stacking agents on the batch axis.
"""

import numpy as np


def counterfactual_baseline(q_alternatives, probs):
    """sum_k pi(k) q(k) over the last axis."""
    return np.sum(probs * q_alternatives, axis=-1)


def cm3_advantages(joint_q, credit_q, probs):
    """A[b, n, m] = Q_n(s, a) - sum_k pi^m(k) Q_n(s, a^m = k)."""
    baseline = np.einsum("bma,bnma->bnm", probs, credit_q)
    return joint_q[:, :, None] - baseline


def credit_state_values(credit_q, probs):
    """V_n(s) recovered from the credit function through each agent m: [B, N, M]."""
    return np.einsum("bma,bnma->bnm", probs, credit_q)


def qv_advantages(joint_q, values, num_agents):
    """A[b, n, m] = Q_n(s, a) - V_n(s), identical for every agent m."""
    adv = joint_q - values
    return np.repeat(adv[:, :, None], num_agents, axis=2)


def coma_advantages(q_own, probs, actions):
    """A[b, m] = Q(s, a) - sum_k pi^m(k) Q(s, (k, a^-m)).

    ``q_own[b, m, k]`` is the global critic's value with agent m's action
    replaced by k and everyone else's kept.
    """
    rows = np.arange(q_own.shape[0])[:, None]
    cols = np.arange(q_own.shape[1])[None, :]
    return q_own[rows, cols, actions] - counterfactual_baseline(q_own, probs)


def stage1_advantages(q_values, probs, actions):
    """Single-agent counterfactual-average advantage: Q(s, a) - sum_k pi(k) Q(s, k)."""
    rows = np.arange(q_values.shape[0])
    return q_values[rows, actions] - counterfactual_baseline(q_values, probs)


def td_advantages(rewards, values, next_values, terminal, gamma):
    """One-step TD error; terminal transitions bootstrap from zero."""
    cont = 1.0 - np.asarray(terminal, dtype=np.float64)
    return rewards + gamma * cont * next_values - values


def score_weights(advantages, mask=None):
    """Collapse [B, N, M] advantages into per-agent weights [B, M].

    ``mask[n, m]`` drops the (goal n, agent m) pair; by default every pair
    contributes.
    """
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != advantages.shape[1:]:
            raise ValueError(f"mask must have shape {advantages.shape[1:]}")
        advantages = advantages * mask
    return advantages.sum(axis=1)


def policy_gradient(policy, inputs, actions, weights, aug=None):
    """Minibatch-mean of sum_m weights * grad log pi(a^m), into ``policy.net``.

    ``inputs``, ``aug``, ``actions`` and ``weights`` are stacked over
    (sample, agent) on the leading axis. Returns the ascent direction as a
    name -> array dict (the net's grads hold the same values).
    """
    weights = np.asarray(weights, dtype=np.float64).ravel()
    actions = np.asarray(actions, dtype=np.int64).ravel()
    if len(weights) == 0:
        raise ValueError("empty minibatch")
    policy.score_gradient(inputs, actions, weights / len(weights), aug)
    return {k: v.copy() for k, v in policy.net.gradients().items()}


def cm3_policy_gradient(policy, inputs, actions, joint_q, credit_q, probs, aug=None, mask=None):
    """Credit-assignment gradient for a batch of B states and M agents.

    The minibatch mean is taken over states, so the per-state double sum over
    (n, m) is preserved.
    """
    w = score_weights(cm3_advantages(joint_q, credit_q, probs), mask)
    return _per_state_gradient(policy, inputs, actions, w, aug)


def qv_policy_gradient(policy, inputs, actions, joint_q, values, aug=None, mask=None):
    w = score_weights(qv_advantages(joint_q, values, actions.shape[1]), mask)
    return _per_state_gradient(policy, inputs, actions, w, aug)


def coma_policy_gradient(policy, inputs, actions, q_own, probs, aug=None):
    w = coma_advantages(q_own, probs, actions)
    return _per_state_gradient(policy, inputs, actions, w, aug)


def iac_policy_gradient(policy, inputs, actions, td_errors, aug=None):
    return _per_state_gradient(policy, inputs, actions, td_errors, aug)


def stage1_policy_gradient(policy, inputs, actions, q_values, probs, aug=None):
    w = stage1_advantages(q_values, probs, actions)
    return _per_state_gradient(policy, inputs, actions[:, None], w[:, None], aug)


def _per_state_gradient(policy, inputs, actions, weights, aug):
    # stacked rows are (state, agent); scaling by M turns the row mean into a state mean
    weights = np.asarray(weights, dtype=np.float64)
    return policy_gradient(policy, inputs, actions, weights * weights.shape[1], aug)


def variance_probe(samples):
    """Monte-Carlo moments of a vector-valued estimator.

    ``samples`` is [S, ...]; each sample is flattened to a vector. Returns
    the empirical mean, the covariance trace (the vector variance) and the
    standard error of that trace.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("variance_probe needs at least one sample")
    x = x.reshape(x.shape[0], -1)
    mean = x.mean(axis=0)
    sq = ((x - mean) ** 2).sum(axis=1)
    n = x.shape[0]
    var = sq.sum() / max(n - 1, 1)
    se = sq.std(ddof=1) / np.sqrt(n) if n > 1 else np.inf
    return {"mean": mean, "variance": float(var), "stderr": float(se), "num_samples": n}
