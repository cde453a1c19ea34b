"""Softmax policy heads with a uniform exploration floor."""

import numpy as np


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def action_distribution(logits, eps):
    """(1 - eps) * softmax(logits) + eps / |A|, row-wise."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"exploration eps must be in [0, 1], got {eps}")
    n = logits.shape[-1]
    return (1.0 - eps) * softmax(logits) + eps / n


def logprob_grad_logits(logits, actions, weights, eps):
    """d/dlogits of sum_i weights[i] * log p(actions[i] | logits[i]).

    For p = (1 - eps) s + eps / n with s = softmax(logits):
    d log p_a / d z_j = (1 - eps) s_a (delta_aj - s_j) / p_a.
    """
    s = softmax(logits)
    rows = np.arange(len(actions))
    s_a = s[rows, actions]
    p_a = (1.0 - eps) * s_a + eps / logits.shape[-1]
    coef = weights * (1.0 - eps) * s_a / p_a
    grad = -coef[:, None] * s
    grad[rows, actions] += coef
    return grad


class Policy:
    """A network producing action logits, executed with an eps floor.

    The same ``net`` is shared by all homogeneous agents; callers stack the
    agents along the batch axis.
    """

    def __init__(self, net, eps=0.0):
        self.net = net
        self.eps = eps

    def probs(self, inputs, aug=None, eps=None):
        eps = self.eps if eps is None else eps
        return action_distribution(self.net.forward(inputs, aug), eps)

    def sample(self, inputs, rng, aug=None, eps=None):
        p = self.probs(inputs, aug, eps)
        u = rng.random((p.shape[0], 1))
        return np.minimum((p.cumsum(axis=1) < u).sum(axis=1), p.shape[1] - 1)

    def score_gradient(self, inputs, actions, weights, aug=None, eps=None):
        """Accumulate sum_i weights[i] * grad log pi(actions[i]) into net grads.

        Returns the action probabilities computed on the way.
        """
        eps = self.eps if eps is None else eps
        logits = self.net.forward(inputs, aug)
        self.net.zero_grad()
        self.net.backward(logprob_grad_logits(logits, actions, weights, eps))
        return action_distribution(logits, eps)
