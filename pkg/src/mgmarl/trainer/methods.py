"""Learners: one training update per minibatch for every method.

Each learner owns its networks, optimisers and target copies. ``update``
fits the critics on a minibatch and then takes one policy-ascent step;
``soft_update`` moves every target towards its main network.
"""

import numpy as np

from .. import gradients as G
from ..critics import CriticPair, evaluate, forward_rows, squared_td_step, td_targets
from ..nn import Adam, Policy, soft_update


def _aug(net, aug):
    return aug if net.stage == 2 else None


class Learner:
    def __init__(self, adapter, policy_net, cfg):
        self.adapter = adapter
        self.cfg = cfg
        self.policy = Policy(policy_net, cfg.eps_start)
        self.target_policy = Policy(policy_net.copy(), cfg.eps_start)
        self.policy_opt = Adam(policy_net, cfg.lr_policy)

    @property
    def eps(self):
        return self.policy.eps

    @eps.setter
    def eps(self, value):
        self.policy.eps = value
        self.target_policy.eps = value

    def act(self, obs, goals, rng, eps=None):
        inputs, aug = self.adapter.policy_inputs(obs.self_parts, obs.others_parts, goals)
        return self.policy.sample(inputs, rng, _aug(self.policy.net, aug), eps)

    def _policy_batch(self, batch):
        inputs, aug = self.adapter.stacked_policy_inputs(batch)
        return inputs, _aug(self.policy.net, aug)

    def _probs(self, batch):
        inputs, aug = self._policy_batch(batch)
        B = len(batch["actions"])
        return self.policy.probs(inputs, aug).reshape(B, self.adapter.N, -1)

    def next_actions(self, batch, rng):
        """a' ~ pi' on the successor observations: [B, N]."""
        inputs, aug = self.adapter.stacked_policy_inputs(batch, prefix="next_")
        B = len(batch["actions"])
        acts = self.target_policy.sample(inputs, rng, _aug(self.target_policy.net, aug))
        return acts.reshape(B, self.adapter.N)

    def soft_update(self):
        soft_update(self.target_policy.net, self.policy.net, self.cfg.tau)

    def networks(self):
        raise NotImplementedError


class Stage1Learner(Learner):
    """Single-agent actor-critic on the induced MDP."""

    def __init__(self, adapter, policy_net, critic_net, cfg):
        super().__init__(adapter, policy_net, cfg)
        self.critics = CriticPair(adapter, critic_net, tau=cfg.tau)
        self.critic_opt = Adam(critic_net, cfg.lr_q)

    def update(self, batch, rng):
        loss = self.critics.global_q_loss(batch, self.next_actions(batch, rng), self.cfg.gamma)
        self.critic_opt.step()
        acts = batch["actions"]
        q = self.critics.global_values_all_actions(batch, acts)[:, 0]
        probs = self._probs(batch)[:, 0]
        inputs, aug = self._policy_batch(batch)
        G.stage1_policy_gradient(self.policy, inputs, acts[:, 0], q, probs, aug)
        self.policy_opt.step(ascent=True)
        return {"q_loss": loss}

    def soft_update(self):
        super().soft_update()
        self.critics.soft_update()

    def networks(self):
        return {"policy": self.policy.net, "critic": self.critics.global_net}


class CreditLearner(Learner):
    """CM3 (credit baseline) and its QV ablation (state-value baseline)."""

    def __init__(self, adapter, policy_net, global_net, credit_net, cfg, advantage="cm3"):
        if advantage not in ("cm3", "qv"):
            raise ValueError(f"unknown advantage {advantage!r}")
        super().__init__(adapter, policy_net, cfg)
        self.advantage = advantage
        self.critics = CriticPair(adapter, global_net, credit_net, tau=cfg.tau)
        self.global_opt = Adam(global_net, cfg.lr_q)
        self.credit_opt = Adam(credit_net, cfg.lr_q)

    def update(self, batch, rng):
        nxt = self.next_actions(batch, rng)
        q_loss = self.critics.global_q_loss(batch, nxt, self.cfg.gamma)
        self.global_opt.step()
        c_loss = self.critics.credit_loss(batch, nxt, self.cfg.gamma)
        self.credit_opt.step()

        acts = batch["actions"]
        probs = self._probs(batch)
        joint_q = self.critics.global_values(batch, acts)
        credit_q = self.critics.credit_values_all_actions(batch, acts)
        inputs, aug = self._policy_batch(batch)
        if self.advantage == "cm3":
            G.cm3_policy_gradient(self.policy, inputs, acts, joint_q, credit_q, probs, aug)
        else:
            values = G.credit_state_values(credit_q, probs).mean(axis=2)
            G.qv_policy_gradient(self.policy, inputs, acts, joint_q, values, aug)
        self.policy_opt.step(ascent=True)
        return {"q_loss": q_loss, "credit_loss": c_loss}

    def soft_update(self):
        super().soft_update()
        self.critics.soft_update()

    def networks(self):
        return {"policy": self.policy.net, "global_critic": self.critics.global_net,
                "credit_critic": self.critics.credit_net}


class IACLearner(Learner):
    """Independent actor-critic: per-agent V(o, g) and a TD-error weight."""

    def __init__(self, adapter, policy_net, value_net, cfg):
        super().__init__(adapter, policy_net, cfg)
        self.value_net = value_net
        self.value_target = value_net.copy()
        self.value_opt = Adam(value_net, cfg.lr_v)

    def _values(self, net, batch, prefix=""):
        B, N = batch["actions"].shape
        b = np.repeat(np.arange(B), N)
        n = np.tile(np.arange(N), B)
        zero = np.zeros_like(b)
        return evaluate(net, self.adapter, batch, b, n, n, zero, batch["actions"], prefix).reshape(B, N)

    def update(self, batch, rng):
        B, N = batch["actions"].shape
        term = batch["terminal"][:, None]
        y = td_targets(batch["rewards"], self._values(self.value_target, batch, "next_"), term, self.cfg.gamma)
        b = np.repeat(np.arange(B), N)
        n = np.tile(np.arange(N), B)
        loss = squared_td_step(self.value_net, self.adapter, batch, b, n, n, np.zeros_like(b),
                               batch["actions"], y.ravel())
        self.value_opt.step()

        td = G.td_advantages(batch["rewards"], self._values(self.value_net, batch),
                             self._values(self.value_net, batch, "next_"), term, self.cfg.gamma)
        inputs, aug = self._policy_batch(batch)
        G.iac_policy_gradient(self.policy, inputs, batch["actions"], td, aug)
        self.policy_opt.step(ascent=True)
        return {"v_loss": loss}

    def soft_update(self):
        super().soft_update()
        soft_update(self.value_target, self.value_net, self.cfg.tau)

    def networks(self):
        return {"policy": self.policy.net, "value": self.value_net}


class COMALearner(Learner):
    """Counterfactual baseline on one critic of the summed reward.

    The critic row for agent n outputs Q(s, (k, a^-n)) for every own action k.
    """

    def __init__(self, adapter, policy_net, critic_net, cfg):
        super().__init__(adapter, policy_net, cfg)
        self.critic_net = critic_net
        self.critic_target = critic_net.copy()
        self.critic_opt = Adam(critic_net, cfg.lr_q)

    def _rows(self, B):
        N = self.adapter.N
        return np.repeat(np.arange(B), N), np.tile(np.arange(N), B)

    def _outputs(self, net, batch, joint_actions, prefix=""):
        b, n = self._rows(len(joint_actions))
        return forward_rows(net, self.adapter, batch, b, n, n, joint_actions[b, n], joint_actions, prefix)

    def update(self, batch, rng):
        acts = batch["actions"]
        B, N = acts.shape
        nxt = self.next_actions(batch, rng)
        b, n = self._rows(B)
        rows = np.arange(B * N)
        q_next = self._outputs(self.critic_target, batch, nxt, "next_")[rows, nxt[b, n]]
        total = batch["rewards"].sum(axis=1)
        y = td_targets(total[b], q_next, batch["terminal"][b], self.cfg.gamma)
        out = self._outputs(self.critic_net, batch, acts)
        err = out[rows, acts[b, n]] - y
        grad = np.zeros_like(out)
        grad[rows, acts[b, n]] = 2.0 * err / len(err)
        self.critic_net.zero_grad()
        self.critic_net.backward(grad)
        self.critic_opt.step()

        q_own = self._outputs(self.critic_net, batch, acts).reshape(B, N, -1)
        probs = self._probs(batch)
        inputs, aug = self._policy_batch(batch)
        G.coma_policy_gradient(self.policy, inputs, acts, q_own, probs, aug)
        self.policy_opt.step(ascent=True)
        return {"q_loss": float(np.mean(err**2))}

    def soft_update(self):
        super().soft_update()
        soft_update(self.critic_target, self.critic_net, self.cfg.tau)

    def networks(self):
        return {"policy": self.policy.net, "coma_critic": self.critic_net}
