"""Per-goal critics and the input wiring shared by every network.

Rows fed to a critic are indexed by (sample b, goal n, actor m, action k).
Keys produced by :class:`InputAdapter`:

  main (available in stage 1)      side (stage 2 only)
  ---------------------------      -------------------
  state_env[.part]  s_env          state_actor     s^m
  state_self        s^n            state_others    s^-n
  obs_self[.part]   o^n_self       state_all       every s^j
  goal              g^n            goals_others    g^-n
  action            a^m one-hot    actions_others  a^-n one-hot
                                   label           one-hot of n
                                   obs_others      o^n_others

The global critic uses actor m = n. The credit critic evaluates agent m's
action for goal n.
"""

import numpy as np

from .nn.net import soft_update as _soft_update


class InputAdapter:
    def __init__(self, layout, num_agents, num_actions):
        self.layout = layout
        self.N = num_agents
        self.A = num_actions
        self.state_env_parts = layout.get("state_env_parts")
        self.obs_self_parts = layout.get("obs_self_parts")
        self.others = np.array([[j for j in range(num_agents) if j != n] for n in range(num_agents)],
                               dtype=np.int64).reshape(num_agents, num_agents - 1)
        d_agent = int(np.prod(layout["state_agent"]))
        d_goal = int(np.prod(layout["goal"]))
        shapes = {
            "state_self": (d_agent,),
            "state_actor": (d_agent,),
            "state_others": ((num_agents - 1) * d_agent,),
            "state_all": (num_agents * d_agent,),
            "goal": (d_goal,),
            "goals_others": ((num_agents - 1) * d_goal,),
            "action": (num_actions,),
            "actions_others": ((num_agents - 1) * num_actions,),
            "label": (num_agents,),
            "obs_others": tuple(layout["obs_others"]),
        }
        shapes.update(self._split_shapes("state_env", layout["state_env"], self.state_env_parts))
        shapes.update(self._split_shapes("obs_self", layout["obs_self"], self.obs_self_parts))
        self.shapes = shapes

    @staticmethod
    def _split_shapes(key, shape, parts):
        if parts is None:
            return {key: tuple(shape)}
        return {f"{key}.{name}": tuple(s) for name, s in parts}

    @staticmethod
    def _split(key, flat, parts):
        if parts is None:
            return {key: flat}
        out, start = {}, 0
        for name, shape in parts:
            size = int(np.prod(shape))
            out[f"{key}.{name}"] = flat[:, start:start + size].reshape((len(flat),) + tuple(shape))
            start += size
        return out

    def onehot(self, actions):
        return np.eye(self.A)[actions]

    # -- policies ----------------------------------------------------------

    def policy_inputs(self, obs_self, obs_others, goals):
        """Inputs for rows that are already flattened over (sample, agent)."""
        inputs = self._split("obs_self", obs_self, self.obs_self_parts)
        inputs["goal"] = goals
        return inputs, {"obs_others": obs_others}

    def stacked_policy_inputs(self, batch, prefix=""):
        B = len(batch[prefix + "agents"])
        obs_self = batch[prefix + "obs_self"].reshape(B * self.N, -1)
        obs_others = batch[prefix + "obs_others"].reshape((B * self.N,) + self.shapes["obs_others"])
        goals = batch["goals"].reshape(B * self.N, -1)
        return self.policy_inputs(obs_self, obs_others, goals)

    # -- critics -----------------------------------------------------------

    def critic_inputs(self, batch, b, n, m, act, joint_actions, keys, prefix=""):
        """Build the requested ``keys`` for rows (b[i], n[i], m[i], act[i]).

        ``joint_actions`` [B, N] supplies a^-n. ``prefix`` selects the
        ``next_`` arrays of a batch.
        """
        env = batch[prefix + "state_env"]
        agents = batch[prefix + "agents"]
        out = {}
        wanted = set(keys)
        if any(k.startswith("state_env") for k in wanted):
            out.update(self._split("state_env", env[b], self.state_env_parts))
        if any(k.startswith("obs_self") for k in wanted):
            out.update(self._split("obs_self", batch[prefix + "obs_self"][b, n], self.obs_self_parts))
        goals = batch["goals"]
        others = self.others[n]
        R = len(b)
        builders = {
            "state_self": lambda: agents[b, n],
            "state_actor": lambda: agents[b, m],
            "state_others": lambda: agents[b[:, None], others].reshape(R, -1),
            "state_all": lambda: agents[b].reshape(R, -1),
            "goal": lambda: goals[b, n],
            "goals_others": lambda: goals[b[:, None], others].reshape(R, -1),
            "action": lambda: self.onehot(act),
            "actions_others": lambda: self.onehot(joint_actions[b[:, None], others]).reshape(R, -1),
            "label": lambda: np.eye(self.N)[n],
            "obs_others": lambda: batch[prefix + "obs_others"][b, n],
        }
        for key in wanted:
            if key in builders:
                out[key] = builders[key]()
        return out


def _net_keys(net):
    return list(net.main_keys) + list(net.side_keys)


def _split_main_side(net, inputs):
    main = {k: inputs[k] for k in net.main_keys}
    aug = {k: inputs[k] for k in net.side_keys} if net.stage == 2 else None
    return main, aug


def forward_rows(net, adapter, batch, b, n, m, act, joint_actions, prefix=""):
    """Full network output for critic rows (b, n, m, act)."""
    inputs = adapter.critic_inputs(batch, b, n, m, act, joint_actions, _net_keys(net), prefix)
    main, aug = _split_main_side(net, inputs)
    return net.forward(main, aug)


def evaluate(net, adapter, batch, b, n, m, act, joint_actions, prefix=""):
    return forward_rows(net, adapter, batch, b, n, m, act, joint_actions, prefix)[:, 0]


def squared_td_step(net, adapter, batch, b, n, m, act, joint_actions, targets):
    """Forward, accumulate grad of mean (Q - y)^2 into ``net``; return the loss."""
    inputs = adapter.critic_inputs(batch, b, n, m, act, joint_actions, _net_keys(net))
    main, aug = _split_main_side(net, inputs)
    q = net.forward(main, aug)[:, 0]
    err = q - targets
    net.zero_grad()
    net.backward((2.0 * err / len(err))[:, None])
    return float(np.mean(err**2))


def td_targets(rewards, next_values, terminal, gamma):
    return rewards + gamma * (1.0 - terminal) * next_values


class CriticPair:
    """Global critic Q_n(s, a), credit critic Q_n(s, a^m) and their targets.

    In stage 1 only ``global_net`` exists (it is the single-agent Q).
    """

    def __init__(self, adapter, global_net, credit_net=None, tau=0.01):
        if not 0.0 < tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {tau}")
        self.adapter = adapter
        self.global_net = global_net
        self.credit_net = credit_net
        self.global_target = global_net.copy()
        self.credit_target = credit_net.copy() if credit_net is not None else None
        self.tau = tau

    @property
    def N(self):
        return self.adapter.N

    # -- index helpers -----------------------------------------------------

    def _global_rows(self, B):
        b = np.repeat(np.arange(B), self.N)
        n = np.tile(np.arange(self.N), B)
        return b, n

    def _credit_rows(self, B):
        N = self.N
        b = np.repeat(np.arange(B), N * N)
        n = np.tile(np.repeat(np.arange(N), N), B)
        m = np.tile(np.arange(N), B * N)
        return b, n, m

    # -- values ------------------------------------------------------------

    def global_values(self, batch, joint_actions, target=False, prefix=""):
        """Q_n(s, a) for every sample and goal: [B, N]."""
        B = len(joint_actions)
        b, n = self._global_rows(B)
        net = self.global_target if target else self.global_net
        q = evaluate(net, self.adapter, batch, b, n, n, joint_actions[b, n], joint_actions, prefix)
        return q.reshape(B, self.N)

    def global_values_all_actions(self, batch, joint_actions, target=False):
        """Q_n(s, (k, a^-n)) for every own action k: [B, N, A] (stage-1 baselines)."""
        B, N, A = len(joint_actions), self.N, self.adapter.A
        b = np.repeat(np.arange(B), N * A)
        n = np.tile(np.repeat(np.arange(N), A), B)
        k = np.tile(np.arange(A), B * N)
        net = self.global_target if target else self.global_net
        return evaluate(net, self.adapter, batch, b, n, n, k, joint_actions).reshape(B, N, A)

    def credit_values(self, batch, actions, joint_actions, target=False, prefix=""):
        """Q_n(s, a^m) with a^m = actions[b, m]: [B, N, M]."""
        B = len(actions)
        b, n, m = self._credit_rows(B)
        net = self.credit_target if target else self.credit_net
        q = evaluate(net, self.adapter, batch, b, n, m, actions[b, m], joint_actions, prefix)
        return q.reshape(B, self.N, self.N)

    def credit_values_all_actions(self, batch, joint_actions):
        """Q_n(s, a^m = k) for every k: [B, N, M, A]."""
        B, N, A = len(joint_actions), self.N, self.adapter.A
        b, n, m = self._credit_rows(B)
        b, n, m = (np.repeat(x, A) for x in (b, n, m))
        k = np.tile(np.arange(A), B * N * N)
        q = evaluate(self.credit_net, self.adapter, batch, b, n, m, k, joint_actions)
        return q.reshape(B, N, N, A)

    def credit_value(self, batch, sample, actor, action, goal_index):
        """Single credit estimate Q_n(s, a^m) for one stored sample."""
        if not (0 <= actor < self.N and 0 <= goal_index < self.N):
            raise IndexError("actor and goal index must be in [0, N)")
        if not 0 <= action < self.adapter.A:
            raise IndexError("action out of range")
        one = np.array([sample])
        q = evaluate(self.credit_net, self.adapter, batch, one, np.array([goal_index]),
                     np.array([actor]), np.array([action]), batch["actions"])
        return float(q[0])

    # -- losses ------------------------------------------------------------

    def global_q_loss(self, batch, next_actions, gamma):
        """Mean over (sample, goal) of squared TD error; grads left in global_net."""
        B = len(next_actions)
        if B == 0:
            raise ValueError("empty minibatch")
        nxt = self.global_values(batch, next_actions, target=True, prefix="next_")
        y = td_targets(batch["rewards"], nxt, batch["terminal"][:, None], gamma)
        b, n = self._global_rows(B)
        acts = batch["actions"]
        return squared_td_step(self.global_net, self.adapter, batch, b, n, n, acts[b, n], acts, y.ravel())

    def credit_loss(self, batch, next_actions, gamma):
        """Mean over (sample, goal, actor) of squared TD error; grads in credit_net."""
        B = len(next_actions)
        if B == 0:
            raise ValueError("empty minibatch")
        nxt = self.credit_values(batch, next_actions, next_actions, target=True, prefix="next_")
        y = td_targets(batch["rewards"][:, :, None], nxt, batch["terminal"][:, None, None], gamma)
        b, n, m = self._credit_rows(B)
        acts = batch["actions"]
        return squared_td_step(self.credit_net, self.adapter, batch, b, n, m, acts[b, m], acts, y.ravel())

    def soft_update(self):
        _soft_update(self.global_target, self.global_net, self.tau)
        if self.credit_net is not None:
            _soft_update(self.credit_target, self.credit_net, self.tau)
