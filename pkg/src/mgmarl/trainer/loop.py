"""Two-stage training loop.

Stage 1 trains a policy and critic on the induced single-agent game. Stage 2
widens both with side branches for the other agents, restores the stage-1
weights and keeps training in the full game. Direct, IAC and COMA start
stage 2 from scratch.
"""

import json
import os

import numpy as np

from ..critics import InputAdapter
from ..game import induce_single_agent_mdp
from ..nn import AugmentableNet, Policy, augment, load_checkpoint, save_checkpoint
from .architectures import architecture, drop_empty_inputs
from .buffer import ReplayBuffer
from .methods import COMALearner, CreditLearner, IACLearner, Stage1Learner

# independent random streams derived from the master seed
STREAMS = ("init", "goals", "env", "explore", "minibatch")


class CheckpointMismatch(ValueError):
    """A checkpoint does not fit the network being restored."""


def seed_streams(seed):
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


def _eval_rng(seed, episode):
    return np.random.default_rng(np.random.SeedSequence([seed, episode, 0xE7A1]))


# -- networks ----------------------------------------------------------------

def _net(spec, adapter, rng):
    spec = dict(spec, main=drop_empty_inputs(spec["main"], adapter.shapes))
    return AugmentableNet(spec, adapter.shapes, rng)


def _widen(net, side, adapter, rng):
    inputs = drop_empty_inputs(side["inputs"], adapter.shapes)
    if not inputs:
        raise ValueError("side branch has no non-empty inputs")
    return augment(net, dict(side, inputs=inputs), adapter.shapes, rng)


def _restore(ckpt, name, net):
    saved = ckpt.params(name)
    if not saved:
        raise CheckpointMismatch(f"checkpoint holds no network {name!r}")
    try:
        loaded = set(ckpt.restore_into(name, net))
    except ValueError as exc:
        raise CheckpointMismatch(str(exc)) from None
    missing = set(saved) - loaded
    if missing:
        raise CheckpointMismatch(f"{name}: parameters not present in the new network: {sorted(missing)}")
    return net


def build_stage1(cfg, game, rng):
    adapter = InputAdapter(game.layout(), game.num_agents, game.num_actions)
    arch = architecture(game.name, game.num_actions, cfg.arch)
    policy = _net(arch["policy"], adapter, rng)
    critic = _net(arch["critic"], adapter, rng)
    return Stage1Learner(adapter, policy, critic, cfg)


def build_stage2(cfg, game, rng, checkpoint=None):
    adapter = InputAdapter(game.layout(), game.num_agents, game.num_actions)
    arch = architecture(game.name, game.num_actions, cfg.arch)
    ckpt = load_checkpoint(checkpoint) if isinstance(checkpoint, (str, os.PathLike)) else checkpoint
    if cfg.method in ("cm3", "qv") and ckpt is None:
        raise ValueError(f"method {cfg.method} needs a stage-1 checkpoint")
    policy = _widen(_net(arch["policy"], adapter, rng), arch["policy_side"], adapter, rng)

    if cfg.method in ("cm3", "qv", "direct"):
        global_q = _widen(_net(arch["critic"], adapter, rng), arch["global_side"], adapter, rng)
        credit_q = _widen(_net(arch["critic"], adapter, rng), arch["credit_side"], adapter, rng)
        if cfg.method != "direct":
            _restore(ckpt, "policy", policy)
            _restore(ckpt, "critic", global_q)
            _restore(ckpt, "critic", credit_q)
        advantage = "qv" if cfg.method == "qv" else "cm3"
        return CreditLearner(adapter, policy, global_q, credit_q, cfg, advantage)
    if cfg.method == "iac":
        value = _widen(_net(arch["value"], adapter, rng), arch["value_side"], adapter, rng)
        return IACLearner(adapter, policy, value, cfg)
    coma = _net(arch["coma"], adapter, rng)
    return COMALearner(adapter, policy, coma, cfg)


# -- episodes ----------------------------------------------------------------

def run_episode(game, act, goal_rng, env_rng, buffer=None, on_step=None):
    """Roll out one episode with ``act(obs, goals) -> actions``.

    Returns per-agent undiscounted returns, the final step's success flags
    and the number of steps.
    """
    assignment = game.sample_goals(goal_rng)
    state, obs = game.reset(env_rng, assignment)
    goals = np.asarray(game.goals, dtype=np.float64)
    returns = np.zeros(game.num_agents)
    success = np.zeros(game.num_agents, dtype=bool)
    steps = 0
    while True:
        actions = act(obs, goals)
        res = game.step(actions)
        returns += res.rewards
        steps += 1
        success = np.asarray(res.info.get("success", success), dtype=bool)
        if buffer is not None:
            buffer.add({
                "state_env": state.env_part, "agents": state.agent_parts,
                "obs_self": obs.self_parts, "obs_others": obs.others_parts,
                "goals": goals, "actions": actions, "rewards": res.rewards,
                "next_state_env": res.state.env_part, "next_agents": res.state.agent_parts,
                "next_obs_self": res.observations.self_parts,
                "next_obs_others": res.observations.others_parts,
                # a horizon cut is not a true end of the episode, so targets still bootstrap
                "terminal": float(res.terminal and not res.timeout),
            })
        if on_step is not None:
            on_step()
        state, obs = res.state, res.observations
        if res.terminal:
            return returns, success, steps


def evaluate_policy(game, policy, adapter, episodes, rng, eps):
    """Statistics of ``episodes`` rollouts at exploration ``eps``."""
    if episodes <= 0:
        raise ValueError("need at least one evaluation episode")
    def act(obs, goals):
        inputs, aug = adapter.policy_inputs(obs.self_parts, obs.others_parts, goals)
        return policy.sample(inputs, rng, aug if policy.net.stage == 2 else None, eps)

    returns, successes = [], []
    for _ in range(episodes):
        ret, ok, _ = run_episode(game, act, rng, rng)
        returns.append(ret)
        successes.append(ok)
    returns = np.array(returns)
    joint = returns.sum(axis=1)
    successes = np.array(successes)
    return {
        "episodes": episodes,
        "mean_return": returns.mean(axis=0).tolist(),
        "std_return": returns.std(axis=0).tolist(),
        "joint_return": float(joint.mean()),
        "joint_return_std": float(joint.std()),
        "success_rate": float(successes.all(axis=1).mean()),
        "agent_success_rate": successes.mean(axis=0).tolist(),
    }


# -- training ----------------------------------------------------------------

class MetricsLog:
    def __init__(self, path=None):
        self.path = path
        self.records = []
        if path is not None:
            open(path, "w").close()

    def write(self, record):
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def _train(cfg, game, learner, streams, metrics, out_dir):
    if cfg.max_steps:
        game.horizon = cfg.max_steps
    buffer = ReplayBuffer(cfg.buffer_size, "circular" if cfg.off_policy else "reset")
    rng_explore, rng_batch = streams["explore"], streams["minibatch"]
    eval_game = game
    train_success = []
    counter = {"steps": 0}

    def train_round():
        if len(buffer) == 0:
            return
        for _ in range(cfg.epochs):
            learner.update(buffer.sample(cfg.minibatch, rng_batch), rng_batch)
            learner.soft_update()

    def on_step():
        counter["steps"] += 1
        if cfg.steps_per_train and counter["steps"] % cfg.steps_per_train == 0 and len(buffer) >= cfg.minibatch:
            train_round()

    def act(obs, goals):
        return learner.act(obs, goals, rng_explore)

    def log_eval(episode):
        rng = _eval_rng(cfg.seed, episode)
        stats = evaluate_policy(eval_game, learner.policy, learner.adapter, cfg.eval_episodes, rng, cfg.eps_end)
        metrics.write({"kind": "eval", "episode": episode, "epsilon": learner.eps, **stats})
        return stats["joint_return"] >= cfg.stop_return

    episodes_run = cfg.episodes
    for episode in range(cfg.episodes):
        learner.eps = cfg.epsilon(episode)
        if cfg.eval_every and episode % cfg.eval_every == 0 and log_eval(episode):
            episodes_run = episode
            break
        _, ok, _ = run_episode(game, act, streams["goals"], streams["env"], buffer, on_step)
        train_success.append(bool(ok.all()))
        if not cfg.steps_per_train and (episode + 1) % cfg.episodes_per_train == 0:
            train_round()
            if buffer.mode == "reset":
                buffer.reset()

    final = None
    if episodes_run > 0 and cfg.final_eval_episodes:
        rng = _eval_rng(cfg.seed, episodes_run)
        final = evaluate_policy(eval_game, learner.policy, learner.adapter, cfg.final_eval_episodes,
                                rng, cfg.eps_end)
        metrics.write({"kind": "final", "episode": episodes_run, "epsilon": cfg.eps_end, **final})
    tail = train_success[-100:]
    summary = {
        "final": final,
        "train_success_last100": float(np.mean(tail)) if tail else None,
        "env_steps": counter["steps"],
        "episodes": episodes_run,
    }
    ckpt_path = None
    if out_dir is not None:
        ckpt_path = os.path.join(out_dir, f"stage{cfg.stage}.npz")
        save_checkpoint(ckpt_path, learner.networks(),
                        extra={"stage": cfg.stage, "method": cfg.method, "eps_end": cfg.eps_end,
                               "env": game.name, "config": cfg.to_dict()})
    return {"learner": learner, "summary": summary, "checkpoint": ckpt_path, "metrics": metrics.records}


def _prepare(out_dir):
    if out_dir is None:
        return MetricsLog()
    os.makedirs(out_dir, exist_ok=True)
    return MetricsLog(os.path.join(out_dir, "metrics.jsonl"))


def run_stage1(cfg, game, out_dir=None):
    """Train on ``game``'s induced single-agent MDP (or ``game`` if already N = 1)."""
    if cfg.stage != 1:
        raise ValueError("run_stage1 needs a stage-1 config")
    single = game if game.num_agents == 1 else induce_single_agent_mdp(game)
    streams = seed_streams(cfg.seed)
    learner = build_stage1(cfg, single, streams["init"])
    return _train(cfg, single, learner, streams, _prepare(out_dir), out_dir)


def run_stage2(cfg, game, checkpoint=None, out_dir=None):
    if cfg.stage != 2:
        raise ValueError("run_stage2 needs a stage-2 config")
    streams = seed_streams(cfg.seed)
    learner = build_stage2(cfg, game, streams["init"], checkpoint)
    return _train(cfg, game, learner, streams, _prepare(out_dir), out_dir)


def evaluate(checkpoint, game, num_episodes, seed=0, eps=None):
    """Evaluate the policy stored in ``checkpoint`` on ``game``."""
    ckpt = load_checkpoint(checkpoint) if isinstance(checkpoint, (str, os.PathLike)) else checkpoint
    net = ckpt.build("policy")
    eps = ckpt.extra.get("eps_end", 0.0) if eps is None else eps
    adapter = InputAdapter(game.layout(), game.num_agents, game.num_actions)
    keys = list(net.main_keys) + (list(net.side_keys) if net.stage == 2 else [])
    for key in keys:
        if tuple(net.input_shapes[key]) != tuple(adapter.shapes.get(key, ())):
            raise CheckpointMismatch(
                f"policy input {key!r} expects shape {tuple(net.input_shapes[key])}, "
                f"game {game.name!r} provides {adapter.shapes.get(key)}")
    return evaluate_policy(game, Policy(net, eps), adapter, num_episodes, np.random.default_rng(seed), eps)


def sample_goals(game, rng):
    return game.sample_goals(rng).goals
