"""Per-environment network layouts.

Each entry gives the stage-1 spec of every network plus the side branches
attached in stage 2. Widths can be overridden through a config ``[arch]``
section, e.g. ``policy_hidden = [64, 64]`` or ``critic_side = [32]``.
"""

import copy


def _conv(filters, kh, kw):
    return {"type": "conv", "filters": filters, "kernel": [kh, kw]}


def _dense(units):
    return {"type": "dense", "units": units}


def _nav():
    return {
        "policy": {"main": [["obs_self", []], ["goal", []]], "hidden": [64, 64], "out": 5},
        "policy_side": {"inputs": [["obs_others", []]], "hidden": [128]},
        "critic": {"main": [["state_self", []], ["goal", []], ["action", []]], "hidden": [64, 64], "out": 1},
        "global_side": {"inputs": [["state_others", []], ["actions_others", []]], "hidden": [128]},
        "credit_side": {"inputs": [["state_actor", []], ["state_others", []]], "hidden": [128]},
        "value": {"main": [["obs_self", []], ["goal", []]], "hidden": [64, 64], "out": 1},
        "value_side": {"inputs": [["obs_others", []]], "hidden": [128]},
        "coma": {"main": [["state_all", []], ["actions_others", []], ["goal", []], ["goals_others", []],
                          ["label", []], ["obs_self", []]], "hidden": [128, 128], "out": 5},
    }


def _merge():
    grid = [_conv(4, 5, 3), {"type": "flatten"}]
    return {
        "policy": {"main": [["obs_self", [_dense(32)]], ["goal", [_dense(32)]]], "hidden": [64], "out": 5},
        "policy_side": {"inputs": [["obs_others", grid]], "hidden": [64]},
        "critic": {"main": [["state_self", []], ["goal", []], ["action", []]], "hidden": [256, 256], "out": 1},
        "global_side": {"inputs": [["state_others", []], ["actions_others", []], ["goals_others", []]],
                        "hidden": [128]},
        "credit_side": {"inputs": [["state_actor", []], ["state_others", []], ["goals_others", []]],
                        "hidden": [128]},
        "value": {"main": [["obs_self", []], ["goal", []]], "hidden": [64, 64], "out": 1},
        "value_side": {"inputs": [["obs_others", grid]], "hidden": [128]},
        "coma": {"main": [["state_all", []], ["actions_others", []], ["goal", []], ["goals_others", []],
                          ["label", []], ["obs_self", []]], "hidden": [128, 128], "out": 5},
    }


def _checkers():
    view = [_conv(6, 3, 3), {"type": "flatten"}]
    board = [_conv(4, 3, 5), {"type": "flatten"}]
    return {
        "policy": {"main": [["obs_self.view", view + [_dense(32)]], ["obs_self.vec", []], ["goal", []]],
                   "hidden": [256, 256], "out": 5},
        "policy_side": {"inputs": [["obs_others", []]], "hidden": [256]},
        "critic": {"main": [["state_env.board", board], ["obs_self.view", view], ["state_self", []],
                            ["goal", []], ["action", []], ["obs_self.vec", []]],
                   "hidden": [256, 256], "out": 1},
        "global_side": {"inputs": [["state_others", []], ["actions_others", []]], "hidden": [32]},
        "credit_side": {"inputs": [["state_actor", []], ["state_others", []]], "hidden": [32]},
        "value": {"main": [["obs_self.view", view], ["obs_self.vec", []], ["goal", []]],
                  "hidden": [256, 256], "out": 1},
        "value_side": {"inputs": [["obs_others", []]], "hidden": [32]},
        "coma": {"main": [["state_env.board", board], ["obs_self.view", view], ["state_all", []],
                          ["actions_others", []], ["goal", []], ["goals_others", []], ["label", []],
                          ["obs_self.vec", []]],
                 "hidden": [256, 256], "out": 5},
    }


def _toy():
    return {
        "policy": {"main": [["obs_self", []], ["goal", []]], "hidden": [16], "out": None},
        "policy_side": {"inputs": [["obs_others", []]], "hidden": [8]},
        "critic": {"main": [["state_env", []], ["goal", []], ["action", []]], "hidden": [32], "out": 1},
        "global_side": {"inputs": [["actions_others", []]], "hidden": [16]},
        "credit_side": {"inputs": [["state_actor", []]], "hidden": [16]},
        "value": {"main": [["obs_self", []], ["goal", []]], "hidden": [16], "out": 1},
        "value_side": {"inputs": [["obs_others", []]], "hidden": [8]},
        "coma": {"main": [["state_env", []], ["actions_others", []], ["goal", []], ["goals_others", []],
                          ["label", []]], "hidden": [32], "out": None},
    }


ARCHITECTURES = {"nav": _nav, "merge": _merge, "checkers": _checkers, "toy": _toy}

_OVERRIDES = {
    "policy_hidden": ("policy", "hidden"),
    "policy_side": ("policy_side", "hidden"),
    "critic_hidden": ("critic", "hidden"),
    "global_side": ("global_side", "hidden"),
    "credit_side": ("credit_side", "hidden"),
    "value_hidden": ("value", "hidden"),
    "value_side": ("value_side", "hidden"),
    "coma_hidden": ("coma", "hidden"),
}


def architecture(game_name, num_actions=5, overrides=None):
    try:
        arch = copy.deepcopy(ARCHITECTURES[game_name]())
    except KeyError:
        raise ValueError(f"no architecture registered for {game_name!r}") from None
    for net in ("policy", "coma"):
        if arch[net]["out"] is None:
            arch[net]["out"] = num_actions
    for key, value in (overrides or {}).items():
        if key not in _OVERRIDES:
            raise KeyError(f"unknown architecture override {key!r}")
        net, field = _OVERRIDES[key]
        arch[net][field] = list(value)
    return arch


def drop_empty_inputs(spec_inputs, shapes):
    """Remove branches over zero-width inputs (e.g. an empty s_env)."""
    return [[k, layers] for k, layers in spec_inputs if k in shapes and all(d > 0 for d in shapes[k])]
