"""Scenario files: INI documents naming an environment and its settings.

Example::

    [scenario]
    env = merge
    seed = 7
    scenario = C3
    traffic = 4
"""

import configparser

from .checkers import CheckersWorld
from .lane_merge import LaneMergeWorld
from .navigation import NavigationWorld

ENVIRONMENTS = {
    "nav": NavigationWorld,
    "navigation": NavigationWorld,
    "merge": LaneMergeWorld,
    "lane_merge": LaneMergeWorld,
    "sumo": LaneMergeWorld,
    "checkers": CheckersWorld,
}

_CASTS = {
    "num_agents": int, "horizon": int, "rows": int, "cols": int, "traffic": int,
    "discount": float, "formation_prob": float, "radius": float, "dt": float,
    "friction": float, "accel": float, "max_speed": float, "preset_prob": float,
    "jitter": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
    "role": int,
}


def make_game(env, **kwargs):
    try:
        cls = ENVIRONMENTS[env.lower()]
    except KeyError:
        raise ValueError(f"unknown environment {env!r}; choose from {sorted(set(ENVIRONMENTS))}") from None
    return cls(**kwargs)


def parse_options(section):
    options = {}
    for key, value in section.items():
        options[key] = _CASTS[key](value) if key in _CASTS else value
    return options


def load_scenario(path):
    """Return ``(game, seed)`` from an INI scenario file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(path)
    if not parser.has_section("scenario"):
        raise ValueError(f"{path}: missing [scenario] section")
    options = parse_options(parser["scenario"])
    env = options.pop("env")
    seed = int(options.pop("seed", 0))
    return make_game(env, **options), seed
