"""Training configuration read from INI files.

A file has an ``[env]`` section, one section per stage (``[stage1]``,
``[stage2]``) and optional ``[method.<name>]`` sections whose keys override
the stage-2 values for that method. An ``[arch]`` section may override layer
widths (see :mod:`mgmarl.trainer.architectures`).
"""

import configparser
import json
import math
from dataclasses import asdict, dataclass, field, fields

from ..envs.scenario import parse_options

METHODS = ("cm3", "qv", "direct", "iac", "coma")


@dataclass
class TrainerConfig:
    stage: int = 1
    method: str = "cm3"
    episodes: int = 1000
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_div: float = 1000.0
    buffer_size: int = 10000
    minibatch: int = 256
    episodes_per_train: int = 10
    steps_per_train: int = 0
    epochs: int = 24
    lr_policy: float = 1e-4
    lr_q: float = 1e-3
    lr_v: float = 1e-3
    tau: float = 0.01
    gamma: float = 0.99
    max_steps: int = 25
    off_policy: bool = False
    eval_every: int = 100
    eval_episodes: int = 10
    final_eval_episodes: int = 100
    stop_return: float = math.inf   # end training once an evaluation reaches this joint return
    seed: int = 0
    env: dict = field(default_factory=dict)
    arch: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ValueError("stage must be 1 or 2")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if self.eps_div <= 0:
            raise ValueError("eps_div must be positive")
        if self.episodes_per_train <= 0 and self.steps_per_train <= 0:
            raise ValueError("set episodes_per_train or steps_per_train")

    @property
    def eps_step(self):
        return (self.eps_start - self.eps_end) / self.eps_div

    def epsilon(self, episode):
        """Exploration after ``episode`` completed episodes."""
        return max(self.eps_end, self.eps_start - episode * self.eps_step)

    def to_dict(self):
        return asdict(self)

    def replace(self, **changes):
        data = self.to_dict()
        data.update(changes)
        return TrainerConfig(**data)


_FIELD_TYPES = {f.name: f.type for f in fields(TrainerConfig)}


def _cast(key, value):
    kind = _FIELD_TYPES.get(key)
    if kind in (int, "int"):
        return int(float(value))
    if kind in (float, "float"):
        return float(value)
    if kind in (bool, "bool"):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if kind in (str, "str"):
        return value.strip()
    raise KeyError(f"unknown training option {key!r}")


def load_config(path, stage, method="cm3", overrides=None):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(path)
    section = f"stage{stage}"
    if not parser.has_section(section):
        raise ValueError(f"{path}: missing [{section}]")
    values = {"stage": stage, "method": method}
    for key, raw in parser[section].items():
        values[key] = _cast(key, raw)
    if stage == 2 and parser.has_section(f"method.{method}"):
        for key, raw in parser[f"method.{method}"].items():
            values[key] = _cast(key, raw)
    if parser.has_section("env"):
        values["env"] = parse_options(parser["env"])
    if parser.has_section("arch"):
        values["arch"] = {k: json.loads(v) for k, v in parser["arch"].items()}
    values.update(overrides or {})
    return TrainerConfig(**values)
