from .architectures import ARCHITECTURES, architecture
from .buffer import KEYS, ReplayBuffer
from .config import METHODS, TrainerConfig, load_config
from .loop import (CheckpointMismatch, build_stage1, build_stage2, evaluate, evaluate_policy,
                   run_episode, run_stage1, run_stage2, sample_goals, seed_streams)
from .methods import COMALearner, CreditLearner, IACLearner, Stage1Learner

__all__ = [
    "ARCHITECTURES",
    "COMALearner",
    "CheckpointMismatch",
    "CreditLearner",
    "IACLearner",
    "KEYS",
    "METHODS",
    "ReplayBuffer",
    "Stage1Learner",
    "TrainerConfig",
    "architecture",
    "build_stage1",
    "build_stage2",
    "evaluate",
    "evaluate_policy",
    "load_config",
    "run_episode",
    "run_stage1",
    "run_stage2",
    "sample_goals",
    "seed_streams",
]
