from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .layers import Conv2D, Dense, Flatten, ReLU, Sequential
from .net import AugmentableNet, StageError, augment, soft_update
from .optim import Adam
from .policy import Policy, action_distribution, logprob_grad_logits, softmax

__all__ = [
    "Adam",
    "AugmentableNet",
    "Checkpoint",
    "Conv2D",
    "Dense",
    "Flatten",
    "Policy",
    "ReLU",
    "Sequential",
    "StageError",
    "action_distribution",
    "augment",
    "load_checkpoint",
    "logprob_grad_logits",
    "save_checkpoint",
    "soft_update",
    "softmax",
]
