"""Reverse-mode differentiation over the ctnet primitives."""

from .tensor import Tensor, no_grad, is_recording, topological_order
from . import functional
from .optim import ParamStore, TrainConfig, sgd_step, cosine_warmup_lr

__all__ = [
    "Tensor",
    "no_grad",
    "is_recording",
    "topological_order",
    "functional",
    "ParamStore",
    "TrainConfig",
    "sgd_step",
    "cosine_warmup_lr",
]
