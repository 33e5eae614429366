"""
Parameter storage, SGD with momentum, and the warm-up cosine schedule.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional

import numpy as np

from ctnet.core.autograd.tensor import Tensor
from ctnet.error_handling import ConfigInvalid, ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Optimizer and schedule settings for the toy trainer."""

    epochs: int = 20
    lr: float = 0.02
    warmup_epochs: int = 2
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 16
    seed: int = 42

    # Keep BN in eval mode while training (used by the zero-LR check)
    freeze_bn: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigInvalid(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigInvalid(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr < 0 or self.weight_decay < 0 or not 0 <= self.momentum < 1:
            raise ConfigInvalid(
                "lr and weight_decay must be >= 0 and momentum in [0, 1)",
                {"lr": self.lr, "weight_decay": self.weight_decay, "momentum": self.momentum},
            )
        if self.warmup_epochs < 0 or (self.epochs > 0 and self.warmup_epochs >= self.epochs):
            raise ConfigInvalid(
                f"warmup_epochs ({self.warmup_epochs}) must be < epochs ({self.epochs})"
            )


@dataclass
class ParamStore:
    """Named parameters, their gradients and momentum buffers, plus BN running stats."""

    params: Dict[str, np.ndarray] = field(default_factory=dict)
    state: Dict[str, np.ndarray] = field(default_factory=dict)
    grads: Dict[str, np.ndarray] = field(default_factory=dict)
    momentum: Dict[str, np.ndarray] = field(default_factory=dict)

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self.params:
            raise ConfigInvalid(f"Duplicate parameter name: {name}")
        self.params[name] = np.asarray(value, dtype=np.float64)
        self.momentum[name] = np.zeros_like(self.params[name])

    def add_state(self, name: str, value: np.ndarray) -> None:
        self.state[name] = np.asarray(value, dtype=np.float64)

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    @property
    def num_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def leaves(self) -> Dict[str, Tensor]:
        """Fresh gradient-tracking leaves for one forward/backward pass."""
        return {
            name: Tensor(value, requires_grad=True, name=name)
            for name, value in self.params.items()
        }

    def collect_grads(self, leaves: Mapping[str, Tensor]) -> None:
        """Copy leaf gradients in; parameters the loss never touched get zeros."""
        self.grads = {}
        for name, value in self.params.items():
            leaf = leaves.get(name)
            grad = None if leaf is None else leaf.grad
            if grad is None:
                grad = np.zeros_like(value)
            if grad.shape != value.shape:
                raise ShapeMismatch(f"Gradient {grad.shape} for {name} needs {value.shape}")
            self.grads[name] = grad

    def update_state(self, updates: Mapping[str, np.ndarray]) -> None:
        for name, value in updates.items():
            self.state[name] = value

    def copy(self) -> "ParamStore":
        return ParamStore(
            params={k: v.copy() for k, v in self.params.items()},
            state={k: v.copy() for k, v in self.state.items()},
            grads={k: v.copy() for k, v in self.grads.items()},
            momentum={k: v.copy() for k, v in self.momentum.items()},
        )


def sgd_step(
    store: ParamStore,
    lr: float,
    momentum: float = 0.9,
    weight_decay: float = 0.0,
) -> ParamStore:
    """
    One SGD step with momentum and L2 weight decay:
    v <- mu*v + g + lambda*theta; theta <- theta - lr*v.

    Returns a new store; the input is left untouched.
    """
    new_params: Dict[str, np.ndarray] = {}
    new_momentum: Dict[str, np.ndarray] = {}
    for name, theta in store.params.items():
        g = store.grads.get(name)
        if g is None:
            g = np.zeros_like(theta)
        v = momentum * store.momentum[name] + g + weight_decay * theta
        new_momentum[name] = v
        new_params[name] = theta - lr * v
    return ParamStore(
        params=new_params,
        state=dict(store.state),
        grads=dict(store.grads),
        momentum=new_momentum,
    )


def cosine_warmup_lr(epoch: int, cfg: TrainConfig, base_lr: Optional[float] = None) -> float:
    """Linear warm-up to the base rate, then half-cosine decay over the remaining epochs."""
    base = cfg.lr if base_lr is None else base_lr
    if not 0 <= epoch < cfg.epochs:
        raise ConfigInvalid(f"epoch {epoch} outside 0..{cfg.epochs - 1}")
    w = cfg.warmup_epochs
    if epoch < w:
        return base * (epoch + 1) / w
    progress = (epoch - w) / (cfg.epochs - w)
    return base * 0.5 * (1.0 + math.cos(math.pi * progress))
