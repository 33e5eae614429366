"""
Dense 5-axis tensor primitives: pooling, elementwise ops and batch norm.

Tensors are numpy arrays shaped (N, C, T, H, W), row-major with W fastest.
Every function is pure; batch_norm returns updated running statistics
instead of mutating its parameters.
"""

import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from ctnet.config import config
from ctnet.error_handling import NumericError, ShapeMismatch

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float64
BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def as_tensor5(t, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """Validate and return a 5-axis array with all dims >= 1."""
    arr = np.asarray(t, dtype=dtype)
    if arr.ndim != 5:
        raise ShapeMismatch(f"Expected (N, C, T, H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeMismatch(f"All dims must be >= 1, got shape {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, op: str) -> np.ndarray:
    """Debug-mode NaN/Inf assertion."""
    if config.debug and not np.all(np.isfinite(arr)):
        logger.error(f"❌ Non-finite values produced by {op}")
        raise NumericError(f"{op} produced NaN/Inf", {"op": op})
    return arr


def t_pool(t: np.ndarray) -> np.ndarray:
    """Global temporal average pooling: (N, C, T, H, W) -> (N, C, 1, H, W)."""
    t = as_tensor5(t)
    return check_finite(t.mean(axis=2, keepdims=True), "t_pool")


def s_pool(t: np.ndarray) -> np.ndarray:
    """Global spatial average pooling: (N, C, T, H, W) -> (N, C, T, 1, 1)."""
    t = as_tensor5(t)
    return check_finite(t.mean(axis=(3, 4), keepdims=True), "s_pool")


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeMismatch(f"add needs equal dims, got {a.shape} and {b.shape}")
    return check_finite(a + b, "add")


def check_broadcast(a_shape: Tuple[int, ...], attn_shape: Tuple[int, ...]) -> None:
    """attn must equal a's dims except on axes where attn has size 1."""
    if len(a_shape) != len(attn_shape) or any(
        s != d and s != 1 for d, s in zip(a_shape, attn_shape)
    ):
        raise ShapeMismatch(f"Cannot broadcast attention {attn_shape} onto {a_shape}")


def mul_broadcast(a: np.ndarray, attn: np.ndarray) -> np.ndarray:
    """Elementwise product, broadcasting attn along its size-1 axes."""
    check_broadcast(a.shape, attn.shape)
    return check_finite(a * attn, "mul_broadcast")


def sigmoid(t: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(-x)), overflow-free."""
    return check_finite(np.exp(-np.logaddexp(0.0, -t)), "sigmoid")


def relu(t: np.ndarray) -> np.ndarray:
    return np.maximum(t, 0.0)


def scale(t: np.ndarray, s: float) -> np.ndarray:
    return check_finite(t * s, "scale")


@dataclass(frozen=True)
class BatchNormParams:
    """Per-channel affine parameters and running statistics."""
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray

    @classmethod
    def identity(cls, channels: int) -> "BatchNormParams":
        """gamma=1, beta=0, running mean 0 and variance 1."""
        return cls(
            gamma=np.ones(channels),
            beta=np.zeros(channels),
            running_mean=np.zeros(channels),
            running_var=np.ones(channels),
        )

    @property
    def channels(self) -> int:
        return int(self.gamma.shape[0])


def _channel_shape(ndim: int) -> Tuple[int, ...]:
    return (1, -1) + (1,) * (ndim - 2)


def batch_norm(
    t: np.ndarray,
    params: BatchNormParams,
    mode: str = "eval",
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
) -> Tuple[np.ndarray, BatchNormParams]:
    """
    Batch normalization over (N, T, H, W) per channel.

    Returns the output and the (possibly updated) parameters. Train mode uses
    batch statistics and moves the running stats by `momentum`, with the
    unbiased batch variance feeding running_var; eval mode uses running stats.
    """
    if t.shape[1] != params.channels:
        raise ShapeMismatch(f"batch_norm over {params.channels} channels got input {t.shape}")
    axes = (0,) + tuple(range(2, t.ndim))
    cs = _channel_shape(t.ndim)

    if mode == "train":
        mean = t.mean(axis=axes)
        var = t.var(axis=axes)
        count = t.size // params.channels
        unbiased = var * count / (count - 1) if count > 1 else var
        updated = replace(
            params,
            running_mean=(1 - momentum) * params.running_mean + momentum * mean,
            running_var=(1 - momentum) * params.running_var + momentum * unbiased,
        )
    elif mode == "eval":
        mean, var = params.running_mean, params.running_var
        updated = params
    else:
        raise ValueError(f"Unknown batch_norm mode: {mode}")

    out = (t - mean.reshape(cs)) / np.sqrt(var.reshape(cs) + eps)
    out = out * params.gamma.reshape(cs) + params.beta.reshape(cs)
    return check_finite(out, "batch_norm"), updated
