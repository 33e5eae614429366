"""Tensor-core: 5-axis tensors, channel factorization and primitives."""

from .factorization import ChannelFactorization, view_channels, flatten_channels
from .ops import (
    BatchNormParams,
    as_tensor5,
    add,
    batch_norm,
    mul_broadcast,
    relu,
    s_pool,
    scale,
    sigmoid,
    t_pool,
)
from .io import save_tensor, load_tensor, encode_tensor, decode_tensor

__all__ = [
    "ChannelFactorization",
    "view_channels",
    "flatten_channels",
    "BatchNormParams",
    "as_tensor5",
    "add",
    "batch_norm",
    "mul_broadcast",
    "relu",
    "s_pool",
    "scale",
    "sigmoid",
    "t_pool",
    "save_tensor",
    "load_tensor",
    "encode_tensor",
    "decode_tensor",
]
