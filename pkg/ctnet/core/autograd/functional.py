"""
Differentiable operations over Tensor nodes.

Each function computes its forward value with the numpy primitives of
`ctnet.core.tensor` / `ctnet.core.conv` and records a backward rule. The
network forward is written once against these functions; under `no_grad`
or with constant inputs no graph is recorded.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ctnet.core.autograd.tensor import Tensor, lift, make_node
from ctnet.core.conv import kernels
from ctnet.core.conv.spec import TSConvSpec, TSConvWeights
from ctnet.core.tensor import ops
from ctnet.error_handling import ShapeMismatch

logger = logging.getLogger(__name__)


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    return grad.sum(axis=axes, keepdims=True) if axes else grad


def add(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    out = ops.add(a.data, b.data)
    return make_node(out, (a, b), lambda g: (g, g), "add")


def mul_broadcast(a, attn) -> Tensor:
    """a * attn with attn broadcast along its size-1 axes."""
    a, attn = lift(a), lift(attn)
    out = ops.mul_broadcast(a.data, attn.data)

    def backward(g):
        return g * attn.data, _reduce_to(g * a.data, attn.shape)

    return make_node(out, (a, attn), backward, "mul_broadcast")


def scale(a, s: float) -> Tensor:
    a = lift(a)
    return make_node(ops.scale(a.data, s), (a,), lambda g: (g * s,), "scale")


def sigmoid(a) -> Tensor:
    a = lift(a)
    out = ops.sigmoid(a.data)
    return make_node(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def relu(a) -> Tensor:
    a = lift(a)
    mask = a.data > 0
    return make_node(ops.relu(a.data), (a,), lambda g: (g * mask,), "relu")


def t_pool(a) -> Tensor:
    a = lift(a)
    frames = a.shape[2]
    out = ops.t_pool(a.data)
    return make_node(
        out, (a,), lambda g: (np.broadcast_to(g / frames, a.shape).copy(),), "t_pool"
    )


def s_pool(a) -> Tensor:
    a = lift(a)
    area = a.shape[3] * a.shape[4]
    out = ops.s_pool(a.data)
    return make_node(
        out, (a,), lambda g: (np.broadcast_to(g / area, a.shape).copy(),), "s_pool"
    )


def global_pool(a) -> Tensor:
    """Average over (T, H, W): (N, C, T, H, W) -> (N, C)."""
    a = lift(a)
    volume = a.shape[2] * a.shape[3] * a.shape[4]
    out = a.data.mean(axis=(2, 3, 4))

    def backward(g):
        return (np.broadcast_to(g[:, :, None, None, None] / volume, a.shape).copy(),)

    return make_node(out, (a,), backward, "global_pool")


def total(a) -> Tensor:
    """Sum of all entries as a scalar node."""
    a = lift(a)
    return make_node(
        np.asarray(a.data.sum()), (a,), lambda g: (np.full(a.shape, float(g)),), "sum"
    )


def batch_norm(
    x,
    gamma,
    beta,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: str = "eval",
    momentum: float = ops.BN_MOMENTUM,
    eps: float = ops.BN_EPS,
) -> Tuple[Tensor, ops.BatchNormParams]:
    """Differentiable batch norm; also returns the updated running statistics."""
    x, gamma, beta = lift(x), lift(gamma), lift(beta)
    params = ops.BatchNormParams(gamma.data, beta.data, running_mean, running_var)
    out, updated = ops.batch_norm(x.data, params, mode=mode, momentum=momentum, eps=eps)

    axes = (0, 2, 3, 4)
    cs = (1, -1, 1, 1, 1)
    if mode == "train":
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mean.reshape(cs)) * inv_std.reshape(cs)
    count = x.data.size // x.shape[1]

    def backward(g):
        g_gamma = (g * x_hat).sum(axis=axes)
        g_beta = g.sum(axis=axes)
        g_hat = g * gamma.data.reshape(cs)
        if mode == "train":
            gx = (
                inv_std.reshape(cs) / count
                * (count * g_hat
                   - g_hat.sum(axis=axes).reshape(cs)
                   - x_hat * (g_hat * x_hat).sum(axis=axes).reshape(cs))
            )
        else:
            gx = g_hat * inv_std.reshape(cs)
        return gx, g_gamma, g_beta

    return make_node(out, (x, gamma, beta), backward, "batch_norm"), updated


def conv3d(
    x,
    w,
    groups: int = 1,
    stride: kernels.Stride = (1, 1, 1),
    bias=None,
) -> Tensor:
    x, w = lift(x), lift(w)
    b = lift(bias) if bias is not None else None
    out = kernels.conv3d(x.data, w.data, groups=groups, stride=stride,
                         bias=None if b is None else b.data)

    def backward(g):
        gx, gw = kernels.conv3d_backward(x.data, w.data, g, groups=groups, stride=stride)
        grads = [gx, gw]
        if b is not None:
            grads.append(g.sum(axis=(0, 2, 3, 4)))
        return grads

    parents = (x, w) if b is None else (x, w, b)
    return make_node(out, parents, backward, "conv3d")


def tsconv(x, spec: TSConvSpec, w, bias=None) -> Tensor:
    """Grouped tensor separable convolution on sub-dimension spec.k."""
    x, w = lift(x), lift(w)
    b = lift(bias) if bias is not None else None
    weights = TSConvWeights(w.data, None if b is None else b.data)
    out = kernels.tsconv_grouped(x.data, spec, weights)

    def backward(g):
        gx, gw, gb = kernels.tsconv_backward(x.data, spec, weights, g)
        return [gx, gw] if b is None else [gx, gw, gb]

    parents = (x, w) if b is None else (x, w, b)
    return make_node(out, parents, backward, "tsconv")


def max_pool_spatial(x, kernel: int = 3, stride: int = 2) -> Tensor:
    """Spatial max pooling with same padding; frames are untouched."""
    x = lift(x)
    n, c, t, h, w = x.shape
    pad = kernel // 2
    xp = np.pad(x.data, [(0, 0), (0, 0), (0, 0), (pad, pad), (pad, pad)],
                constant_values=-np.inf)
    oh = kernels.out_size(h, kernel, stride)
    ow = kernels.out_size(w, kernel, stride)
    windows = []
    slices = []
    for dh in range(kernel):
        for dw in range(kernel):
            sl = (Ellipsis, slice(dh, dh + stride * (oh - 1) + 1, stride),
                  slice(dw, dw + stride * (ow - 1) + 1, stride))
            slices.append(sl)
            windows.append(xp[sl])
    stacked = np.stack(windows)
    winner = stacked.argmax(axis=0)
    out = np.take_along_axis(stacked, winner[None], axis=0)[0]

    def backward(g):
        gxp = np.zeros_like(xp)
        for i, sl in enumerate(slices):
            gxp[sl] += g * (winner == i)
        return (gxp[:, :, :, pad:pad + h, pad:pad + w],)

    return make_node(out, (x,), backward, "max_pool_spatial")


def linear(x, w, b=None) -> Tensor:
    """x (N, F) @ w.T (classes, F) + b."""
    x, w = lift(x), lift(w)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"linear: input {x.shape} does not fit weight {w.shape}")
    bt = lift(b) if b is not None else None
    out = x.data @ w.data.T
    if bt is not None:
        out = out + bt.data

    def backward(g):
        grads = [g @ w.data, g.T @ x.data]
        if bt is not None:
            grads.append(g.sum(axis=0))
        return grads

    parents = (x, w) if bt is None else (x, w, bt)
    return make_node(out, parents, backward, "linear")


def softmax_cross_entropy(logits, labels: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy over the batch; labels are class indices."""
    logits = lift(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.data.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeMismatch(f"logits {logits.shape} do not fit labels {labels.shape}")
    n = logits.shape[0]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), labels].mean()

    def backward(g):
        probs = np.exp(log_probs)
        probs[np.arange(n), labels] -= 1.0
        return (float(g) * probs / n,)

    return make_node(np.asarray(loss), (logits,), backward, "softmax_cross_entropy")
