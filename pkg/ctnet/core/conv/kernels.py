"""
Convolution kernels over (N, C, T, H, W) tensors.

All convolutions use "same" zero padding (k // 2 per side). Output channels
of every TSConv equal its input channels. Accumulation runs kernel offsets
in (t, h, w) lexicographic order, so results are reproducible bit for bit.
"""

import itertools
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ctnet.core.conv.spec import TSConvSpec, TSConvWeights, check_kernel
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.core.tensor.ops import as_tensor5, check_finite
from ctnet.error_handling import KernelShapeViolation, ShapeMismatch

logger = logging.getLogger(__name__)

Stride = Tuple[int, int, int]


def out_size(n: int, k: int, s: int) -> int:
    """Output extent of a same-padded convolution."""
    return (n + 2 * (k // 2) - k) // s + 1


def _pad(x: np.ndarray, kernel: Sequence[int]) -> np.ndarray:
    widths = [(0, 0), (0, 0)] + [(k // 2, k // 2) for k in kernel]
    return np.pad(x, widths)


def _offsets(kernel: Sequence[int]):
    return itertools.product(*(range(k) for k in kernel))


def _window(d: Sequence[int], out: Sequence[int], stride: Sequence[int]):
    return tuple(slice(o, o + s * (n - 1) + 1, s) for o, n, s in zip(d, out, stride))


def conv3d(
    x: np.ndarray,
    w: np.ndarray,
    groups: int = 1,
    stride: Stride = (1, 1, 1),
    bias: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Grouped 3-D convolution; w has shape (C_out, C_in / groups, kt, kh, kw)."""
    n, c_in, t, h, wd = x.shape
    c_out, cin_g, kt, kh, kw = w.shape
    if c_in != cin_g * groups or c_out % groups:
        raise ShapeMismatch(
            f"conv3d: input channels {c_in}, weight {w.shape}, groups {groups} are inconsistent"
        )
    cout_g = c_out // groups
    dims = tuple(out_size(s, k, st) for s, k, st in zip((t, h, wd), (kt, kh, kw), stride))
    length = int(np.prod(dims))

    xg = _pad(x, (kt, kh, kw)).reshape((n, groups, cin_g) + (t + kt - 1, h + kh - 1, wd + kw - 1))
    wg = w.reshape(groups, cout_g, cin_g, kt, kh, kw)
    out = np.zeros((n, groups, cout_g, length), dtype=np.result_type(x, w))
    for d in _offsets((kt, kh, kw)):
        patch = xg[(Ellipsis,) + _window(d, dims, stride)].reshape(n, groups, cin_g, length)
        out += np.matmul(wg[(Ellipsis,) + d], patch)
    out = out.reshape((n, c_out) + dims)
    if bias is not None:
        out += bias.reshape(1, -1, 1, 1, 1)
    return check_finite(out, "conv3d")


def conv3d_backward(
    x: np.ndarray,
    w: np.ndarray,
    grad_out: np.ndarray,
    groups: int = 1,
    stride: Stride = (1, 1, 1),
) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of conv3d with respect to its input and weight."""
    n, c_in, t, h, wd = x.shape
    c_out, cin_g, kt, kh, kw = w.shape
    cout_g = c_out // groups
    dims = grad_out.shape[2:]
    length = int(np.prod(dims))

    xg = _pad(x, (kt, kh, kw)).reshape((n, groups, cin_g) + (t + kt - 1, h + kh - 1, wd + kw - 1))
    wg = w.reshape(groups, cout_g, cin_g, kt, kh, kw)
    gout = grad_out.reshape(n, groups, cout_g, length)
    gxg = np.zeros_like(xg)
    gw = np.zeros_like(wg)
    for d in _offsets((kt, kh, kw)):
        window = (Ellipsis,) + _window(d, dims, stride)
        patch = xg[window].reshape(n, groups, cin_g, length)
        gw[(Ellipsis,) + d] = np.matmul(gout, patch.transpose(0, 1, 3, 2)).sum(axis=0)
        contrib = np.matmul(wg[(Ellipsis,) + d].transpose(0, 2, 1), gout)
        gxg[window] += contrib.reshape((n, groups, cin_g) + tuple(dims))

    pt, ph, pw = kt // 2, kh // 2, kw // 2
    gx = gxg.reshape((n, c_in) + xg.shape[3:])[:, :, pt:pt + t, ph:ph + h, pw:pw + wd]
    return gx, gw.reshape(w.shape)


def tconv_full(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Dense channel-mixing 3-D convolution with C_out = C_in."""
    x = as_tensor5(x)
    c = x.shape[1]
    if w.ndim != 5 or w.shape[:2] != (c, c):
        raise ShapeMismatch(f"tconv_full needs a ({c}, {c}, kt, kh, kw) kernel, got {w.shape}")
    check_kernel(w.shape[2:])
    return conv3d(x, w)


def tsconv_direct(x: np.ndarray, spec: TSConvSpec, w: TSConvWeights) -> np.ndarray:
    """
    Reference TSConv: for every output channel (c1..cK) sum over c'_k and the
    kernel offsets, reading input channel (c1..c'_k..cK).
    """
    x = as_tensor5(x)
    f, k = spec.factorization, spec.k
    f.check(x.shape[1])
    w.check(spec)
    _, c, t, h, wd = x.shape
    xp = _pad(x, spec.kernel)
    out = np.zeros_like(x)
    for c_out in range(c):
        index = list(f.multi_index(c_out))
        g = f.group_index(c_out, k)
        ck = index[k - 1]
        for ck_in in range(spec.c_k):
            index[k - 1] = ck_in
            c_in = f.flat_index(index)
            kern = w.weight[g, ck, ck_in]
            for dt, dh, dw in _offsets(spec.kernel):
                out[:, c_out] += kern[dt, dh, dw] * xp[:, c_in, dt:dt + t, dh:dh + h, dw:dw + wd]
    if w.bias is not None:
        out += w.bias.reshape(1, -1, 1, 1, 1)
    return out


def _grouped_permutation(f: ChannelFactorization, k: int) -> Tuple[int, ...]:
    """Axis order of the channel view that moves sub-dimension k innermost."""
    channel_axes = [a for a in range(1, f.K + 1) if a != k] + [k]
    return (0,) + tuple(channel_axes) + (f.K + 1, f.K + 2, f.K + 3)


def to_grouped_layout(x: np.ndarray, f: ChannelFactorization, k: int) -> np.ndarray:
    """Permute channels so groups of C_k are contiguous, in complement order."""
    n, c, t, h, w = x.shape
    view = x.reshape((n,) + f.sizes + (t, h, w))
    return view.transpose(_grouped_permutation(f, k)).reshape(n, c, t, h, w)


def from_grouped_layout(y: np.ndarray, f: ChannelFactorization, k: int) -> np.ndarray:
    """Inverse of to_grouped_layout."""
    n, c, t, h, w = y.shape
    perm = _grouped_permutation(f, k)
    permuted_sizes = tuple(f.sizes[a - 1] for a in perm[1:f.K + 1])
    view = y.reshape((n,) + permuted_sizes + (t, h, w))
    return view.transpose(np.argsort(perm)).reshape(n, c, t, h, w)


def tsconv_grouped(
    x: np.ndarray, spec: TSConvSpec, w: TSConvWeights, fast_path: bool = True
) -> np.ndarray:
    """
    TSConv as one grouped convolution: permute sub-dimension k innermost, run
    G = C / C_k groups of width C_k, permute back. With first-factor-outermost
    ordering the innermost sub-dimension (k = K) needs no permutation.
    """
    x = as_tensor5(x)
    f, k = spec.factorization, spec.k
    f.check(x.shape[1])
    w.check(spec)
    if fast_path and k == f.K:
        return conv3d(x, w.grouped(), groups=spec.groups, bias=w.bias)

    xg = to_grouped_layout(x, f, k)
    bias = None if w.bias is None else to_grouped_layout(
        w.bias.reshape(1, -1, 1, 1, 1), f, k
    ).reshape(-1)
    y = conv3d(xg, w.grouped(), groups=spec.groups, bias=bias)
    return from_grouped_layout(y, f, k)


def s_tsconv(x: np.ndarray, spec: TSConvSpec, w: TSConvWeights) -> np.ndarray:
    """Spatial TSConv, kernel (1, kh, kw)."""
    if spec.kernel[0] != 1:
        raise KernelShapeViolation(f"S-TSConv needs kt = 1, got kernel {spec.kernel}")
    return tsconv_grouped(x, spec, w)


def t_tsconv(x: np.ndarray, spec: TSConvSpec, w: TSConvWeights) -> np.ndarray:
    """Temporal TSConv, kernel (kt, 1, 1)."""
    if spec.kernel[1:] != (1, 1):
        raise KernelShapeViolation(f"T-TSConv needs kh = kw = 1, got kernel {spec.kernel}")
    return tsconv_grouped(x, spec, w)


def pw_tsconv(x: np.ndarray, spec: TSConvSpec, w: TSConvWeights) -> np.ndarray:
    """Point-wise TSConv, kernel (1, 1, 1)."""
    if spec.kernel != (1, 1, 1):
        raise KernelShapeViolation(f"PW-TSConv needs a 1x1x1 kernel, got {spec.kernel}")
    return tsconv_grouped(x, spec, w)


def pointwise_conv(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Full 1x1x1 convolution; w is (C_out, C_in, 1, 1, 1)."""
    x = as_tensor5(x)
    if w.ndim != 5 or w.shape[2:] != (1, 1, 1) or w.shape[1] != x.shape[1]:
        raise ShapeMismatch(f"pointwise_conv weight {w.shape} does not fit input {x.shape}")
    return conv3d(x, w)


def combine(xs: np.ndarray, xt: Optional[np.ndarray], mode: str = "parallel") -> np.ndarray:
    """
    Aggregate spatial and temporal branch outputs.

    parallel sums both branches; serial returns xt (already computed from xs);
    coupling returns xs (a single 3-D kernel produced it).
    """
    if mode == "parallel":
        if xt is None or xs.shape != xt.shape:
            raise ShapeMismatch(
                f"parallel combine needs equal dims, got {xs.shape} and "
                f"{None if xt is None else xt.shape}"
            )
        return xs + xt
    if mode == "serial":
        if xt is None:
            raise ShapeMismatch("serial combine needs the temporal branch output")
        return xt
    if mode == "coupling":
        return xs
    raise ValueError(f"Unknown connection mode: {mode}")


def tsconv_backward(
    x: np.ndarray, spec: TSConvSpec, w: TSConvWeights, grad_out: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Gradients (input, weight, bias) of tsconv_grouped."""
    f, k = spec.factorization, spec.k
    xg = to_grouped_layout(x, f, k)
    gg = to_grouped_layout(grad_out, f, k)
    gx, gw = conv3d_backward(xg, w.grouped(), gg, groups=spec.groups)
    gb = grad_out.sum(axis=(0, 2, 3, 4)) if w.bias is not None else None
    return from_grouped_layout(gx, f, k), gw.reshape(spec.weight_shape), gb
