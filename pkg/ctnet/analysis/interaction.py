"""
Channel interaction structure.

A batch of C probes, probe i holding ones on channel i, runs through a
module in structural mode; output channel o depends on input channel i iff
probe i produces nonzero output on o.
"""

import logging
from typing import Iterable, Sequence

import numpy as np

from ctnet.core.autograd.tensor import no_grad
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.net.layers import ForwardContext, Layer

logger = logging.getLogger(__name__)


def interaction_matrix(module: Layer, channels: int, dims: Sequence[int] = (3, 3, 3)) -> np.ndarray:
    """Boolean M[c_out, c_in]."""
    t, h, w = dims
    probes = np.zeros((channels, channels, t, h, w))
    probes[np.arange(channels), np.arange(channels)] = 1.0
    with no_grad():
        out = module.forward(ForwardContext(structural=True), probes).data
    # out[i, o] is the response of output channel o to probe i
    return np.any(out != 0, axis=(2, 3, 4)).T


def predicted_interaction(f: ChannelFactorization, axes: Iterable[int]) -> np.ndarray:
    """Channels interact iff their multi-indices agree outside the applied axes."""
    applied = set(axes)
    keep = [j for j in range(f.K) if j + 1 not in applied]
    index = np.array([f.multi_index(c) for c in range(f.product)])
    if not keep:
        return np.ones((f.product, f.product), dtype=bool)
    kept = index[:, keep]
    return np.all(kept[:, None, :] == kept[None, :, :], axis=2)
