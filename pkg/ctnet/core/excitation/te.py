"""
Tensor Excitation: spatial, temporal and channel gating built from
tensor separable convolutions on one channel sub-dimension.

    U = xs * sigmoid(BN(S-TSConv(t_pool(xs))))
    V = xt * sigmoid(BN(T-TSConv(s_pool(xt))))
    X = R  * sigmoid(BN(PW-TSConv(s_pool(R)))),  R = U + V

The channel gate pools only spatially, so it keeps the temporal axis.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel

from ctnet.core.autograd import functional as F
from ctnet.core.autograd.tensor import Tensor, lift
from ctnet.core.conv.spec import TSConvSpec, TSConvWeights
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.core.tensor.io import load_tensor, save_tensor
from ctnet.core.tensor.ops import BatchNormParams
from ctnet.error_handling import ShapeMismatch

logger = logging.getLogger(__name__)

SPATIAL_KERNEL = (1, 3, 3)
TEMPORAL_KERNEL = (3, 1, 1)
CHANNEL_KERNEL = (1, 1, 1)

GATES = ("spatial", "temporal", "channel")
GATE_KERNELS = {"spatial": SPATIAL_KERNEL, "temporal": TEMPORAL_KERNEL, "channel": CHANNEL_KERNEL}

ArrayLike = Union[np.ndarray, Tensor]
StatsSink = Optional[Dict[str, BatchNormParams]]


@dataclass(frozen=True)
class GateParams:
    """One attention conv and the BN that follows it."""
    weight: Any
    gamma: Any
    beta: Any
    running_mean: np.ndarray
    running_var: np.ndarray


@dataclass(frozen=True)
class TEParams:
    """Weights of the three excitation gates, all grouped on sub-dimension k."""
    factorization: ChannelFactorization
    k: int
    spatial: GateParams
    temporal: GateParams
    channel: GateParams

    def spec(self, gate: str) -> TSConvSpec:
        return TSConvSpec(self.factorization, self.k, GATE_KERNELS[gate])

    def gate(self, gate: str) -> GateParams:
        return getattr(self, gate)

    @classmethod
    def build(cls, factorization: ChannelFactorization, k: int, weight_fn) -> "TEParams":
        c = factorization.product
        gates = {}
        for name in GATES:
            spec = TSConvSpec(factorization, k, GATE_KERNELS[name])
            gates[name] = GateParams(
                weight=weight_fn(spec),
                gamma=np.ones(c),
                beta=np.zeros(c),
                running_mean=np.zeros(c),
                running_var=np.ones(c),
            )
        return cls(factorization, k, **gates)

    @classmethod
    def init(cls, factorization: ChannelFactorization, k: int, rng: np.random.Generator) -> "TEParams":
        return cls.build(factorization, k, lambda spec: TSConvWeights.init(spec, rng).weight)

    @classmethod
    def zeros(cls, factorization: ChannelFactorization, k: int) -> "TEParams":
        """All attention weights zero: every gate sits at sigmoid(0) = 0.5."""
        return cls.build(factorization, k, lambda spec: np.zeros(spec.weight_shape))


def _attention(
    pooled: Tensor, p: TEParams, gate: str, mode: str, stats: StatsSink
) -> Tensor:
    g = p.gate(gate)
    a = F.tsconv(pooled, p.spec(gate), g.weight)
    a, updated = F.batch_norm(a, g.gamma, g.beta, g.running_mean, g.running_var, mode=mode)
    if stats is not None:
        stats[gate] = updated
    return F.sigmoid(a)


def spatial_excitation(xs: ArrayLike, p: TEParams, mode: str = "eval", stats: StatsSink = None) -> Tensor:
    """U = xs gated by an attention map computed on the temporally pooled input."""
    xs = lift(xs)
    return F.mul_broadcast(xs, _attention(F.t_pool(xs), p, "spatial", mode, stats))


def temporal_excitation(xt: ArrayLike, p: TEParams, mode: str = "eval", stats: StatsSink = None) -> Tensor:
    """V = xt gated by an attention map computed on the spatially pooled input."""
    xt = lift(xt)
    return F.mul_broadcast(xt, _attention(F.s_pool(xt), p, "temporal", mode, stats))


def channel_excitation(r: ArrayLike, p: TEParams, mode: str = "eval", stats: StatsSink = None) -> Tensor:
    r = lift(r)
    return F.mul_broadcast(r, _attention(F.s_pool(r), p, "channel", mode, stats))


def te_apply(
    xs: ArrayLike, xt: ArrayLike, p: TEParams, mode: str = "eval", stats: StatsSink = None
) -> Tensor:
    """channel_excitation(spatial_excitation(xs) + temporal_excitation(xt))."""
    xs, xt = lift(xs), lift(xt)
    if xs.shape != xt.shape:
        raise ShapeMismatch(f"te_apply needs equal dims, got {xs.shape} and {xt.shape}")
    u = spatial_excitation(xs, p, mode, stats)
    v = temporal_excitation(xt, p, mode, stats)
    return channel_excitation(F.add(u, v), p, mode, stats)


class TESidecar(BaseModel):
    """JSON sidecar describing a saved TE bundle."""
    sizes: list
    k: int
    gates: Dict[str, list]


def save_te(directory: Union[str, Path], name: str, p: TEParams, dtype: str = "float64") -> None:
    """Write every gate tensor as a CTN1 file plus one JSON sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for gate in GATES:
        g = p.gate(gate)
        for field in ("weight", "gamma", "beta", "running_mean", "running_var"):
            save_tensor(directory / f"{name}.{gate}.{field}.ctn",
                        np.asarray(lift(getattr(g, field)).data), dtype)
    sidecar = TESidecar(
        sizes=list(p.factorization.sizes),
        k=p.k,
        gates={gate: list(GATE_KERNELS[gate]) for gate in GATES},
    )
    (directory / f"{name}.json").write_text(sidecar.model_dump_json(indent=2))


def load_te(directory: Union[str, Path], name: str) -> TEParams:
    directory = Path(directory)
    sidecar = TESidecar.model_validate(json.loads((directory / f"{name}.json").read_text()))
    f = ChannelFactorization(tuple(sidecar.sizes))
    gates = {}
    for gate in GATES:
        values = {
            field: load_tensor(directory / f"{name}.{gate}.{field}.ctn")
            for field in ("weight", "gamma", "beta", "running_mean", "running_var")
        }
        gates[gate] = GateParams(**values)
    p = TEParams(f, sidecar.k, **gates)
    for gate in GATES:
        TSConvWeights(np.asarray(p.gate(gate).weight)).check(p.spec(gate))
    return p
