"""
Network layers.

A layer is an immutable description: it names its parameters and running
statistics, computes a forward pass against a ForwardContext, and reports
its own cost for given input dims without touching any weights. Parameters
are addressed by dotted names such as "layer2.block2.ct.sub1.spatial.weight".
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from ctnet.core.autograd import functional as F
from ctnet.core.autograd.tensor import Tensor, lift
from ctnet.core.conv.kernels import out_size
from ctnet.core.conv.spec import Kernel, TSConvSpec, kernel_volume
from ctnet.core.excitation import te as excitation
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import ShapeMismatch
from ctnet.net.config import Connection, CTBlockConfig, SubOpSpec

logger = logging.getLogger(__name__)

Dims = Tuple[int, int, int, int]  # (C, T, H, W)


@dataclass(frozen=True)
class ParamSpec:
    """Name, shape and initializer of one parameter or running statistic."""
    name: str
    shape: Tuple[int, ...]
    init: str  # he | linear | ones | zeros
    fan_in: int = 1

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def initial(self, rng: np.random.Generator) -> np.ndarray:
        if self.init == "he":
            bound = math.sqrt(6.0 / self.fan_in)
            return rng.uniform(-bound, bound, size=self.shape)
        if self.init == "linear":
            bound = 1.0 / math.sqrt(self.fan_in)
            return rng.uniform(-bound, bound, size=self.shape)
        if self.init == "ones":
            return np.ones(self.shape)
        return np.zeros(self.shape)


@dataclass(frozen=True)
class CostEntry:
    """MACs and parameter count of one layer at batch 1."""
    name: str
    kind: str
    out_dims: Dims
    macs: int
    params: int


class ForwardContext:
    """
    Everything a forward pass reads besides the input: parameters (arrays or
    gradient-tracking Tensors), BN running statistics, and the mode flags.

    Structural mode replaces every weight by ones and bypasses BN and TE
    gating, so influence depends only on connectivity.
    """

    def __init__(
        self,
        params: Optional[Mapping[str, Any]] = None,
        state: Optional[Mapping[str, np.ndarray]] = None,
        train: bool = False,
        structural: bool = False,
    ):
        self.params = params or {}
        self.state = state or {}
        self.train = train
        self.structural = structural
        self.updates: Dict[str, np.ndarray] = {}

    @property
    def bn_mode(self) -> str:
        return "train" if self.train else "eval"

    def get(self, spec: ParamSpec):
        if self.structural:
            return np.zeros(spec.shape) if spec.init == "zeros" else np.ones(spec.shape)
        try:
            value = self.params[spec.name]
        except KeyError:
            raise ShapeMismatch(f"Missing parameter {spec.name}", {"name": spec.name})
        if tuple(lift(value).shape) != spec.shape:
            raise ShapeMismatch(
                f"Parameter {spec.name} has shape {lift(value).shape}, expected {spec.shape}"
            )
        return value

    def stat(self, spec: ParamSpec) -> np.ndarray:
        value = self.state.get(spec.name)
        return spec.initial(None) if value is None else value


class Layer:
    """Base class: a named node of the module tree."""

    def __init__(self, name: str):
        self.name = name

    def children(self) -> List["Layer"]:
        return []

    def param_specs(self) -> List[ParamSpec]:
        return []

    def state_specs(self) -> List[ParamSpec]:
        return []

    def walk(self) -> Iterator["Layer"]:
        yield self
        for child in self.children():
            yield from child.walk()

    def all_param_specs(self) -> List[ParamSpec]:
        return [p for layer in self.walk() for p in layer.param_specs()]

    def all_state_specs(self) -> List[ParamSpec]:
        return [s for layer in self.walk() for s in layer.state_specs()]

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        raise NotImplementedError

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        rows: List[CostEntry] = []
        for child in self.children():
            child_rows, dims = child.cost(dims)
            rows.extend(child_rows)
        return rows, dims

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class Conv(Layer):
    """Dense (optionally grouped) 3-D convolution with same padding."""

    def __init__(
        self,
        name: str,
        c_in: int,
        c_out: int,
        kernel: Kernel = (1, 1, 1),
        stride: Tuple[int, int, int] = (1, 1, 1),
        groups: int = 1,
        bias: bool = False,
    ):
        super().__init__(name)
        self.c_in, self.c_out = c_in, c_out
        self.kernel, self.stride, self.groups = tuple(kernel), tuple(stride), groups
        self.bias = bias
        fan_in = (c_in // groups) * kernel_volume(self.kernel)
        self.weight = ParamSpec(f"{name}.weight", (c_out, c_in // groups) + self.kernel, "he", fan_in)
        self.bias_spec = ParamSpec(f"{name}.bias", (c_out,), "zeros") if bias else None

    def param_specs(self) -> List[ParamSpec]:
        return [self.weight] + ([self.bias_spec] if self.bias_spec else [])

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        bias = ctx.get(self.bias_spec) if self.bias_spec else None
        return F.conv3d(x, ctx.get(self.weight), groups=self.groups, stride=self.stride, bias=bias)

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        _, t, h, w = dims
        out = (self.c_out,) + tuple(
            out_size(n, k, s) for n, k, s in zip((t, h, w), self.kernel, self.stride)
        )
        positions = out[1] * out[2] * out[3]
        macs = positions * self.c_out * (self.c_in // self.groups) * kernel_volume(self.kernel)
        params = sum(p.size for p in self.param_specs())
        return [CostEntry(self.name, "conv", out, macs, params)], out


class BatchNorm(Layer):
    def __init__(self, name: str, channels: int):
        super().__init__(name)
        self.channels = channels
        self.gamma = ParamSpec(f"{name}.gamma", (channels,), "ones")
        self.beta = ParamSpec(f"{name}.beta", (channels,), "zeros")
        self.running_mean = ParamSpec(f"{name}.running_mean", (channels,), "zeros")
        self.running_var = ParamSpec(f"{name}.running_var", (channels,), "ones")

    def param_specs(self) -> List[ParamSpec]:
        return [self.gamma, self.beta]

    def state_specs(self) -> List[ParamSpec]:
        return [self.running_mean, self.running_var]

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        if ctx.structural:
            return lift(x)
        out, updated = F.batch_norm(
            x,
            ctx.get(self.gamma),
            ctx.get(self.beta),
            ctx.stat(self.running_mean),
            ctx.stat(self.running_var),
            mode=ctx.bn_mode,
        )
        if ctx.train:
            ctx.updates[self.running_mean.name] = updated.running_mean
            ctx.updates[self.running_var.name] = updated.running_var
        return out

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        return [CostEntry(self.name, "bn", dims, 0, 2 * self.channels)], dims


class TSConvLayer(Layer):
    """Tensor separable convolution on one channel sub-dimension."""

    def __init__(self, name: str, spec: TSConvSpec):
        super().__init__(name)
        self.spec = spec
        self.weight = ParamSpec(f"{name}.weight", spec.weight_shape, "he", spec.fan_in)

    def param_specs(self) -> List[ParamSpec]:
        return [self.weight]

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        return F.tsconv(x, self.spec, ctx.get(self.weight))

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        _, t, h, w = dims
        return [CostEntry(self.name, "tsconv", dims, self.spec.macs(t, h, w), self.weight.size)], dims


class TensorExcitation(Layer):
    """Spatial, temporal and channel gates on sub-dimension k."""

    def __init__(self, name: str, factorization: ChannelFactorization, k: int):
        super().__init__(name)
        self.factorization, self.k = factorization, k
        channels = factorization.product
        self.convs = {
            gate: TSConvLayer(f"{name}.{gate}", TSConvSpec(factorization, k, kernel))
            for gate, kernel in excitation.GATE_KERNELS.items()
        }
        self.bns = {gate: BatchNorm(f"{name}.{gate}_bn", channels) for gate in excitation.GATES}

    def children(self) -> List[Layer]:
        return [layer for gate in excitation.GATES for layer in (self.convs[gate], self.bns[gate])]

    def params(self, ctx: ForwardContext) -> excitation.TEParams:
        gates = {}
        for gate in excitation.GATES:
            bn = self.bns[gate]
            gates[gate] = excitation.GateParams(
                weight=ctx.get(self.convs[gate].weight),
                gamma=ctx.get(bn.gamma),
                beta=ctx.get(bn.beta),
                running_mean=ctx.stat(bn.running_mean),
                running_var=ctx.stat(bn.running_var),
            )
        return excitation.TEParams(self.factorization, self.k, **gates)

    def entries(self, p: excitation.TEParams) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
        """Inverse of params(): (parameters, running statistics) under this layer's names."""
        params: Dict[str, np.ndarray] = {}
        state: Dict[str, np.ndarray] = {}
        for gate in excitation.GATES:
            g, bn = p.gate(gate), self.bns[gate]
            params[self.convs[gate].weight.name] = np.asarray(g.weight)
            params[bn.gamma.name] = np.asarray(g.gamma)
            params[bn.beta.name] = np.asarray(g.beta)
            state[bn.running_mean.name] = np.asarray(g.running_mean)
            state[bn.running_var.name] = np.asarray(g.running_var)
        return params, state

    def _record(self, ctx: ForwardContext, stats: Dict) -> None:
        if not ctx.train:
            return
        for gate, updated in stats.items():
            bn = self.bns[gate]
            ctx.updates[bn.running_mean.name] = updated.running_mean
            ctx.updates[bn.running_var.name] = updated.running_var

    def _run(self, ctx: ForwardContext, fn, *inputs) -> Tensor:
        if ctx.structural:
            return lift(inputs[0]) if len(inputs) == 1 else F.add(*inputs)
        stats: Dict = {}
        out = fn(*inputs, self.params(ctx), ctx.bn_mode, stats)
        self._record(ctx, stats)
        return out

    def spatial(self, ctx: ForwardContext, xs: Tensor) -> Tensor:
        return self._run(ctx, excitation.spatial_excitation, xs)

    def temporal(self, ctx: ForwardContext, xt: Tensor) -> Tensor:
        return self._run(ctx, excitation.temporal_excitation, xt)

    def channel(self, ctx: ForwardContext, r: Tensor) -> Tensor:
        return self._run(ctx, excitation.channel_excitation, r)

    def apply(self, ctx: ForwardContext, xs: Tensor, xt: Tensor) -> Tensor:
        return self._run(ctx, excitation.te_apply, xs, xt)

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        c, t, h, w = dims
        pooled = {"spatial": (c, 1, h, w), "temporal": (c, t, 1, 1), "channel": (c, t, 1, 1)}
        rows: List[CostEntry] = []
        for gate in excitation.GATES:
            rows.extend(self.convs[gate].cost(pooled[gate])[0])
            rows.extend(self.bns[gate].cost(pooled[gate])[0])
        return rows, dims


class SubOp(Layer):
    """
    One CT-Module sub-operation on sub-dimension `spec.axis`.

    parallel: relu(BN(S(x)) + BN(T(x)))            TE: relu(te(xs, xt))
    serial:   relu(BN(T(relu(BN(S(x))))))           TE gates each stage
    coupling: relu(BN(C(x)))                        TE: relu(CE(SE(z) + TE(z)))
    """

    def __init__(self, name: str, factorization: ChannelFactorization, spec: SubOpSpec, with_te: bool):
        super().__init__(name)
        self.spec = spec
        channels = factorization.product
        if spec.connection is Connection.COUPLING:
            self.conv = TSConvLayer(f"{name}.conv", TSConvSpec(factorization, spec.axis, spec.spatial))
            self.bn = BatchNorm(f"{name}.bn", channels)
        else:
            self.spatial = TSConvLayer(f"{name}.spatial", TSConvSpec(factorization, spec.axis, spec.spatial))
            self.spatial_bn = BatchNorm(f"{name}.spatial_bn", channels)
            self.temporal = TSConvLayer(f"{name}.temporal", TSConvSpec(factorization, spec.axis, spec.temporal))
            self.temporal_bn = BatchNorm(f"{name}.temporal_bn", channels)
        self.te = TensorExcitation(f"{name}.te", factorization, spec.axis) if with_te else None

    def children(self) -> List[Layer]:
        if self.spec.connection is Connection.COUPLING:
            layers = [self.conv, self.bn]
        else:
            layers = [self.spatial, self.spatial_bn, self.temporal, self.temporal_bn]
        return layers + ([self.te] if self.te else [])

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        connection = self.spec.connection
        if connection is Connection.COUPLING:
            z = self.bn.forward(ctx, self.conv.forward(ctx, x))
            if self.te:
                z = self.te.channel(ctx, F.add(self.te.spatial(ctx, z), self.te.temporal(ctx, z)))
            return F.relu(z)

        xs = self.spatial_bn.forward(ctx, self.spatial.forward(ctx, x))
        if connection is Connection.PARALLEL:
            xt = self.temporal_bn.forward(ctx, self.temporal.forward(ctx, x))
            y = self.te.apply(ctx, xs, xt) if self.te else F.add(xs, xt)
            return F.relu(y)

        if self.te:
            xs = self.te.spatial(ctx, xs)
        xt = self.temporal_bn.forward(ctx, self.temporal.forward(ctx, F.relu(xs)))
        if self.te:
            xt = self.te.channel(ctx, self.te.temporal(ctx, xt))
        return F.relu(xt)

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        rows: List[CostEntry] = []
        for child in self.children():
            rows.extend(child.cost(dims)[0])
        return rows, dims


class CTModule(Layer):
    """K sub-operations, with optional point-wise convs between them."""

    def __init__(self, name: str, cfg: CTBlockConfig):
        super().__init__(name)
        self.cfg = cfg
        self.subops = [
            SubOp(f"{name}.sub{i}", cfg.factorization, op, cfg.with_te)
            for i, op in enumerate(cfg.subops, 1)
        ]
        self.pws: List[Tuple[Conv, BatchNorm]] = []
        if cfg.with_pw:
            self.pws = [
                (Conv(f"{name}.pw{i}", cfg.channels, cfg.channels), BatchNorm(f"{name}.pw{i}_bn", cfg.channels))
                for i in range(1, len(self.subops))
            ]

    def children(self) -> List[Layer]:
        layers: List[Layer] = []
        for i, sub in enumerate(self.subops):
            layers.append(sub)
            if i < len(self.pws):
                layers.extend(self.pws[i])
        return layers

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        x = lift(x)
        if x.shape[1] != self.cfg.channels:
            raise ShapeMismatch(
                f"{self.name} expects {self.cfg.channels} channels, got {x.shape[1]}"
            )
        for i, sub in enumerate(self.subops):
            x = sub.forward(ctx, x)
            if i < len(self.pws):
                conv, bn = self.pws[i]
                x = F.relu(bn.forward(ctx, conv.forward(ctx, x)))
        return x


class Bottleneck(Layer):
    """
    ResNet bottleneck: 1x1 reduce, 3x3 (or CT-Module), 1x1 expand, shortcut.

    The plain block strides in its 1x3x3 conv; a CT-Block keeps the module
    C -> C at fixed resolution and strides in the first 1x1 conv instead.
    """

    def __init__(
        self,
        name: str,
        c_in: int,
        width: int,
        stride: int = 1,
        expansion: int = 4,
        ct: Optional[CTBlockConfig] = None,
    ):
        super().__init__(name)
        c_out = width * expansion
        spatial = (1, stride, stride)
        self.c_in, self.c_out = c_in, c_out
        self.conv1 = Conv(f"{name}.conv1", c_in, width, stride=spatial if ct else (1, 1, 1))
        self.bn1 = BatchNorm(f"{name}.bn1", width)
        if ct is not None:
            self.ct: Optional[CTModule] = CTModule(f"{name}.ct", ct)
            self.conv2 = self.bn2 = None
        else:
            self.ct = None
            self.conv2 = Conv(f"{name}.conv2", width, width, (1, 3, 3), stride=spatial)
            self.bn2 = BatchNorm(f"{name}.bn2", width)
        self.conv3 = Conv(f"{name}.conv3", width, c_out)
        self.bn3 = BatchNorm(f"{name}.bn3", c_out)
        self.downsample: Optional[Tuple[Conv, BatchNorm]] = None
        if stride != 1 or c_in != c_out:
            self.downsample = (
                Conv(f"{name}.downsample", c_in, c_out, stride=spatial),
                BatchNorm(f"{name}.downsample_bn", c_out),
            )

    @property
    def is_ct(self) -> bool:
        return self.ct is not None

    def children(self) -> List[Layer]:
        middle = [self.ct] if self.ct else [self.conv2, self.bn2]
        layers = [self.conv1, self.bn1] + middle + [self.conv3, self.bn3]
        return layers + (list(self.downsample) if self.downsample else [])

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        y = F.relu(self.bn1.forward(ctx, self.conv1.forward(ctx, x)))
        if self.ct:
            y = self.ct.forward(ctx, y)
        else:
            y = F.relu(self.bn2.forward(ctx, self.conv2.forward(ctx, y)))
        y = self.bn3.forward(ctx, self.conv3.forward(ctx, y))
        shortcut = x
        if self.downsample:
            conv, bn = self.downsample
            shortcut = bn.forward(ctx, conv.forward(ctx, x))
        return F.relu(F.add(y, shortcut))

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        rows: List[CostEntry] = []
        main = [self.conv1, self.bn1] + ([self.ct] if self.ct else [self.conv2, self.bn2]) \
            + [self.conv3, self.bn3]
        out = dims
        for layer in main:
            layer_rows, out = layer.cost(out)
            rows.extend(layer_rows)
        if self.downsample:
            short = dims
            for layer in self.downsample:
                layer_rows, short = layer.cost(short)
                rows.extend(layer_rows)
        return rows, out


class MaxPool(Layer):
    """3x3 stride-2 spatial max pooling."""

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        return F.max_pool_spatial(x, kernel=3, stride=2)

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        c, t, h, w = dims
        out = (c, t, out_size(h, 3, 2), out_size(w, 3, 2))
        return [CostEntry(self.name, "pool", out, 0, 0)], out


class InputStem(Layer):
    def __init__(self, name: str, in_channels: int, out_channels: int, kind: str = "r50"):
        super().__init__(name)
        self.kind = kind
        if kind == "r50":
            self.conv = Conv(f"{name}.conv", in_channels, out_channels, (1, 7, 7), stride=(1, 2, 2))
            self.pool: Optional[MaxPool] = MaxPool(f"{name}.pool")
        else:
            self.conv = Conv(f"{name}.conv", in_channels, out_channels, (1, 3, 3), stride=(1, 2, 2))
            self.pool = None
        self.bn = BatchNorm(f"{name}.bn", out_channels)

    def children(self) -> List[Layer]:
        return [self.conv, self.bn] + ([self.pool] if self.pool else [])

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        y = F.relu(self.bn.forward(ctx, self.conv.forward(ctx, x)))
        return self.pool.forward(ctx, y) if self.pool else y


class Head(Layer):
    """Global average pool over (T, H, W) and a linear classifier."""

    def __init__(self, name: str, features: int, classes: int):
        super().__init__(name)
        self.features, self.classes = features, classes
        self.weight = ParamSpec(f"{name}.weight", (classes, features), "linear", features)
        self.bias = ParamSpec(f"{name}.bias", (classes,), "zeros")

    def param_specs(self) -> List[ParamSpec]:
        return [self.weight, self.bias]

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        return F.linear(F.global_pool(x), ctx.get(self.weight), ctx.get(self.bias))

    def cost(self, dims: Dims) -> Tuple[List[CostEntry], Dims]:
        out = (self.classes, 1, 1, 1)
        macs = self.features * self.classes
        return [CostEntry(self.name, "linear", out, macs, macs + self.classes)], out
