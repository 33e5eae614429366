"""
Backbone assembly and the functional forward pass.
"""

import logging
from dataclasses import replace
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from ctnet.core.autograd import ParamStore
from ctnet.core.autograd.tensor import Tensor, lift
from ctnet.error_handling import ShapeMismatch
from ctnet.net.config import CTBlockConfig, NetSpec, Stem, Variant
from ctnet.net.layers import (
    Bottleneck,
    CTModule,
    CostEntry,
    Dims,
    ForwardContext,
    Head,
    InputStem,
    Layer,
)

logger = logging.getLogger(__name__)


def build_ct_block(
    cfg: CTBlockConfig, variant: Union[str, Variant] = Variant.SIMPLE, name: str = "ct"
) -> CTModule:
    """CT-Module for one block; the simple variant drops PW convs and TE."""
    variant = Variant(variant) if isinstance(variant, str) else variant
    if variant is Variant.SIMPLE:
        cfg = replace(cfg, with_pw=False, with_te=False)
    return CTModule(name, cfg)


class Network(Layer):
    """Stem, residual stages and classification head."""

    def __init__(self, spec: NetSpec):
        super().__init__("net")
        self.spec = spec
        self.stem = InputStem("stem", spec.in_channels, spec.stem_channels, spec.stem.value)
        replaced = spec.replaced_positions()
        self.blocks: List[Bottleneck] = []
        c_in = spec.stem_channels
        for s, stage in enumerate(spec.stages, 1):
            for b in range(1, stage.blocks + 1):
                stride = stage.stride if b == 1 else 1
                ct = None
                if (s, b) in replaced:
                    ct = spec.block.resolve(stage.width, spec.variant)
                block = Bottleneck(f"layer{s}.block{b}", c_in, stage.width, stride, spec.expansion, ct)
                self.blocks.append(block)
                c_in = block.c_out
        self.head = Head("head", c_in, spec.classes)

    def children(self) -> List[Layer]:
        return [self.stem] + list(self.blocks) + [self.head]

    @property
    def ct_blocks(self) -> List[Bottleneck]:
        return [b for b in self.blocks if b.is_ct]

    def check_input(self, shape: Tuple[int, ...]) -> None:
        if len(shape) != 5:
            raise ShapeMismatch(f"Network input must be (N, C, T, H, W), got {shape}")
        _, c, _, h, w = shape
        if c != self.spec.in_channels:
            raise ShapeMismatch(f"Network expects {self.spec.in_channels} input channels, got {c}")
        stride = self.spec.total_stride
        if h % stride or w % stride:
            raise ShapeMismatch(
                f"Input {h}x{w} is not divisible by the total stride {stride}",
                {"height": h, "width": w, "stride": stride},
            )

    def forward(self, ctx: ForwardContext, x: Tensor) -> Tensor:
        x = lift(x)
        self.check_input(x.shape)
        for layer in self.children():
            x = layer.forward(ctx, x)
        return x

    def input_dims(self, frames: Optional[int] = None, resolution: Optional[int] = None) -> Dims:
        r = resolution or self.spec.resolution
        return (self.spec.in_channels, frames or self.spec.frames, r, r)

    def cost_rows(self, frames: Optional[int] = None, resolution: Optional[int] = None) -> List[CostEntry]:
        return self.cost(self.input_dims(frames, resolution))[0]


def build_network(spec: NetSpec) -> Network:
    net = Network(spec)
    logger.debug(
        f"Built network: {len(net.blocks)} blocks, {len(net.ct_blocks)} CT-Blocks, "
        f"stem={spec.stem.value}, variant={spec.variant.value}"
    )
    return net


def init_params(layer: Layer, rng: np.random.Generator) -> ParamStore:
    """Initialize every parameter of the tree in walk order."""
    store = ParamStore()
    for spec in layer.all_param_specs():
        store.add(spec.name, spec.initial(rng))
    for spec in layer.all_state_specs():
        store.add_state(spec.name, spec.initial(rng))
    return store


def forward(
    layer: Layer,
    params: Union[ParamStore, Mapping[str, Any]],
    x,
    train: bool = False,
    structural: bool = False,
    state: Optional[Mapping[str, np.ndarray]] = None,
) -> Tuple[Tensor, Dict[str, np.ndarray]]:
    """
    Run a layer (usually a Network) and return its output plus BN running
    statistic updates (empty unless train=True). Parameters are never mutated.
    """
    if isinstance(params, ParamStore):
        state = params.state if state is None else state
        params = params.params
    ctx = ForwardContext(params, state, train=train, structural=structural)
    out = layer.forward(ctx, lift(x))
    return out, ctx.updates
