"""CT-Block assembly, presets and the residual backbone."""

from .config import (
    BlockTemplate,
    Connection,
    CTBlockConfig,
    NetSpec,
    Preset,
    StageSpec,
    Stem,
    SubOpSpec,
    Variant,
    balanced,
    load_net_config,
    parse_net_config,
    rounded_middle,
)
from .presets import build_preset, preset_template
from .layers import CostEntry, ForwardContext
from .network import Network, build_ct_block, build_network, forward, init_params

__all__ = [
    "BlockTemplate",
    "Connection",
    "CTBlockConfig",
    "NetSpec",
    "Preset",
    "StageSpec",
    "Stem",
    "SubOpSpec",
    "Variant",
    "balanced",
    "load_net_config",
    "parse_net_config",
    "rounded_middle",
    "build_preset",
    "preset_template",
    "CostEntry",
    "ForwardContext",
    "Network",
    "build_ct_block",
    "build_network",
    "forward",
    "init_params",
]
