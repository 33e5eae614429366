"""
Degeneration presets: TSN, C3D, R(2+1)D and CSN expressed as special cases
of the CT-Module, plus CT-Net itself.
"""

import logging
from dataclasses import fields
from typing import List, Optional, Set, Tuple, Union

from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import UnknownPreset
from ctnet.net.config import (
    BlockTemplate,
    Connection,
    CTBlockConfig,
    Preset,
    SubOpSpec,
    Variant,
    parse_kernel_token,
)

logger = logging.getLogger(__name__)

_TEMPLATES = {
    Preset.TSN: BlockTemplate(preset=Preset.TSN, k=1, pw=False, te=False),
    Preset.C3D: BlockTemplate(preset=Preset.C3D, k=1, pw=False, te=False),
    Preset.R21D: BlockTemplate(preset=Preset.R21D, k=1, pw=False, te=False),
    Preset.CSN: BlockTemplate(preset=Preset.CSN, k=2, pw=False, te=False),
    Preset.CTNET: BlockTemplate(preset=Preset.CTNET),
}

# (preset, field names) pairs already warned about
_REPORTED: Set[Tuple[Preset, Tuple[str, ...]]] = set()


def as_preset(name: Union[str, Preset]) -> Preset:
    if isinstance(name, Preset):
        return name
    try:
        return Preset(str(name).strip().lower())
    except ValueError:
        raise UnknownPreset(
            f"Unknown preset {name!r}", {"known": [p.value for p in Preset]}
        )


def preset_template(name: Union[str, Preset]) -> BlockTemplate:
    """Default block template of a preset."""
    return _TEMPLATES[as_preset(name)]


def ignored_overrides(preset: Preset, template: Optional[BlockTemplate]) -> List[str]:
    """
    Template fields a fixed-structure preset would silently drop: those that
    differ both from a bare BlockTemplate and from the preset's own default.
    """
    if template is None or preset is Preset.CTNET:
        return []
    bare, default = BlockTemplate(preset=preset), _TEMPLATES[preset]
    return [
        f.name
        for f in fields(BlockTemplate)
        if f.name != "preset"
        and getattr(template, f.name) != getattr(bare, f.name)
        and getattr(template, f.name) != getattr(default, f.name)
    ]


def _ctnet_subops(template: BlockTemplate, k: int):
    tokens = template.kernels or ("3/3",) * k
    subops = []
    for axis, token in enumerate(tokens, 1):
        connection, kernels = parse_kernel_token(token)
        if connection is Connection.PARALLEL and template.connection is Connection.COUPLING:
            (_, s, _), (t, _, _) = kernels
            connection, kernels = Connection.COUPLING, ((t, s, s),)
        elif connection is Connection.PARALLEL:
            connection = template.connection
        subops.append(SubOpSpec(axis, connection, kernels))
    return tuple(subops)


def build_preset(
    name: Union[str, Preset],
    channels: int,
    variant: Variant = Variant.SIMPLE,
    template: Optional[BlockTemplate] = None,
) -> CTBlockConfig:
    """
    Expand a preset into the CT-Module it stands for at width `channels`.

    TSN keeps a plain 1x3x3 full-channel conv; C3D is K=1 coupling 3x3x3;
    R(2+1)D is a full-channel 1x3x3 followed by a full-channel 3x1x1;
    CSN is a full point-wise conv followed by a depth-wise 3x3x3
    (factorization [C, 1]); CT-Net tensorizes with parallel spatial and
    temporal TSConvs on every sub-dimension.
    """
    preset = as_preset(name)
    ignored = tuple(ignored_overrides(preset, template))
    if ignored and (preset, ignored) not in _REPORTED:
        _REPORTED.add((preset, ignored))
        logger.warning(
            f"⚠️ Preset {preset.value} has a fixed structure; ignoring block settings {list(ignored)}"
        )
    template = template or _TEMPLATES[preset]
    full = ChannelFactorization.of(channels)

    if preset is Preset.TSN:
        return CTBlockConfig(channels, full, (SubOpSpec(1, Connection.COUPLING, ((1, 3, 3),)),))
    if preset is Preset.C3D:
        return CTBlockConfig(channels, full, (SubOpSpec(1, Connection.COUPLING, ((3, 3, 3),)),))
    if preset is Preset.R21D:
        return CTBlockConfig(
            channels,
            full,
            (
                SubOpSpec(1, Connection.COUPLING, ((1, 3, 3),)),
                SubOpSpec(1, Connection.COUPLING, ((3, 1, 1),)),
            ),
        )
    if preset is Preset.CSN:
        return CTBlockConfig(
            channels,
            ChannelFactorization.of(channels, 1),
            (
                SubOpSpec(1, Connection.COUPLING, ((1, 1, 1),)),
                SubOpSpec(2, Connection.COUPLING, ((3, 3, 3),)),
            ),
        )

    f = template.factorize(channels)
    full_variant = variant is Variant.FULL
    return CTBlockConfig(
        channels,
        f,
        _ctnet_subops(template, f.K),
        with_pw=full_variant and template.pw,
        with_te=full_variant and template.te,
    )
