"""
Architecture descriptions: CT-Block configuration, backbone NetSpec, the
channel factorization rules and the `[net]` / `[block]` config file format.
"""

import configparser
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

from ctnet.core.conv.spec import Kernel, check_kernel
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import (
    ConfigInvalid,
    FactorizationMismatch,
    KernelShapeViolation,
)

logger = logging.getLogger(__name__)

Position = Tuple[int, int]  # (stage, block), both 1-based


class Connection(Enum):
    """How the spatial and temporal kernels of one sub-operation are wired."""
    PARALLEL = "parallel"
    SERIAL = "serial"
    COUPLING = "coupling"


class Variant(Enum):
    SIMPLE = "simple"
    FULL = "full"


class Preset(Enum):
    TSN = "tsn"
    C3D = "c3d"
    R21D = "r21d"
    CSN = "csn"
    CTNET = "ctnet"


def _divisors(n: int) -> List[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _closest_divisor(n: int, target: float) -> int:
    # ties resolve toward the smaller divisor
    return min(_divisors(n), key=lambda d: (abs(d - target), d))


def rounded_middle(channels: int, c2: Optional[int] = None) -> ChannelFactorization:
    """
    K=2 split C = C1 x C2 with C2 = floor(sqrt(C)) when that divides C,
    otherwise the divisor closest to sqrt(C). An explicit c2 overrides.
    """
    if channels < 1:
        raise ConfigInvalid(f"channels must be positive, got {channels}")
    if c2 is None:
        root = math.isqrt(channels)
        c2 = root if channels % root == 0 else _closest_divisor(channels, math.sqrt(channels))
    if channels % c2:
        raise FactorizationMismatch(
            f"c2={c2} does not divide {channels} channels", {"c2": c2, "channels": channels}
        )
    return ChannelFactorization.of(channels // c2, c2)


def balanced(channels: int, k: int) -> ChannelFactorization:
    """K near-equal divisors of C, largest first."""
    if k < 1:
        raise ConfigInvalid(f"K must be >= 1, got {k}")
    sizes = []
    remaining = channels
    for left in range(k, 0, -1):
        d = _closest_divisor(remaining, remaining ** (1.0 / left))
        sizes.append(d)
        remaining //= d
    return ChannelFactorization(tuple(sorted(sizes, reverse=True)))


@dataclass(frozen=True)
class SubOpSpec:
    """
    One sub-operation of a CT-Module acting on sub-dimension `axis`.

    Parallel/serial sub-ops carry (spatial, temporal) kernels; a coupling
    sub-op carries a single 3-D kernel.
    """
    axis: int
    connection: Connection = Connection.PARALLEL
    kernels: Tuple[Kernel, ...] = ((1, 3, 3), (3, 1, 1))

    def __post_init__(self):
        kernels = tuple(check_kernel(k) for k in self.kernels)
        object.__setattr__(self, "kernels", kernels)
        if self.connection is Connection.COUPLING:
            if len(kernels) != 1:
                raise ConfigInvalid(f"A coupling sub-op takes one kernel, got {len(kernels)}")
            return
        if len(kernels) != 2:
            raise ConfigInvalid(
                f"A {self.connection.value} sub-op takes a spatial and a temporal kernel"
            )
        spatial, temporal = kernels
        if spatial[0] != 1:
            raise KernelShapeViolation(f"Spatial kernel needs kt = 1, got {spatial}")
        if temporal[1:] != (1, 1):
            raise KernelShapeViolation(f"Temporal kernel needs kh = kw = 1, got {temporal}")

    @property
    def spatial(self) -> Kernel:
        return self.kernels[0]

    @property
    def temporal(self) -> Optional[Kernel]:
        return None if self.connection is Connection.COUPLING else self.kernels[1]


@dataclass(frozen=True)
class CTBlockConfig:
    """A fully resolved CT-Module for a given bottleneck width."""
    channels: int
    factorization: ChannelFactorization
    subops: Tuple[SubOpSpec, ...]
    with_pw: bool = False
    with_te: bool = False

    def __post_init__(self):
        self.factorization.check(self.channels)
        if not self.subops:
            raise ConfigInvalid("A CT-Module needs at least one sub-operation")
        for op in self.subops:
            self.factorization.check_axis(op.axis)

    @property
    def K(self) -> int:
        return self.factorization.K


def parse_kernel_token(token: str) -> Tuple[Connection, Tuple[Kernel, ...]]:
    """
    "3/3" -> parallel-style pair (1,3,3) / (3,1,1); "5/1" -> (1,5,5) / (1,1,1);
    "3x3x3" -> a single coupled kernel.
    """
    token = token.strip()
    try:
        if "/" in token:
            s, t = (int(v) for v in token.split("/"))
            return Connection.PARALLEL, ((1, s, s), (t, 1, 1))
        if "x" in token:
            kt, kh, kw = (int(v) for v in token.split("x"))
            return Connection.COUPLING, ((kt, kh, kw),)
        n = int(token)
        return Connection.PARALLEL, ((1, n, n), (n, 1, 1))
    except ValueError:
        raise ConfigInvalid(f"Cannot parse kernel token {token!r}")


@dataclass(frozen=True)
class BlockTemplate:
    """
    Width-independent CT-Block description; `resolve(C)` yields the
    CTBlockConfig for a bottleneck of width C.
    """
    preset: Preset = Preset.CTNET
    k: int = 2
    factorization: str = "rounded-middle"  # rounded-middle | balanced | explicit
    sizes: Optional[Tuple[int, ...]] = None
    c2: Optional[int] = None
    kernels: Optional[Tuple[str, ...]] = None
    connection: Connection = Connection.PARALLEL
    pw: bool = True
    te: bool = True

    def __post_init__(self):
        if self.factorization not in ("rounded-middle", "balanced", "explicit"):
            raise ConfigInvalid(f"Unknown factorization rule: {self.factorization}")
        if self.factorization == "explicit" and not self.sizes:
            raise ConfigInvalid("Explicit factorization needs sizes")
        if self.k < 1:
            raise ConfigInvalid(f"K must be >= 1, got {self.k}")
        if self.kernels is not None and len(self.kernels) != self.k:
            raise ConfigInvalid(f"{len(self.kernels)} kernel tokens given for K={self.k}")

    def factorize(self, channels: int) -> ChannelFactorization:
        if self.factorization == "explicit":
            f = ChannelFactorization(tuple(self.sizes))
            f.check(channels)
            return f
        if self.factorization == "rounded-middle":
            if self.k != 2:
                raise ConfigInvalid("The rounded-middle rule needs K = 2")
            return rounded_middle(channels, self.c2)
        return balanced(channels, self.k)

    def resolve(self, channels: int, variant: Variant = Variant.FULL) -> CTBlockConfig:
        from ctnet.net.presets import build_preset

        return build_preset(self.preset, channels, variant=variant, template=self)


@dataclass(frozen=True)
class StageSpec:
    blocks: int
    width: int
    stride: int = 1

    def __post_init__(self):
        if self.blocks < 1 or self.width < 1 or self.stride < 1:
            raise ConfigInvalid(f"Invalid stage {self}")


class Stem(Enum):
    R50 = "r50"
    TOY = "toy"


R50_STAGES = (
    StageSpec(3, 64, 1),
    StageSpec(4, 128, 2),
    StageSpec(6, 256, 2),
    StageSpec(3, 512, 2),
)

TOY_STAGES = (StageSpec(1, 8, 1), StageSpec(1, 16, 2))


@dataclass(frozen=True)
class NetSpec:
    """Backbone shape, replacement pattern and the CT-Block template."""
    frames: int = 8
    resolution: int = 256
    in_channels: int = 3
    classes: int = 174
    stem: Stem = Stem.R50
    stages: Tuple[StageSpec, ...] = R50_STAGES
    expansion: int = 4
    replacement: Union[str, Tuple[Position, ...]] = "every-second"
    replacement_limit: Optional[int] = None
    variant: Variant = Variant.FULL
    block: BlockTemplate = field(default_factory=BlockTemplate)

    def __post_init__(self):
        if min(self.frames, self.resolution, self.in_channels, self.classes) < 1:
            raise ConfigInvalid("frames, resolution, in_channels and classes must be positive")
        if not self.stages:
            raise ConfigInvalid("A network needs at least one stage")
        if isinstance(self.replacement, str):
            if self.replacement not in ("every-second", "all", "none"):
                raise ConfigInvalid(f"Unknown replacement pattern: {self.replacement}")
        else:
            for stage, block in self.replacement:
                if not 1 <= stage <= len(self.stages):
                    raise ConfigInvalid(f"Replacement stage {stage} outside 1..{len(self.stages)}")
                if not 1 <= block <= self.stages[stage - 1].blocks:
                    raise ConfigInvalid(f"Replacement block {stage}.{block} does not exist")
        if self.replacement_limit is not None and self.replacement_limit < 0:
            raise ConfigInvalid("replacement_limit must be >= 0")

    @property
    def total_stride(self) -> int:
        stem = 4 if self.stem is Stem.R50 else 2
        return stem * math.prod(s.stride for s in self.stages)

    @property
    def stem_channels(self) -> int:
        return 64 if self.stem is Stem.R50 else 8

    def pattern_positions(self) -> List[Position]:
        """Replacement positions before the deepest-first limit is applied."""
        if self.block.preset is Preset.TSN or self.replacement == "none":
            return []
        if self.replacement == "all":
            return [(s, b) for s, st in enumerate(self.stages, 1) for b in range(1, st.blocks + 1)]
        if self.replacement == "every-second":
            return [(s, b) for s, st in enumerate(self.stages, 1) for b in range(2, st.blocks + 1, 2)]
        return sorted(set(self.replacement))

    def replaced_positions(self) -> Set[Position]:
        """Positions hosting a CT-Block; a limit keeps the deepest ones."""
        positions = self.pattern_positions()
        if self.replacement_limit is not None:
            positions = sorted(positions, key=lambda p: (-p[0], p[1]))[: self.replacement_limit]
        return set(positions)

    def with_block(self, **changes) -> "NetSpec":
        return replace(self, block=replace(self.block, **changes))

    @classmethod
    def r50(cls, preset: Preset = Preset.CTNET, **kwargs) -> "NetSpec":
        block = kwargs.pop("block", None) or BlockTemplate(preset=preset)
        return cls(block=block, **kwargs)

    @classmethod
    def toy(cls, preset: Preset = Preset.CTNET, classes: int = 4, **kwargs) -> "NetSpec":
        block = kwargs.pop("block", None) or BlockTemplate(preset=preset)
        defaults = dict(
            frames=8,
            resolution=32,
            in_channels=1,
            classes=classes,
            stem=Stem.TOY,
            stages=TOY_STAGES,
            replacement="all",
        )
        defaults.update(kwargs)
        return cls(block=block, **defaults)


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

NET_KEYS = {
    "frames", "resolution", "in_channels", "classes", "stem", "stages", "widths",
    "strides", "expansion", "replacement", "replacement_limit", "variant",
}
BLOCK_KEYS = {"preset", "k", "factorization", "c2", "kernels", "connection", "pw", "te"}

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _ints(value: str, key: str) -> List[int]:
    try:
        return [int(v) for v in value.replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigInvalid(f"{key} must be a comma-separated list of integers, got {value!r}")


def _int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigInvalid(f"{key} must be an integer, got {value!r}")


def _bool(value: str, key: str) -> bool:
    try:
        return _BOOL[value.strip().lower()]
    except KeyError:
        raise ConfigInvalid(f"{key} must be a boolean, got {value!r}")


def _enum(cls, value: str, key: str):
    try:
        return cls(value.strip().lower())
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigInvalid(f"{key} must be one of {choices}, got {value!r}")


def parse_block_section(section: Dict[str, str]) -> BlockTemplate:
    unknown = set(section) - BLOCK_KEYS
    if unknown:
        raise ConfigInvalid(f"Unknown [block] keys: {sorted(unknown)}")
    from ctnet.net.presets import preset_template

    preset = _enum(Preset, section.get("preset", "ctnet"), "preset")
    template = preset_template(preset)
    changes: Dict[str, object] = {}

    if "k" in section:
        changes["k"] = _int(section["k"], "k")
    if "factorization" in section:
        rule = section["factorization"].strip()
        if rule in ("rounded-middle", "balanced"):
            changes["factorization"] = rule
        else:
            sizes = tuple(_ints(rule, "factorization"))
            changes.update(factorization="explicit", sizes=sizes)
            changes.setdefault("k", len(sizes))
    if "c2" in section:
        changes["c2"] = _int(section["c2"], "c2")
    if "kernels" in section:
        changes["kernels"] = tuple(t.strip() for t in section["kernels"].split(","))
    if "connection" in section:
        changes["connection"] = _enum(Connection, section["connection"], "connection")
    if "pw" in section:
        changes["pw"] = _bool(section["pw"], "pw")
    if "te" in section:
        changes["te"] = _bool(section["te"], "te")
    if "k" in changes and "kernels" not in changes and template.kernels is not None:
        changes["kernels"] = None
    return replace(template, **changes)


def _parse_replacement(value: str) -> Union[str, Tuple[Position, ...]]:
    value = value.strip()
    if value in ("every-second", "all", "none"):
        return value
    positions = []
    for token in value.split(","):
        try:
            stage, block = token.strip().split(".")
            positions.append((int(stage), int(block)))
        except ValueError:
            raise ConfigInvalid(f"Replacement entries look like 'stage.block', got {token!r}")
    return tuple(positions)


def parse_net_config(text: str) -> NetSpec:
    """Parse `[net]` / `[block]` INI text into a NetSpec."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigInvalid(f"Malformed config: {e}")
    unknown_sections = set(parser.sections()) - {"net", "block"}
    if unknown_sections:
        raise ConfigInvalid(f"Unknown config sections: {sorted(unknown_sections)}")

    block = parse_block_section(dict(parser["block"])) if parser.has_section("block") \
        else BlockTemplate()
    net = dict(parser["net"]) if parser.has_section("net") else {}
    unknown = set(net) - NET_KEYS
    if unknown:
        raise ConfigInvalid(f"Unknown [net] keys: {sorted(unknown)}")

    stem = _enum(Stem, net.get("stem", "r50"), "stem")
    kwargs: Dict[str, object] = {"stem": stem, "block": block}
    if stem is Stem.TOY:
        kwargs.update(stages=TOY_STAGES, resolution=32, in_channels=1, classes=4, replacement="all")
    for key in ("frames", "resolution", "in_channels", "classes", "expansion", "replacement_limit"):
        if key in net:
            kwargs[key] = _int(net[key], key)
    if "variant" in net:
        kwargs["variant"] = _enum(Variant, net["variant"], "variant")
    if "replacement" in net:
        kwargs["replacement"] = _parse_replacement(net["replacement"])

    if any(k in net for k in ("stages", "widths", "strides")):
        base = kwargs.get("stages", R50_STAGES)
        counts = _ints(net["stages"], "stages") if "stages" in net else [s.blocks for s in base]
        widths = _ints(net["widths"], "widths") if "widths" in net else [s.width for s in base]
        strides = _ints(net["strides"], "strides") if "strides" in net else [s.stride for s in base]
        if not len(counts) == len(widths) == len(strides):
            raise ConfigInvalid("stages, widths and strides must have equal length")
        kwargs["stages"] = tuple(StageSpec(n, w, s) for n, w, s in zip(counts, widths, strides))

    spec = NetSpec(**kwargs)
    logger.debug(f"Parsed NetSpec: {spec}")
    return spec


def load_net_config(path: Union[str, Path]) -> NetSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigInvalid(f"Cannot read config {path}: {e}")
    return parse_net_config(text)
