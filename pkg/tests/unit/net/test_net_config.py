"""
Tests for factorization rules, block templates, replacement patterns and
the INI config format.
"""

import pytest

from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import (
    ConfigInvalid,
    FactorizationMismatch,
    KernelShapeViolation,
    exit_code_for,
)
from ctnet.net.config import (
    BlockTemplate,
    Connection,
    CTBlockConfig,
    NetSpec,
    Preset,
    Stem,
    SubOpSpec,
    Variant,
    balanced,
    parse_kernel_token,
    parse_net_config,
    rounded_middle,
)


@pytest.mark.unit
class TestFactorizationRules:
    """Rounded-middle and balanced splits."""

    @pytest.mark.parametrize(
        "channels, sizes",
        [(64, (8, 8)), (128, (16, 8)), (256, (16, 16)), (512, (32, 16)), (8, (4, 2)), (32, (8, 4))],
    )
    def test_rounded_middle(self, channels, sizes):
        assert rounded_middle(channels).sizes == sizes

    def test_rounded_middle_explicit_c2(self):
        assert rounded_middle(256, 4).sizes == (64, 4)
        with pytest.raises(FactorizationMismatch):
            rounded_middle(256, 3)

    @pytest.mark.parametrize(
        "channels, k, sizes",
        [(64, 3, (4, 4, 4)), (12, 2, (4, 3)), (64, 1, (64,)), (16, 4, (2, 2, 2, 2)), (7, 2, (7, 1))],
    )
    def test_balanced(self, channels, k, sizes):
        assert balanced(channels, k).sizes == sizes


@pytest.mark.unit
class TestSubOps:
    """Kernel tokens and sub-op validation."""

    def test_parse_kernel_token(self):
        assert parse_kernel_token("3/3") == (Connection.PARALLEL, ((1, 3, 3), (3, 1, 1)))
        assert parse_kernel_token("5/1") == (Connection.PARALLEL, ((1, 5, 5), (1, 1, 1)))
        assert parse_kernel_token("3") == (Connection.PARALLEL, ((1, 3, 3), (3, 1, 1)))
        assert parse_kernel_token("3x3x3") == (Connection.COUPLING, ((3, 3, 3),))

    def test_bad_token(self):
        with pytest.raises(ConfigInvalid):
            parse_kernel_token("three")

    def test_spatial_kernel_must_be_flat_in_time(self):
        with pytest.raises(KernelShapeViolation):
            SubOpSpec(1, Connection.PARALLEL, ((3, 3, 3), (3, 1, 1)))

    def test_coupling_takes_one_kernel(self):
        with pytest.raises(ConfigInvalid):
            SubOpSpec(1, Connection.COUPLING, ((1, 3, 3), (3, 1, 1)))

    def test_block_config_checks_product(self):
        with pytest.raises(FactorizationMismatch):
            CTBlockConfig(10, ChannelFactorization.of(2, 3), (SubOpSpec(1),))

    def test_block_config_checks_axis(self):
        with pytest.raises(ConfigInvalid):
            CTBlockConfig(6, ChannelFactorization.of(2, 3), (SubOpSpec(3),))


@pytest.mark.unit
class TestBlockTemplate:
    """Width-independent block descriptions."""

    def test_default_resolves_full_ctnet(self):
        cfg = BlockTemplate().resolve(64)
        assert cfg.factorization.sizes == (8, 8)
        assert cfg.with_pw and cfg.with_te
        assert [op.axis for op in cfg.subops] == [1, 2]

    def test_simple_variant_drops_pw_and_te(self):
        cfg = BlockTemplate().resolve(64, Variant.SIMPLE)
        assert not cfg.with_pw and not cfg.with_te

    def test_rounded_middle_needs_k2(self):
        with pytest.raises(ConfigInvalid):
            BlockTemplate(k=3).resolve(64)

    def test_kernel_token_count(self):
        with pytest.raises(ConfigInvalid):
            BlockTemplate(kernels=("3/3",))

    def test_coupling_connection_fuses_tokens(self):
        cfg = BlockTemplate(connection=Connection.COUPLING, kernels=("3/1", "3/1")).resolve(16)
        assert all(op.kernels == ((1, 3, 3),) for op in cfg.subops)


@pytest.mark.unit
class TestReplacement:
    """Which bottlenecks host a CT-Block."""

    def test_every_second_on_r50(self):
        spec = NetSpec.r50()
        assert spec.replaced_positions() == {(1, 2), (2, 2), (2, 4), (3, 2), (3, 4), (3, 6), (4, 2)}

    def test_limit_keeps_deepest(self):
        assert NetSpec.r50(replacement_limit=1).replaced_positions() == {(4, 2)}
        assert NetSpec.r50(replacement_limit=4).replaced_positions() == {(4, 2), (3, 2), (3, 4), (3, 6)}
        assert len(NetSpec.r50(replacement_limit=6).replaced_positions()) == 6

    def test_tsn_replaces_nothing(self):
        assert NetSpec.r50(Preset.TSN).replaced_positions() == set()

    def test_explicit_positions_are_validated(self):
        with pytest.raises(ConfigInvalid):
            NetSpec.r50(replacement=((4, 4),))

    def test_total_stride(self):
        assert NetSpec.r50().total_stride == 32
        assert NetSpec.toy().total_stride == 4


@pytest.mark.unit
class TestConfigFile:
    """The [net] / [block] INI format."""

    def test_toy_stem_defaults(self):
        spec = parse_net_config("[net]\nstem = toy\n")
        assert spec.stem is Stem.TOY
        assert spec.in_channels == 1
        assert spec.classes == 4
        assert spec.replacement == "all"

    def test_full_round(self):
        spec = parse_net_config(
            """
            [net]
            frames = 16
            resolution = 224
            replacement = 3.2,4.2
            replacement_limit = 1
            variant = simple

            [block]
            preset = ctnet
            k = 3
            factorization = balanced
            kernels = 3/3,5/1,3x3x3
            pw = false
            """.replace("            ", "")
        )
        assert spec.frames == 16
        assert spec.resolution == 224
        assert spec.replacement == ((3, 2), (4, 2))
        assert spec.replaced_positions() == {(4, 2)}
        assert spec.variant is Variant.SIMPLE
        assert spec.block.k == 3
        assert spec.block.kernels == ("3/3", "5/1", "3x3x3")
        assert spec.block.pw is False

    def test_explicit_factorization(self):
        spec = parse_net_config("[block]\nfactorization = 4,2\n")
        assert spec.block.factorization == "explicit"
        assert spec.block.factorize(8).sizes == (4, 2)
        with pytest.raises(FactorizationMismatch):
            spec.block.factorize(64)

    def test_stage_overrides(self):
        spec = parse_net_config("[net]\nstages = 2,2\nwidths = 16,32\nstrides = 1,2\n")
        assert [(s.blocks, s.width, s.stride) for s in spec.stages] == [(2, 16, 1), (2, 32, 2)]

    @pytest.mark.parametrize(
        "text",
        [
            "[net]\ncolour = blue\n",
            "[block]\nkernel = 3\n",
            "[extra]\nx = 1\n",
            "[net]\nframes = eight\n",
            "[block]\npw = maybe\n",
            "[block]\npreset = i3d\n",
            "[net]\nstages = 1,2\nwidths = 8\n",
            "[net]\nreplacement = 3-2\n",
            "not an ini file",
        ],
    )
    def test_invalid(self, text):
        with pytest.raises(ConfigInvalid):
            parse_net_config(text)


@pytest.mark.unit
class TestBalancedMinimizesCost:
    """A K=2 TSConv costs C * (C1 + C2) per tap; balanced picks the cheapest pair."""

    @pytest.mark.parametrize("channels, sizes", [(16, (4, 4)), (64, (8, 8)), (256, (16, 16))])
    def test_square_channels(self, channels, sizes):
        assert balanced(channels, 2).sizes == sizes

    @pytest.mark.parametrize("channels", [12, 16, 64, 72, 256])
    def test_pair_sum_is_minimal(self, channels):
        best = min(d + channels // d for d in range(1, channels + 1) if channels % d == 0)
        assert sum(balanced(channels, 2).sizes) == best


@pytest.mark.unit
class TestFactorizationMismatchCategory:
    """A product mismatch keeps its own error type and the shape exit code."""

    def test_block_config_raises_mismatch(self):
        with pytest.raises(FactorizationMismatch) as info:
            CTBlockConfig(12, ChannelFactorization.of(4, 4), (SubOpSpec(1),))
        assert not isinstance(info.value, ConfigInvalid)
        assert info.value.details == {"sizes": [4, 4], "channels": 12}
        assert exit_code_for(info.value) == 2

    def test_template_resolution_raises_mismatch(self):
        template = BlockTemplate(factorization="explicit", sizes=(4, 2))
        with pytest.raises(FactorizationMismatch):
            template.resolve(16)
