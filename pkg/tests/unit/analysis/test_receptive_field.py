"""
Tests for the interact-field probe and its analytical predictor.
"""

import pytest

from ctnet.analysis.receptive_field import influence, predict_extent, probe_rf
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import InputTooSmall
from ctnet.net.config import BlockTemplate, Connection, CTBlockConfig, Preset, SubOpSpec, Variant
from ctnet.net.network import build_ct_block
from ctnet.net.presets import build_preset


def _ctnet(k: int, kernel: str = "3", connection: Connection = Connection.PARALLEL):
    template = BlockTemplate(k=k, kernels=(kernel,) * k, factorization="balanced", connection=connection)
    return build_ct_block(template.resolve(8, Variant.SIMPLE))


@pytest.mark.unit
class TestPredictExtent:
    """Growth per sub-operation by connection type."""

    def test_parallel_takes_the_wider_branch(self):
        f = ChannelFactorization.of(2, 2)
        cfg = CTBlockConfig(4, f, (SubOpSpec(1), SubOpSpec(2)))
        assert predict_extent(cfg) == (5, 5, 5)

    def test_serial_sums_both_kernels(self):
        f = ChannelFactorization.of(4)
        cfg = CTBlockConfig(4, f, (SubOpSpec(1, Connection.SERIAL),))
        assert predict_extent(cfg) == (3, 3, 3)

    def test_coupling(self):
        f = ChannelFactorization.of(4)
        cfg = CTBlockConfig(4, f, (SubOpSpec(1, Connection.COUPLING, ((3, 5, 5),)),))
        assert predict_extent(cfg) == (3, 5, 5)

    def test_pointwise_adds_nothing(self):
        f = ChannelFactorization.of(4)
        cfg = CTBlockConfig(4, f, (SubOpSpec(1, Connection.COUPLING, ((1, 1, 1),)),))
        assert predict_extent(cfg) == (1, 1, 1)


@pytest.mark.unit
class TestProbe:
    """Measured bounding boxes on a centred one-hot input."""

    def test_single_subop_is_a_cross(self):
        report = probe_rf(_ctnet(1))
        assert report.extents == [3, 3, 3]
        assert not report.full_cube
        assert report.passed

    def test_cross_leaves_corners_untouched(self):
        mask = influence(_ctnet(1), (5, 5, 5))
        assert mask[2, 2, 2]
        assert mask[1, 2, 2] and mask[2, 1, 1]
        assert not mask[1, 1, 1]

    def test_two_subops_grow_to_five(self):
        report = probe_rf(_ctnet(2), expected=(5, 5, 5))
        assert report.extents == [5, 5, 5]
        assert report.passed

    def test_depth_keeps_growing(self):
        assert probe_rf(_ctnet(3), (9, 9, 9)).extents == [7, 7, 7]

    def test_larger_kernels(self):
        assert probe_rf(_ctnet(2, "5"), (11, 11, 11)).extents == [9, 9, 9]

    def test_c3d_is_a_full_cube(self):
        report = probe_rf(build_ct_block(build_preset(Preset.C3D, 8)))
        assert report.extents == [3, 3, 3]
        assert report.full_cube

    def test_r21d_fills_the_cube(self):
        report = probe_rf(build_ct_block(build_preset(Preset.R21D, 8)))
        assert report.extents == [3, 3, 3]
        assert report.full_cube

    def test_serial_fills_the_cube(self):
        report = probe_rf(_ctnet(1, connection=Connection.SERIAL))
        assert report.extents == [3, 3, 3]
        assert report.full_cube

    def test_expected_mismatch_fails(self):
        report = probe_rf(_ctnet(2), expected=(3, 3, 3))
        assert report.matches_prediction
        assert not report.passed
        assert "differs" in report.render()

    def test_input_too_small(self):
        with pytest.raises(InputTooSmall) as exc_info:
            probe_rf(_ctnet(2), (4, 4, 4))
        assert exc_info.value.details["predicted"] == [5, 5, 5]
