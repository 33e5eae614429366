"""
Tests for TSConv descriptors, weight bundles and their on-disk form.
"""

import numpy as np
import pytest

from ctnet.core.conv.spec import (
    TSConvSpec,
    TSConvWeights,
    check_kernel,
    load_tsconv,
    save_tsconv,
)
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import ConfigInvalid, ShapeMismatch


@pytest.mark.unit
class TestTSConvSpec:
    """Shapes, parameter counts and MACs."""

    def test_weight_shape(self):
        spec = TSConvSpec(ChannelFactorization.of(16, 8), 1, (1, 3, 3))
        assert spec.groups == 8
        assert spec.weight_shape == (8, 16, 16, 1, 3, 3)
        assert spec.fan_in == 16 * 9

    def test_macs(self):
        spec = TSConvSpec(ChannelFactorization.of(16, 16), 1, (1, 3, 3))
        assert spec.macs(8, 64, 64) == 8 * 64 * 64 * 256 * 16 * 9
        assert spec.macs(8, 64, 64, batch=2) == 2 * spec.macs(8, 64, 64)

    @pytest.mark.parametrize("kernel", [(2, 3, 3), (1, 3), (0, 1, 1), (1, -3, 3)])
    def test_invalid_kernels(self, kernel):
        with pytest.raises(ConfigInvalid):
            check_kernel(kernel)

    def test_axis_outside_factorization(self):
        with pytest.raises(ConfigInvalid):
            TSConvSpec(ChannelFactorization.of(4, 4), 3)

    def test_with_kernel(self, spec_k1):
        assert spec_k1.with_kernel((1, 1, 1)).kernel == (1, 1, 1)
        assert spec_k1.with_kernel((1, 1, 1)).k == spec_k1.k


@pytest.mark.unit
class TestTSConvWeights:
    """Initialization, checks and save/load."""

    def test_init_bound(self, spec_k1, rng):
        w = TSConvWeights.init(spec_k1, rng)
        assert w.weight.shape == spec_k1.weight_shape
        assert np.max(np.abs(w.weight)) <= np.sqrt(6.0 / spec_k1.fan_in)
        assert w.bias is None

    def test_init_is_seeded(self, spec_k1):
        a = TSConvWeights.init(spec_k1, np.random.default_rng(3)).weight
        b = TSConvWeights.init(spec_k1, np.random.default_rng(3)).weight
        np.testing.assert_array_equal(a, b)

    def test_check_rejects_non_finite(self, spec_k1):
        w = TSConvWeights.filled(spec_k1)
        w.weight[0, 0, 0, 0, 0, 0] = np.inf
        with pytest.raises(ShapeMismatch, match="non-finite"):
            w.check(spec_k1)

    def test_check_rejects_bad_bias(self, spec_k1):
        with pytest.raises(ShapeMismatch):
            TSConvWeights(TSConvWeights.filled(spec_k1).weight, np.zeros(5)).check(spec_k1)

    def test_grouped_layout(self, spec_k1):
        w = TSConvWeights.filled(spec_k1)
        assert w.grouped().shape == (6, 2, 3, 3, 3)

    def test_save_and_load(self, tmp_path, rng):
        spec = TSConvSpec(ChannelFactorization.of(2, 3), 2, (3, 1, 1), bias=True)
        w = TSConvWeights(TSConvWeights.init(spec, rng).weight, rng.standard_normal(6))
        sidecar = save_tsconv(tmp_path, "t_conv", spec, w)
        assert sidecar.name == "t_conv.json"
        spec2, w2 = load_tsconv(tmp_path, "t_conv")
        assert spec2 == spec
        np.testing.assert_array_equal(w2.weight, w.weight)
        np.testing.assert_array_equal(w2.bias, w.bias)
