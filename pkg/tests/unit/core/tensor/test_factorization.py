"""
Tests for channel factorizations and the channel view.
"""

import numpy as np
import pytest

from ctnet.core.tensor.factorization import ChannelFactorization, flatten_channels, view_channels
from ctnet.error_handling import ConfigInvalid, FactorizationMismatch


@pytest.mark.unit
class TestChannelFactorization:
    """Sizes, group counts and index maps."""

    def test_product_and_groups(self):
        f = ChannelFactorization.of(16, 8)
        assert f.K == 2
        assert f.product == 128
        assert f.groups(1) == 8
        assert f.groups(2) == 16

    def test_first_factor_is_outermost(self):
        f = ChannelFactorization.of(2, 3)
        assert f.multi_index(0) == (0, 0)
        assert f.multi_index(1) == (0, 1)
        assert f.multi_index(3) == (1, 0)
        assert f.flat_index((1, 2)) == 5

    def test_index_maps_are_inverse(self):
        f = ChannelFactorization.of(2, 3, 4)
        for c in range(f.product):
            assert f.flat_index(f.multi_index(c)) == c

    def test_group_index_drops_active_axis(self):
        f = ChannelFactorization.of(2, 3)
        # channel 5 = (1, 2): complement of axis 1 is (2,), of axis 2 is (1,)
        assert f.group_index(5, 1) == 2
        assert f.group_index(5, 2) == 1
        assert ChannelFactorization.of(7).group_index(4, 1) == 0

    def test_check_reports_mismatch(self):
        with pytest.raises(FactorizationMismatch, match="does not match 10 channels"):
            ChannelFactorization.of(2, 3).check(10)

    def test_axis_out_of_range(self):
        with pytest.raises(ConfigInvalid):
            ChannelFactorization.of(2, 3).size(3)

    def test_rejects_empty_and_zero_sizes(self):
        with pytest.raises(ConfigInvalid):
            ChannelFactorization(())
        with pytest.raises(ConfigInvalid):
            ChannelFactorization.of(4, 0)

    def test_str(self):
        assert str(ChannelFactorization.of(16, 16)) == "16x16"


@pytest.mark.unit
class TestChannelView:
    """view_channels / flatten_channels."""

    def test_view_shape_and_no_copy(self, small_tensor, factorization):
        view = view_channels(small_tensor, factorization)
        assert view.shape == (2, 2, 3, 3, 4, 5)
        assert np.shares_memory(view, small_tensor)

    def test_view_matches_multi_index(self, small_tensor, factorization):
        view = view_channels(small_tensor, factorization)
        c1, c2 = factorization.multi_index(4)
        np.testing.assert_array_equal(view[:, c1, c2], small_tensor[:, 4])

    def test_flatten_restores(self, small_tensor, factorization):
        view = view_channels(small_tensor, factorization)
        np.testing.assert_array_equal(flatten_channels(view, factorization), small_tensor)

    def test_mismatch(self, small_tensor):
        with pytest.raises(FactorizationMismatch):
            view_channels(small_tensor, ChannelFactorization.of(4, 2))
