"""
Tests for Tensor Excitation gating.
"""

import numpy as np
import pytest

from ctnet.core.excitation.te import (
    GATES,
    TEParams,
    channel_excitation,
    load_te,
    save_te,
    spatial_excitation,
    te_apply,
    temporal_excitation,
)
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import ShapeMismatch


@pytest.fixture
def te_params(rng):
    return TEParams.init(ChannelFactorization.of(2, 3), 1, rng)


@pytest.fixture
def positive(rng):
    """Strictly positive input so gate ratios are well defined."""
    return rng.uniform(0.5, 1.5, size=(2, 6, 3, 4, 4))


@pytest.mark.unit
class TestGates:
    """Each gate broadcasts along the axes it pooled away."""

    def test_zero_weights_halve_every_gate(self, small_tensor, rng):
        p = TEParams.zeros(ChannelFactorization.of(2, 3), 2)
        xt = rng.standard_normal(small_tensor.shape)
        out = te_apply(small_tensor, xt, p).data
        np.testing.assert_allclose(out, (small_tensor + xt) / 4.0)

    def test_spatial_gate_is_constant_over_time(self, positive, te_params):
        ratio = spatial_excitation(positive, te_params).data / positive
        np.testing.assert_allclose(ratio, np.broadcast_to(ratio[:, :, :1], ratio.shape))
        assert np.all((ratio > 0) & (ratio < 1))

    def test_temporal_gate_is_constant_over_space(self, positive, te_params):
        ratio = temporal_excitation(positive, te_params).data / positive
        np.testing.assert_allclose(ratio, np.broadcast_to(ratio[..., :1, :1], ratio.shape))

    def test_channel_gate_keeps_time_axis(self, positive, te_params):
        ratio = channel_excitation(positive, te_params).data / positive
        np.testing.assert_allclose(ratio, np.broadcast_to(ratio[..., :1, :1], ratio.shape))
        assert not np.allclose(ratio[:, :, 0], ratio[:, :, 1])

    def test_unequal_branches(self, small_tensor, te_params):
        with pytest.raises(ShapeMismatch):
            te_apply(small_tensor, small_tensor[:, :, :2], te_params)

    def test_train_mode_reports_stats(self, small_tensor, te_params):
        stats = {}
        te_apply(small_tensor, small_tensor, te_params, mode="train", stats=stats)
        assert set(stats) == set(GATES)
        assert stats["channel"].running_mean.shape == (6,)

    def test_eval_mode_leaves_stats(self, small_tensor, te_params):
        stats = {}
        te_apply(small_tensor, small_tensor, te_params, stats=stats)
        np.testing.assert_array_equal(stats["spatial"].running_var, np.ones(6))

    def test_gate_specs_share_axis(self, te_params):
        assert te_params.spec("spatial").kernel == (1, 3, 3)
        assert te_params.spec("temporal").kernel == (3, 1, 1)
        assert te_params.spec("channel").kernel == (1, 1, 1)
        assert {te_params.spec(g).k for g in GATES} == {1}


@pytest.mark.unit
class TestTEFiles:
    """Saving and loading a TE bundle."""

    def test_save_and_load(self, tmp_path, te_params, small_tensor):
        save_te(tmp_path, "te", te_params)
        assert (tmp_path / "te.json").exists()
        loaded = load_te(tmp_path, "te")
        assert loaded.factorization == te_params.factorization
        np.testing.assert_allclose(
            te_apply(small_tensor, small_tensor, loaded).data,
            te_apply(small_tensor, small_tensor, te_params).data,
        )
