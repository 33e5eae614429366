"""
Tests for the parameter store, SGD step and learning-rate schedule.
"""

import math

import numpy as np
import pytest

from ctnet.core.autograd import ParamStore, TrainConfig, cosine_warmup_lr, sgd_step
from ctnet.core.autograd import functional as F
from ctnet.error_handling import ConfigInvalid, ShapeMismatch


@pytest.fixture
def store():
    s = ParamStore()
    s.add("w", np.array([1.0, -2.0]))
    s.add("b", np.array([0.5]))
    s.add_state("bn.running_mean", np.zeros(2))
    return s


@pytest.mark.unit
class TestParamStore:
    """Bookkeeping of parameters, gradients and state."""

    def test_mapping_protocol(self, store):
        assert "w" in store
        assert len(store) == 2
        assert list(store) == ["w", "b"]
        assert store.num_params == 3

    def test_duplicate_name(self, store):
        with pytest.raises(ConfigInvalid):
            store.add("w", np.zeros(2))

    def test_collect_grads_fills_untouched(self, store):
        leaves = store.leaves()
        F.total(F.scale(leaves["w"], 3.0)).backward()
        store.collect_grads(leaves)
        np.testing.assert_allclose(store.grads["w"], [3.0, 3.0])
        np.testing.assert_allclose(store.grads["b"], [0.0])

    def test_collect_grads_shape_check(self, store):
        leaves = store.leaves()
        leaves["b"].grad = np.zeros(3)
        with pytest.raises(ShapeMismatch):
            store.collect_grads(leaves)

    def test_copy_is_deep(self, store):
        clone = store.copy()
        clone.params["w"][0] = 99.0
        assert store["w"][0] == 1.0


@pytest.mark.unit
class TestSGD:
    """Momentum and weight decay."""

    def test_plain_step(self, store):
        store.grads = {"w": np.array([1.0, 1.0]), "b": np.array([2.0])}
        new = sgd_step(store, lr=0.1, momentum=0.0)
        np.testing.assert_allclose(new["w"], [0.9, -2.1])
        np.testing.assert_allclose(new["b"], [0.3])
        np.testing.assert_allclose(store["w"], [1.0, -2.0])

    def test_momentum_accumulates(self, store):
        store.grads = {"w": np.array([1.0, 0.0]), "b": np.array([0.0])}
        first = sgd_step(store, lr=1.0, momentum=0.9)
        second = sgd_step(first, lr=1.0, momentum=0.9)
        np.testing.assert_allclose(second.momentum["w"], [1.9, 0.0])
        np.testing.assert_allclose(second["w"], [1.0 - 1.0 - 1.9, -2.0])

    def test_weight_decay(self, store):
        new = sgd_step(store, lr=0.5, momentum=0.0, weight_decay=0.1)
        np.testing.assert_allclose(new["w"], [1.0 - 0.05, -2.0 + 0.1])

    def test_zero_lr_is_identity(self, store):
        store.grads = {"w": np.array([5.0, 5.0]), "b": np.array([5.0])}
        new = sgd_step(store, lr=0.0, momentum=0.9, weight_decay=0.1)
        np.testing.assert_array_equal(new["w"], store["w"])
        assert new.state.keys() == store.state.keys()


@pytest.mark.unit
class TestSchedule:
    """Linear warm-up followed by half-cosine decay."""

    def test_warmup_then_cosine(self):
        cfg = TrainConfig(epochs=10, lr=0.1, warmup_epochs=2)
        assert cosine_warmup_lr(0, cfg) == pytest.approx(0.05)
        assert cosine_warmup_lr(1, cfg) == pytest.approx(0.1)
        assert cosine_warmup_lr(2, cfg) == pytest.approx(0.1)
        assert cosine_warmup_lr(6, cfg) == pytest.approx(0.05)
        assert cosine_warmup_lr(9, cfg) == pytest.approx(0.1 * 0.5 * (1 + math.cos(math.pi * 7 / 8)))

    def test_rates_decrease_after_warmup(self):
        cfg = TrainConfig(epochs=20)
        rates = [cosine_warmup_lr(e, cfg) for e in range(cfg.warmup_epochs, cfg.epochs)]
        assert all(a > b for a, b in zip(rates, rates[1:]))
        assert min(rates) > 0

    def test_epoch_out_of_range(self):
        with pytest.raises(ConfigInvalid):
            cosine_warmup_lr(20, TrainConfig(epochs=20))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"epochs": -1},
            {"batch_size": 0},
            {"lr": -0.1},
            {"momentum": 1.0},
            {"epochs": 2, "warmup_epochs": 2},
        ],
    )
    def test_invalid_configs(self, kwargs):
        with pytest.raises(ConfigInvalid):
            TrainConfig(**kwargs)

    def test_zero_epochs_allows_default_warmup(self):
        assert TrainConfig(epochs=0).warmup_epochs == 2
