"""
Shared test configuration and fixtures for the ctnet test suite.
"""

from pathlib import Path

import numpy as np
import pytest

from ctnet.core.conv import TSConvSpec
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.net.config import NetSpec, Preset

TOY_CONFIG = """
[net]
stem = toy
frames = 4
resolution = 8

[block]
preset = ctnet
k = 2
"""


@pytest.fixture
def rng():
    """Seeded generator; every test draws from its own stream."""
    return np.random.default_rng(1234)


@pytest.fixture
def small_tensor(rng):
    """(N, C, T, H, W) = (2, 6, 3, 4, 5) with C = 2 x 3."""
    return rng.standard_normal((2, 6, 3, 4, 5))


@pytest.fixture
def factorization():
    return ChannelFactorization.of(2, 3)


@pytest.fixture
def spec_k1(factorization):
    return TSConvSpec(factorization, 1, (3, 3, 3))


@pytest.fixture
def toy_spec():
    """Smallest network that still contains CT-Blocks in both stages."""
    return NetSpec.toy(Preset.CTNET, frames=4, resolution=8)


@pytest.fixture
def tiny_task():
    """direction4 clips sized for toy_spec, a couple of batches per split."""
    from ctnet.train.synthetic import SyntheticTask

    return SyntheticTask(frames=4, size=8, patch=3, train_size=16, val_size=8)


@pytest.fixture
def toy_config_file(tmp_path) -> Path:
    path = tmp_path / "toy.cfg"
    path.write_text(TOY_CONFIG)
    return path


# Helper functions for tests
def numeric_grad(fn, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of x."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        up = fn()
        flat[i] = old - eps
        down = fn()
        flat[i] = old
        grad.reshape(-1)[i] = (up - down) / (2 * eps)
    return grad
