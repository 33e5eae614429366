"""
Algebraic properties of the TSConv kernels: linearity, shift commutation,
per-frame spatial behaviour and the difference between connection modes.
"""

import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view

from ctnet.core.conv import kernels
from ctnet.core.conv.spec import TSConvSpec, TSConvWeights
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.net.config import Connection, CTBlockConfig, SubOpSpec, Variant
from ctnet.net.network import build_ct_block, forward, init_params


def _island(rng, shape, lo=4, hi=7):
    """Random values inside [lo:hi) on the last three axes, zeros around."""
    x = np.zeros(shape)
    x[..., lo:hi, lo:hi, lo:hi] = rng.standard_normal(shape[:2] + (hi - lo,) * 3)
    return x


@pytest.mark.unit
class TestLinearity:
    """TSConv without bias is a linear map."""

    @pytest.mark.parametrize("kernel", [(1, 3, 3), (3, 1, 1), (3, 5, 3)])
    def test_superposition(self, rng, kernel):
        spec = TSConvSpec(ChannelFactorization.of(2, 3), 2, kernel)
        w = TSConvWeights.init(spec, rng)
        x, y = rng.standard_normal((2, 1, 6, 3, 5, 5))
        a, b = 1.7, -0.4
        np.testing.assert_allclose(
            kernels.tsconv_grouped(a * x + b * y, spec, w),
            a * kernels.tsconv_grouped(x, spec, w) + b * kernels.tsconv_grouped(y, spec, w),
            atol=1e-10,
        )

    def test_zero_maps_to_zero(self, rng):
        spec = TSConvSpec(ChannelFactorization.of(3, 2), 1, (3, 3, 3))
        out = kernels.tsconv_grouped(np.zeros((1, 6, 3, 4, 4)), spec, TSConvWeights.init(spec, rng))
        assert not out.any()


@pytest.mark.unit
class TestShiftCommutation:
    """Shifting the input shifts the output when nothing crosses the border."""

    @pytest.mark.parametrize("axis,shift", [(2, 1), (3, 2), (4, -1)])
    def test_shift(self, rng, axis, shift):
        spec = TSConvSpec(ChannelFactorization.of(2, 3), 1, (3, 3, 3))
        w = TSConvWeights.init(spec, rng)
        x = _island(rng, (1, 6, 11, 11, 11))
        shifted = np.roll(x, shift, axis=axis)
        np.testing.assert_allclose(
            kernels.tsconv_grouped(shifted, spec, w),
            np.roll(kernels.tsconv_grouped(x, spec, w), shift, axis=axis),
            atol=1e-10,
        )


@pytest.mark.unit
class TestSpatialTSConv:
    """S-TSConv never mixes frames."""

    def test_single_frame_is_2d_convolution(self, rng):
        spec = TSConvSpec(ChannelFactorization.of(4), 1, (1, 3, 3))
        w = TSConvWeights.init(spec, rng)
        x = rng.standard_normal((2, 4, 1, 5, 6))
        padded = np.pad(x[:, :, 0], [(0, 0), (0, 0), (1, 1), (1, 1)])
        windows = sliding_window_view(padded, (3, 3), axis=(2, 3))
        expected = np.einsum("nchwab,ocab->nohw", windows, w.weight[0, :, :, 0])
        np.testing.assert_allclose(kernels.s_tsconv(x, spec, w)[:, :, 0], expected, atol=1e-10)

    def test_frames_are_independent(self, rng):
        spec = TSConvSpec(ChannelFactorization.of(2, 2), 2, (1, 3, 3))
        w = TSConvWeights.init(spec, rng)
        x = rng.standard_normal((1, 4, 5, 4, 4))
        out = kernels.s_tsconv(x, spec, w)
        for t in range(5):
            np.testing.assert_allclose(
                out[:, :, t], kernels.s_tsconv(x[:, :, t:t + 1], spec, w)[:, :, 0], atol=1e-10
            )


@pytest.mark.unit
class TestTemporalTSConv:
    """T-TSConv on a clip that does not change over time."""

    def test_interior_frames_are_equal(self, rng):
        spec = TSConvSpec(ChannelFactorization.of(3, 2), 1, (3, 1, 1))
        w = TSConvWeights.init(spec, rng)
        frame = rng.standard_normal((1, 6, 1, 4, 4))
        out = kernels.t_tsconv(np.repeat(frame, 7, axis=2), spec, w)
        for t in range(2, 6):
            np.testing.assert_allclose(out[:, :, t], out[:, :, 1], atol=1e-10)

    def test_border_frames_see_zero_padding(self, rng):
        spec = TSConvSpec(ChannelFactorization.of(3, 2), 1, (3, 1, 1))
        w = TSConvWeights.filled(spec, 1.0)
        out = kernels.t_tsconv(np.ones((1, 6, 5, 2, 2)), spec, w)
        # each output channel sums C_k = 3 channels over 3 (interior) or 2 (border) taps
        assert out[0, 0, 0, 0, 0] == pytest.approx(6.0)
        assert out[0, 0, 2, 0, 0] == pytest.approx(9.0)


@pytest.mark.unit
class TestConnectionModes:
    """Serial and parallel wiring of the same kernels are different operators."""

    def test_kernel_level(self, rng):
        f = ChannelFactorization.of(2, 3)
        s_spec = TSConvSpec(f, 1, (1, 3, 3))
        t_spec = TSConvSpec(f, 1, (3, 1, 1))
        ws, wt = TSConvWeights.init(s_spec, rng), TSConvWeights.init(t_spec, rng)
        x = rng.standard_normal((1, 6, 4, 5, 5))
        xs = kernels.s_tsconv(x, s_spec, ws)
        parallel = kernels.combine(xs, kernels.t_tsconv(x, t_spec, wt), "parallel")
        serial = kernels.combine(xs, kernels.t_tsconv(xs, t_spec, wt), "serial")
        np.testing.assert_allclose(parallel, xs + kernels.t_tsconv(x, t_spec, wt))
        assert not np.allclose(parallel, serial)

    def test_module_level_with_shared_parameters(self, rng):
        f = ChannelFactorization.of(3, 2)
        kernel_pair = ((1, 3, 3), (3, 1, 1))

        def module(connection):
            subops = tuple(SubOpSpec(a, connection, kernel_pair) for a in (1, 2))
            return build_ct_block(CTBlockConfig(6, f, subops), Variant.SIMPLE)

        parallel, serial = module(Connection.PARALLEL), module(Connection.SERIAL)
        store = init_params(parallel, rng)
        x = rng.standard_normal((1, 6, 4, 4, 4))
        a, _ = forward(parallel, store, x)
        b, _ = forward(serial, store, x)
        assert a.shape == b.shape
        assert not np.allclose(a.data, b.data)
