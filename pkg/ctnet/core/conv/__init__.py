"""TSConv: convolutions that act on one channel sub-dimension."""

from .spec import (
    Kernel,
    TSConvSpec,
    TSConvWeights,
    TSConvSidecar,
    check_kernel,
    kernel_volume,
    save_tsconv,
    load_tsconv,
)
from .kernels import (
    combine,
    conv3d,
    conv3d_backward,
    from_grouped_layout,
    out_size,
    pointwise_conv,
    pw_tsconv,
    s_tsconv,
    t_tsconv,
    tconv_full,
    to_grouped_layout,
    tsconv_backward,
    tsconv_direct,
    tsconv_grouped,
)

__all__ = [
    "Kernel",
    "TSConvSpec",
    "TSConvWeights",
    "TSConvSidecar",
    "check_kernel",
    "kernel_volume",
    "save_tsconv",
    "load_tsconv",
    "combine",
    "conv3d",
    "conv3d_backward",
    "from_grouped_layout",
    "out_size",
    "pointwise_conv",
    "pw_tsconv",
    "s_tsconv",
    "t_tsconv",
    "tconv_full",
    "to_grouped_layout",
    "tsconv_backward",
    "tsconv_direct",
    "tsconv_grouped",
]
