"""
Tensor separable convolution descriptors and weight bundles.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel

from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.core.tensor.io import load_tensor, save_tensor
from ctnet.error_handling import ConfigInvalid, ShapeMismatch

logger = logging.getLogger(__name__)

Kernel = Tuple[int, int, int]


def check_kernel(kernel: Kernel) -> Kernel:
    """Kernels are three odd positive extents (t, h, w)."""
    kernel = tuple(int(k) for k in kernel)
    if len(kernel) != 3 or any(k < 1 or k % 2 == 0 for k in kernel):
        raise ConfigInvalid(f"Kernel extents must be three odd positive integers, got {kernel}")
    return kernel


def kernel_volume(kernel: Kernel) -> int:
    return math.prod(kernel)


@dataclass(frozen=True)
class TSConvSpec:
    """One tensor separable convolution acting on sub-dimension k (1-based)."""
    factorization: ChannelFactorization
    k: int
    kernel: Kernel = (1, 3, 3)
    bias: bool = False

    def __post_init__(self):
        self.factorization.check_axis(self.k)
        object.__setattr__(self, "kernel", check_kernel(self.kernel))

    @property
    def channels(self) -> int:
        return self.factorization.product

    @property
    def c_k(self) -> int:
        return self.factorization.size(self.k)

    @property
    def groups(self) -> int:
        return self.factorization.groups(self.k)

    @property
    def weight_shape(self) -> Tuple[int, ...]:
        return (self.groups, self.c_k, self.c_k) + self.kernel

    @property
    def fan_in(self) -> int:
        return self.c_k * kernel_volume(self.kernel)

    def with_kernel(self, kernel: Kernel) -> "TSConvSpec":
        return TSConvSpec(self.factorization, self.k, kernel, self.bias)

    def macs(self, frames: int, height: int, width: int, batch: int = 1) -> int:
        """N*T*H*W*C*C_k*kt*kh*kw multiply-accumulates."""
        return batch * frames * height * width * self.channels * self.c_k * kernel_volume(self.kernel)


@dataclass(frozen=True)
class TSConvWeights:
    """Kernel of shape (G, C_k, C_k, kt, kh, kw); group = flattened complement multi-index."""
    weight: np.ndarray
    bias: Optional[np.ndarray] = None

    def check(self, spec: TSConvSpec) -> None:
        if self.weight.shape != spec.weight_shape:
            raise ShapeMismatch(
                f"TSConv weights {self.weight.shape} do not match spec {spec.weight_shape}"
            )
        if self.bias is not None and self.bias.shape != (spec.channels,):
            raise ShapeMismatch(f"TSConv bias {self.bias.shape} needs ({spec.channels},)")
        if not np.all(np.isfinite(self.weight)):
            raise ShapeMismatch("TSConv weights contain non-finite entries")

    @classmethod
    def init(cls, spec: TSConvSpec, rng: np.random.Generator) -> "TSConvWeights":
        """Fan-in scaled (He) uniform weights, zero bias."""
        bound = math.sqrt(6.0 / spec.fan_in)
        weight = rng.uniform(-bound, bound, size=spec.weight_shape)
        bias = np.zeros(spec.channels) if spec.bias else None
        return cls(weight, bias)

    @classmethod
    def filled(cls, spec: TSConvSpec, value: float = 1.0) -> "TSConvWeights":
        return cls(np.full(spec.weight_shape, float(value)))

    @classmethod
    def identity(cls, spec: TSConvSpec) -> "TSConvWeights":
        """Dirac at the kernel center with identity channel mixing."""
        weight = np.zeros(spec.weight_shape)
        ct, ch, cw = (k // 2 for k in spec.kernel)
        for i in range(spec.c_k):
            weight[:, i, i, ct, ch, cw] = 1.0
        return cls(weight)

    def grouped(self) -> np.ndarray:
        """Reshape to the grouped-conv layout (G*C_k, C_k, kt, kh, kw)."""
        g, ck = self.weight.shape[:2]
        return self.weight.reshape((g * ck, ck) + self.weight.shape[3:])


class TSConvSidecar(BaseModel):
    """JSON sidecar describing a serialized TSConv."""
    sizes: Tuple[int, ...]
    k: int
    kernel: Tuple[int, int, int]
    bias: bool

    @classmethod
    def from_spec(cls, spec: TSConvSpec) -> "TSConvSidecar":
        return cls(sizes=spec.factorization.sizes, k=spec.k, kernel=spec.kernel, bias=spec.bias)

    def to_spec(self) -> TSConvSpec:
        return TSConvSpec(ChannelFactorization(self.sizes), self.k, self.kernel, self.bias)


def save_tsconv(
    directory: Union[str, Path], name: str, spec: TSConvSpec, weights: TSConvWeights,
    dtype: str = "float64",
) -> Path:
    """Write <name>.weight.ctn (+ <name>.bias.ctn) and <name>.json."""
    weights.check(spec)
    directory = Path(directory)
    save_tensor(directory / f"{name}.weight.ctn", weights.weight, dtype)
    if weights.bias is not None:
        save_tensor(directory / f"{name}.bias.ctn", weights.bias, dtype)
    sidecar = directory / f"{name}.json"
    sidecar.write_text(TSConvSidecar.from_spec(spec).model_dump_json(indent=2))
    return sidecar


def load_tsconv(directory: Union[str, Path], name: str) -> Tuple[TSConvSpec, TSConvWeights]:
    directory = Path(directory)
    spec = TSConvSidecar.model_validate(
        json.loads((directory / f"{name}.json").read_text())
    ).to_spec()
    weight = load_tensor(directory / f"{name}.weight.ctn")
    bias_path = directory / f"{name}.bias.ctn"
    bias = load_tensor(bias_path) if bias_path.exists() else None
    weights = TSConvWeights(weight, bias)
    weights.check(spec)
    return spec, weights
