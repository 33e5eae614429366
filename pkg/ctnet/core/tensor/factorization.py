"""
Channel factorization C = C1 x ... x CK and the channel view it induces.

The first factor is the outermost channel axis: multi-index (c1, ..., cK)
maps to flat channel c1*(C2*...*CK) + ... + cK.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ctnet.error_handling import ConfigInvalid, FactorizationMismatch


@dataclass(frozen=True)
class ChannelFactorization:
    """Ordered sub-dimension sizes of a channel axis."""
    sizes: Tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise ConfigInvalid("A channel factorization needs at least one sub-dimension")
        if any(s < 1 for s in sizes):
            raise ConfigInvalid(f"Sub-dimension sizes must be positive, got {list(sizes)}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def of(cls, *sizes: int) -> "ChannelFactorization":
        """Build from positional sizes."""
        return cls(tuple(sizes))

    @property
    def K(self) -> int:
        """Number of sub-dimensions."""
        return len(self.sizes)

    @property
    def product(self) -> int:
        return math.prod(self.sizes)

    def size(self, k: int) -> int:
        """Size C_k of the 1-based sub-dimension k."""
        self.check_axis(k)
        return self.sizes[k - 1]

    def groups(self, k: int) -> int:
        """Group count C / C_k of a TSConv acting on sub-dimension k."""
        return self.product // self.size(k)

    def check_axis(self, k: int) -> None:
        if not 1 <= k <= self.K:
            raise ConfigInvalid(f"Active sub-dimension {k} outside 1..{self.K}")

    def check(self, channels: int) -> None:
        """Raise FactorizationMismatch unless the sizes multiply out to channels."""
        if self.product != channels:
            raise FactorizationMismatch(
                f"Factorization {'x'.join(map(str, self.sizes))} = {self.product} "
                f"does not match {channels} channels",
                {"sizes": list(self.sizes), "channels": channels},
            )

    def multi_index(self, c: int) -> Tuple[int, ...]:
        """Flat channel -> multi-index (first factor outermost)."""
        if not 0 <= c < self.product:
            raise FactorizationMismatch(f"Channel {c} outside 0..{self.product - 1}")
        return tuple(int(i) for i in np.unravel_index(c, self.sizes))

    def flat_index(self, index: Sequence[int]) -> int:
        """Multi-index -> flat channel."""
        if len(index) != self.K:
            raise FactorizationMismatch(f"Expected {self.K} sub-indices, got {len(index)}")
        return int(np.ravel_multi_index(tuple(index), self.sizes))

    def group_index(self, c: int, k: int) -> int:
        """Flattened complement multi-index of channel c (all positions except k)."""
        idx = list(self.multi_index(c))
        del idx[k - 1]
        rest = list(self.sizes)
        del rest[k - 1]
        if not rest:
            return 0
        return int(np.ravel_multi_index(tuple(idx), tuple(rest)))

    def __str__(self) -> str:
        return "x".join(str(s) for s in self.sizes)


def view_channels(t: np.ndarray, f: ChannelFactorization) -> np.ndarray:
    """View (N, C, T, H, W) as (N, C1, ..., CK, T, H, W) without copying."""
    if t.ndim != 5:
        raise FactorizationMismatch(f"view_channels expects a 5-axis tensor, got {t.ndim} axes")
    n, c, tt, h, w = t.shape
    f.check(c)
    return t.reshape((n,) + f.sizes + (tt, h, w))


def flatten_channels(view: np.ndarray, f: ChannelFactorization) -> np.ndarray:
    """Inverse of view_channels."""
    n = view.shape[0]
    tt, h, w = view.shape[-3:]
    return view.reshape(n, f.product, tt, h, w)
