"""
Receptive-field ("interact field") analysis of CT-Modules.

The probe runs the module structurally (all-ones weights, BN and TE gating
bypassed) on a one-hot input at the centre of the volume and measures the
bounding box of nonzero output. The analytical predictor adds (k - 1) per
axis for every sub-operation; a parallel pair contributes its wider branch.
"""

import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, computed_field

from ctnet.core.autograd.tensor import no_grad
from ctnet.error_handling import InputTooSmall
from ctnet.net.config import Connection, CTBlockConfig
from ctnet.net.layers import CTModule, ForwardContext

logger = logging.getLogger(__name__)

Extent = Tuple[int, int, int]


class RFReport(BaseModel):
    kind: Literal["rf"] = "rf"
    dims: List[int]
    channels: int
    extents: List[int]
    predicted: List[int]
    full_cube: bool
    expected: Optional[List[int]] = None

    @property
    def matches_prediction(self) -> bool:
        return self.extents == self.predicted

    @computed_field
    @property
    def passed(self) -> bool:
        if self.expected is not None and self.extents != self.expected:
            return False
        return self.matches_prediction

    def render(self) -> str:
        t, h, w = self.extents
        lines = [
            f"Receptive field on {'x'.join(map(str, self.dims))} input, C={self.channels}",
            f"  extents (t,h,w): {t} x {h} x {w}   predicted: {'x'.join(map(str, self.predicted))}",
            f"  full cube: {self.full_cube}",
        ]
        if self.expected is not None:
            status = "✅ matches" if self.extents == self.expected else "❌ differs from"
            lines.append(f"  {status} expected {'x'.join(map(str, self.expected))}")
        return "\n".join(lines)


def predict_extent(cfg: CTBlockConfig) -> Extent:
    """1 + sum over sub-ops of (kernel - 1) per axis."""
    grow = [0, 0, 0]
    for op in cfg.subops:
        if op.connection is Connection.PARALLEL:
            step = [max(s - 1, t - 1) for s, t in zip(op.spatial, op.temporal)]
        elif op.connection is Connection.SERIAL:
            step = [(s - 1) + (t - 1) for s, t in zip(op.spatial, op.temporal)]
        else:
            step = [k - 1 for k in op.spatial]
        grow = [g + s for g, s in zip(grow, step)]
    return tuple(1 + g for g in grow)


def influence(module: CTModule, dims: Sequence[int]) -> np.ndarray:
    """Boolean (T, H, W) map of outputs reached from a centred one-hot input."""
    t, h, w = dims
    x = np.zeros((1, module.cfg.channels, t, h, w))
    x[:, :, t // 2, h // 2, w // 2] = 1.0
    ctx = ForwardContext(structural=True)
    with no_grad():
        out = module.forward(ctx, x).data
    return np.any(out[0] != 0, axis=0)


def _bounding_box(mask: np.ndarray) -> Tuple[Extent, bool]:
    idx = np.nonzero(mask)
    if not idx[0].size:
        return (0, 0, 0), False
    lo = [int(i.min()) for i in idx]
    hi = [int(i.max()) for i in idx]
    extents = tuple(b - a + 1 for a, b in zip(lo, hi))
    box = mask[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
    return extents, bool(box.all())


def probe_rf(
    module: CTModule,
    dims: Sequence[int] = (9, 9, 9),
    expected: Optional[Sequence[int]] = None,
) -> RFReport:
    """Measure the interact field of a CT-Module."""
    dims = tuple(int(d) for d in dims)
    predicted = predict_extent(module.cfg)
    if any(p > d for p, d in zip(predicted, dims)):
        raise InputTooSmall(
            f"Input {'x'.join(map(str, dims))} is smaller than the "
            f"{'x'.join(map(str, predicted))} receptive field",
            {"dims": list(dims), "predicted": list(predicted)},
        )
    extents, full = _bounding_box(influence(module, dims))
    report = RFReport(
        dims=list(dims),
        channels=module.cfg.channels,
        extents=list(extents),
        predicted=list(predicted),
        full_cube=full,
        expected=list(expected) if expected is not None else None,
    )
    logger.debug(f"probe_rf: extents={extents} predicted={predicted} full_cube={full}")
    return report
