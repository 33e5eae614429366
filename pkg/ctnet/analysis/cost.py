"""
Analytical cost model: per-layer MACs and parameter counts over a NetSpec.

Only conv and linear layers contribute MACs; BN, ReLU, pooling and sigmoid
count as zero. Totals are reported in giga-MACs, the unit the ablation
tables call "GFLOPs"; `true_flops` doubles them.
"""

import logging
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, computed_field

from ctnet.net.config import NetSpec
from ctnet.net.layers import CostEntry, Dims, Layer
from ctnet.net.network import build_network

logger = logging.getLogger(__name__)

GIGA = 1e9


class CostRow(BaseModel):
    name: str
    kind: str
    out_dims: List[int]
    macs: int
    params: int


class CostReport(BaseModel):
    """Per-layer accounting plus totals."""
    kind: Literal["cost"] = "cost"
    frames: int
    resolution: int
    convention: Literal["macs", "true-flops"] = "macs"
    rows: List[CostRow] = Field(default_factory=list)
    total_macs: int = 0
    total_params: int = 0

    @computed_field
    @property
    def gflops(self) -> float:
        """Totals in the chosen convention, in billions."""
        factor = 2 if self.convention == "true-flops" else 1
        return factor * self.total_macs / GIGA

    @property
    def mparams(self) -> float:
        return self.total_params / 1e6

    def render(self, per_layer: bool = False) -> str:
        lines = []
        if per_layer:
            lines.append(f"{'layer':<40} {'kind':<7} {'out (C,T,H,W)':<22} {'MACs':>14} {'params':>10}")
            for r in self.rows:
                dims = "x".join(str(d) for d in r.out_dims)
                lines.append(f"{r.name:<40} {r.kind:<7} {dims:<22} {r.macs:>14,} {r.params:>10,}")
        unit = "GFLOPs (2xMACs)" if self.convention == "true-flops" else "GFLOPs (MACs)"
        lines.append(
            f"Total @ {self.frames}x{self.resolution}^2: {self.gflops:.3f} {unit}, "
            f"{self.mparams:.3f} M params"
        )
        return "\n".join(lines)


def _rows(entries: List[CostEntry]) -> List[CostRow]:
    return [
        CostRow(name=e.name, kind=e.kind, out_dims=list(e.out_dims), macs=e.macs, params=e.params)
        for e in entries
    ]


def layer_cost(layer: Layer, dims: Dims, true_flops: bool = False) -> CostReport:
    """Cost of any single layer for input dims (C, T, H, W) at batch 1."""
    entries, _ = layer.cost(dims)
    rows = _rows(entries)
    return CostReport(
        frames=dims[1],
        resolution=dims[2],
        convention="true-flops" if true_flops else "macs",
        rows=rows,
        total_macs=sum(r.macs for r in rows),
        total_params=sum(r.params for r in rows),
    )


def count_cost(
    spec: NetSpec,
    frames: Optional[int] = None,
    resolution: Optional[int] = None,
    true_flops: bool = False,
) -> CostReport:
    """Cost of the whole network at the given (or the NetSpec's) frames and resolution."""
    net = build_network(spec)
    frames = frames or spec.frames
    resolution = resolution or spec.resolution
    report = layer_cost(net, net.input_dims(frames, resolution), true_flops)
    logger.debug(
        f"count_cost: {len(report.rows)} rows, {report.total_macs:,} MACs, "
        f"{report.total_params:,} params"
    )
    return report

