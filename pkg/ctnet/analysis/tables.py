"""
Ablation-table sweeps: computed GMACs and parameter counts next to the
published values, with a tolerance per row.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Literal, Optional

from pydantic import BaseModel, computed_field

from ctnet.analysis.cost import count_cost
from ctnet.error_handling import ConfigInvalid
from ctnet.net.config import BlockTemplate, Connection, NetSpec, Preset, Variant

logger = logging.getLogger(__name__)


class TableRow(BaseModel):
    label: str
    published: Optional[float] = None
    computed: float
    tolerance: Optional[float] = None

    @computed_field
    @property
    def deviation(self) -> Optional[float]:
        if self.published is None:
            return None
        return (self.computed - self.published) / self.published

    @computed_field
    @property
    def passed(self) -> bool:
        if self.published is None or self.tolerance is None:
            return True
        return abs(self.deviation) <= self.tolerance


class TableReport(BaseModel):
    kind: Literal["table"] = "table"
    table: str
    title: str
    unit: str = "GFLOPs"
    rows: List[TableRow]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def render(self) -> str:
        lines = [f"Table {self.table}: {self.title}",
                 f"{'row':<28} {'published':>9} {'computed':>10} {'dev':>8}  status"]
        for r in self.rows:
            published = f"{r.published:.1f}" if r.published is not None else "-"
            dev = f"{100 * r.deviation:+.1f}%" if r.deviation is not None else "-"
            status = "n/a" if r.tolerance is None else ("ok" if r.passed else "FAIL")
            lines.append(f"{r.label:<28} {published:>9} {r.computed:>10.2f} {dev:>8}  {status}")
        lines.append("✅ all rows within tolerance" if self.passed else "❌ rows outside tolerance")
        return "\n".join(lines)


@dataclass(frozen=True)
class Expectation:
    label: str
    spec: NetSpec
    published: Optional[float]
    tolerance: Optional[float] = 0.05
    resolution: Optional[int] = None


def _ct(**block) -> NetSpec:
    """R50 CT-Net, simple variant, default 7 positions."""
    return NetSpec(variant=Variant.SIMPLE, block=BlockTemplate(**block))


def _preset(preset: Preset) -> NetSpec:
    return NetSpec(variant=Variant.SIMPLE, block=BlockTemplate(preset=preset))


TSN = _preset(Preset.TSN)
CT_SIMPLE = _ct()
CT_FULL = NetSpec(variant=Variant.FULL)


def _table_3a() -> List[Expectation]:
    # Effectiveness of CT-Module: competitor modules at the same 7 positions
    return [
        Expectation("C3D 3x3x3", _preset(Preset.C3D), 59.9),
        Expectation("R(2+1)D 1x3x3 + 3x1x1", _preset(Preset.R21D), 45.8),
        Expectation("CSN 1x1x1 + DW 3x3x3", _preset(Preset.CSN), 35.6),
        Expectation("CT-Module", CT_SIMPLE, 36.3),
    ]


def _table_3b() -> List[Expectation]:
    # Number of sub-dimensions; K >= 3 uses the balanced rule
    return [
        Expectation("1D", _ct(k=1, factorization="balanced"), 45.8),
        Expectation("2D", CT_SIMPLE, 36.3),
        Expectation("3D", _ct(k=3, factorization="balanced"), 35.7),
        Expectation("4D", _ct(k=4, factorization="balanced"), 35.6),
    ]


def _table_3c() -> List[Expectation]:
    # Connection type: no published cost, rows carry no reference
    return [
        Expectation("coupling", _ct(connection=Connection.COUPLING), None, None),
        Expectation("serial", _ct(connection=Connection.SERIAL), None, None),
        Expectation("parallel", CT_SIMPLE, 36.3),
    ]


def _table_3d() -> List[Expectation]:
    # Dimension size C2 of C = C1 x C2
    return [
        Expectation("C2 = 1", _ct(c2=1), 45.9),
        Expectation("C2 = 4", _ct(c2=4), 37.6),
        Expectation("C2 = 16", _ct(c2=16), 36.4),
        Expectation("C2 = floor(sqrt(C))", CT_SIMPLE, 36.3),
    ]


def _table_3e() -> List[Expectation]:
    # Number and location of CT-Blocks, replaced from the deepest stage up.
    # The "+12" row has no derivable placement and is left out.
    return [
        Expectation("+0 (TSN)", TSN, 43.0, 0.02),
        Expectation("+1 stage5", NetSpec(variant=Variant.SIMPLE, replacement_limit=1), 41.9),
        Expectation("+4 stage4-5", NetSpec(variant=Variant.SIMPLE, replacement_limit=4), 38.9),
        Expectation("+6 stage3-5", NetSpec(variant=Variant.SIMPLE, replacement_limit=6), 37.1),
        Expectation("+7 stage2-5", CT_SIMPLE, 36.3),
    ]


def _table_3f() -> List[Expectation]:
    # Kernel sizes per sub-dimension, "spatial/temporal" for C1 then C2
    return [
        Expectation("C1 1/1, C2 3/3", _ct(kernels=("1/1", "3/3")), 35.5),
        Expectation("C1 1/1, C2 5/5", _ct(kernels=("1/1", "5/5")), 36.6),
        Expectation("C1 3/3, C2 3/3", CT_SIMPLE, 36.3),
        Expectation("C1 3/3, C2 5/5", _ct(kernels=("3/3", "5/5")), 37.4),
        Expectation("C1 5/5, C2 5/5", _ct(kernels=("5/5", "5/5")), 38.9),
    ]


def _table_3g() -> List[Expectation]:
    # Impact of different modules; the SE row is not modelled
    return [
        Expectation("Baseline (TSN)", TSN, 43.0, 0.02),
        Expectation("+CT-Module", CT_SIMPLE, 36.3),
        Expectation("+CT-Module+PWConv", NetSpec(block=BlockTemplate(te=False)), 37.2),
        Expectation("+CT-Module+PWConv+TE", CT_FULL, 37.3),
    ]


def _table_3h() -> List[Expectation]:
    # Spatial resolution of the full CT-Net
    return [
        Expectation("224 x 224", CT_FULL, 28.6, resolution=224),
        Expectation("256 x 256", CT_FULL, 37.3, resolution=256),
    ]


def _table_params() -> List[Expectation]:
    # Parameter counts in millions, 174-way head
    return [
        Expectation("TSN R50", TSN, 23.9, 0.02),
        Expectation("CT-Net R50", CT_FULL, 21.0, 0.03),
    ]


TABLES: Dict[str, Callable[[], List[Expectation]]] = {
    "3a": _table_3a,
    "3b": _table_3b,
    "3c": _table_3c,
    "3d": _table_3d,
    "3e": _table_3e,
    "3f": _table_3f,
    "3g": _table_3g,
    "3h": _table_3h,
    "params": _table_params,
}

TITLES = {
    "3a": "Effectiveness of CT-Module",
    "3b": "Number of sub-dimensions",
    "3c": "Connection type of spatiotemporal convolution",
    "3d": "Dimension size",
    "3e": "Number and location of CT-Blocks",
    "3f": "Kernel sizes along different dimensions",
    "3g": "Impact of different modules",
    "3h": "Impact of different spatial resolution",
    "params": "Parameter counts",
}


def run_table(name: str, frames: int = 8, resolution: int = 256, true_flops: bool = False) -> TableReport:
    """Evaluate one ablation table."""
    if name not in TABLES:
        raise ConfigInvalid(f"Unknown table {name!r}", {"known": sorted(TABLES)})
    rows = []
    for exp in TABLES[name]():
        report = count_cost(exp.spec, frames, exp.resolution or resolution, true_flops)
        computed = report.mparams if name == "params" else report.gflops
        rows.append(TableRow(label=exp.label, published=exp.published, computed=computed, tolerance=exp.tolerance))
        logger.debug(f"Table {name} row {exp.label}: {computed:.3f}")
    unit = "M params" if name == "params" else ("GFLOPs (2xMACs)" if true_flops else "GFLOPs")
    return TableReport(table=name, title=TITLES[name], unit=unit, rows=rows)
