"""Cost model, ablation tables, receptive-field probe and verification suites."""

from .cost import CostReport, CostRow, count_cost, layer_cost
from .interaction import interaction_matrix, predicted_interaction
from .receptive_field import RFReport, influence, predict_extent, probe_rf
from .reports import read_report
from .tables import TABLES, TableReport, TableRow, run_table
from .verification import SUITES, CaseResult, VerifyReport, check_gradients, run_suite

__all__ = [
    "CostReport",
    "CostRow",
    "count_cost",
    "layer_cost",
    "interaction_matrix",
    "predicted_interaction",
    "RFReport",
    "influence",
    "predict_extent",
    "probe_rf",
    "read_report",
    "TABLES",
    "TableReport",
    "TableRow",
    "run_table",
    "SUITES",
    "CaseResult",
    "VerifyReport",
    "check_gradients",
    "run_suite",
]
