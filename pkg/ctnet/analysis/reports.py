"""
Reading JSON reports back. Every report carries a `kind` tag, so one
discriminated union covers all of them.
"""

from typing import Annotated, Union

from pydantic import Field, TypeAdapter, ValidationError

from ctnet.analysis.cost import CostReport
from ctnet.analysis.receptive_field import RFReport
from ctnet.analysis.tables import TableReport
from ctnet.analysis.verification import VerifyReport
from ctnet.error_handling import ConfigInvalid
from ctnet.train.trainer import TrainReport

Report = Annotated[
    Union[CostReport, TableReport, RFReport, VerifyReport, TrainReport],
    Field(discriminator="kind"),
]

_adapter = TypeAdapter(Report)


def read_report(text: str) -> Report:
    """Parse any report written with --json."""
    try:
        return _adapter.validate_json(text)
    except ValidationError as e:
        raise ConfigInvalid(f"Not a ctnet report: {e.error_count()} validation error(s)", {"errors": str(e)})
