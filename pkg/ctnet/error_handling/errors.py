"""
Exception hierarchy for ctnet.
Every error carries a stable code and a category; the CLI turns the category
into a process exit code.
"""

from enum import Enum
from typing import Any, Dict, Optional


class ErrorCategory(Enum):
    """Categories of errors for exit-code mapping."""
    SHAPE = "shape"         # Tensor dims / factorization mismatches
    CONFIG = "config"       # Bad architecture or CLI configuration
    NUMERIC = "numeric"     # NaN/Inf, divergence
    IO = "io"               # Tensor / report file problems
    CHECK = "check"         # A verification or tolerance check failed
    INTERNAL = "internal"   # Broken invariants inside the library


class CTNetError(Exception):
    """Base class for all ctnet errors."""

    code = "ctnet_error"
    category = ErrorCategory.INTERNAL

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "code": self.code,
            "category": self.category.value,
            "message": self.message,
            "details": self.details,
        }


class FactorizationMismatch(CTNetError):
    """Raised when a channel factorization does not multiply out to C."""
    code = "FactorizationMismatch"
    category = ErrorCategory.SHAPE


class ShapeMismatch(CTNetError):
    """Raised when tensor dims are incompatible with an operation."""
    code = "ShapeMismatch"
    category = ErrorCategory.SHAPE


class KernelShapeViolation(CTNetError):
    """Raised when a spatial/temporal conv gets a kernel on a forbidden axis."""
    code = "KernelShapeViolation"
    category = ErrorCategory.SHAPE


class ConfigInvalid(CTNetError):
    """Raised for invalid block, network or training configuration."""
    code = "ConfigInvalid"
    category = ErrorCategory.CONFIG


class UnknownPreset(ConfigInvalid):
    """Raised when a degeneration preset name is not recognized."""
    code = "UnknownPreset"


class InputTooSmall(CTNetError):
    """Raised when a receptive-field probe would not fit inside the input."""
    code = "InputTooSmall"
    category = ErrorCategory.SHAPE


class UnsupportedOp(CTNetError):
    """Raised when backward reaches a node without a gradient rule."""
    code = "UnsupportedOp"
    category = ErrorCategory.INTERNAL


class GraphCycle(CTNetError):
    """Raised if the autograd tape is not a DAG (cannot happen by construction)."""
    code = "GraphCycle"
    category = ErrorCategory.INTERNAL


class NumericError(CTNetError):
    """Raised by debug-mode finiteness checks."""
    code = "NumericError"
    category = ErrorCategory.NUMERIC


class Diverged(NumericError):
    """Raised when the training loss becomes NaN or infinite."""
    code = "Diverged"

    def __init__(self, step: int, loss: float):
        super().__init__(f"Training diverged at step {step} (loss={loss})", {"step": step, "loss": loss})
        self.step = step


class TensorFormatError(CTNetError):
    """Raised when a tensor file is malformed."""
    code = "TensorFormatError"
    category = ErrorCategory.IO


class CheckFailed(CTNetError):
    """Raised when a verification or tolerance check fails."""
    code = "CheckFailed"
    category = ErrorCategory.CHECK


_EXIT_CODES = {
    ErrorCategory.SHAPE: 2,
    ErrorCategory.CONFIG: 2,
    ErrorCategory.IO: 2,
    ErrorCategory.NUMERIC: 1,
    ErrorCategory.CHECK: 1,
    ErrorCategory.INTERNAL: 1,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception to a CLI exit code (2 usage/config, 1 check failure)."""
    if isinstance(error, CTNetError):
        return _EXIT_CODES[error.category]
    return 1
