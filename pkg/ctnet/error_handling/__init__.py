"""Error types and exit-code mapping for ctnet."""

from .errors import (
    CTNetError,
    ErrorCategory,
    FactorizationMismatch,
    ShapeMismatch,
    KernelShapeViolation,
    ConfigInvalid,
    UnknownPreset,
    InputTooSmall,
    UnsupportedOp,
    GraphCycle,
    NumericError,
    Diverged,
    TensorFormatError,
    CheckFailed,
    exit_code_for,
)

__all__ = [
    "CTNetError",
    "ErrorCategory",
    "FactorizationMismatch",
    "ShapeMismatch",
    "KernelShapeViolation",
    "ConfigInvalid",
    "UnknownPreset",
    "InputTooSmall",
    "UnsupportedOp",
    "GraphCycle",
    "NumericError",
    "Diverged",
    "TensorFormatError",
    "CheckFailed",
    "exit_code_for",
]
