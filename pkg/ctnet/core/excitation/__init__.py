"""Tensor Excitation gates."""

from .te import (
    GateParams,
    TEParams,
    spatial_excitation,
    temporal_excitation,
    channel_excitation,
    te_apply,
    save_te,
    load_te,
)

__all__ = [
    "GateParams",
    "TEParams",
    "spatial_excitation",
    "temporal_excitation",
    "channel_excitation",
    "te_apply",
    "save_te",
    "load_te",
]
