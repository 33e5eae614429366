"""Synthetic video tasks and the toy trainer."""

from .synthetic import ClipSet, SyntheticTask, gen_synthetic, render_clip
from .trainer import TrainReport, dump_weights, evaluate, load_weights, train

__all__ = [
    "ClipSet",
    "SyntheticTask",
    "gen_synthetic",
    "render_clip",
    "TrainReport",
    "dump_weights",
    "evaluate",
    "load_weights",
    "train",
]
