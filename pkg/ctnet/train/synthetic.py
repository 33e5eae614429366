"""
Synthetic clips whose labels need temporal modelling.

direction4: a textured patch slides 1 or 2 px per frame left, right, up
or down across a static random background. The start position is uniform
on the torus and the patch wraps around the border, so the patch location
in any single frame is uniform whatever the class: a frame-order-agnostic
model sees identical per-frame statistics for every label. Reversing a
"left" clip in time yields a valid "right" clip.

appearance-vs-motion: class 0 holds the patch still, class 1 moves it.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ctnet.error_handling import ConfigInvalid

logger = logging.getLogger(__name__)

TASKS = ("direction4", "appearance-vs-motion")
SPLITS = {"train": 0, "val": 1}

# (dy, dx) per direction label
DIRECTIONS = {0: (0, -1), 1: (0, 1), 2: (-1, 0), 3: (1, 0)}
DIRECTION_NAMES = {0: "left", 1: "right", 2: "up", 3: "down"}


@dataclass(frozen=True)
class SyntheticTask:
    """Clip geometry and dataset sizes of one synthetic task."""
    name: str = "direction4"
    frames: int = 8
    size: int = 32
    patch: int = 6
    train_size: int = 512
    val_size: int = 256

    def __post_init__(self):
        if self.name not in TASKS:
            raise ConfigInvalid(f"Unknown task {self.name!r}", {"known": list(TASKS)})
        if self.patch >= self.size or min(self.frames, self.size, self.patch) < 1:
            raise ConfigInvalid(f"Invalid clip geometry {self}")

    @property
    def classes(self) -> int:
        return 4 if self.name == "direction4" else 2

    def split_size(self, split: str) -> int:
        return self.train_size if split == "train" else self.val_size


@dataclass(frozen=True)
class ClipSet:
    clips: np.ndarray   # (N, 1, T, H, W)
    labels: np.ndarray  # (N,)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def batches(self, batch_size: int, order: np.ndarray = None):
        order = np.arange(len(self)) if order is None else order
        for start in range(0, len(self), batch_size):
            idx = order[start:start + batch_size]
            yield self.clips[idx], self.labels[idx]


def render_clip(
    rng: np.random.Generator,
    task: SyntheticTask,
    velocity: Tuple[int, int],
) -> np.ndarray:
    """One (1, T, H, W) clip with the patch moving by `velocity` px per frame."""
    size, p = task.size, task.patch
    background = rng.uniform(0.0, 0.5, size=(size, size))
    canvas = np.zeros((size, size))
    mask = np.zeros((size, size), dtype=bool)
    canvas[:p, :p] = rng.uniform(0.7, 1.0, size=(p, p))
    mask[:p, :p] = True
    y0, x0 = (int(v) for v in rng.integers(0, size, size=2))
    dy, dx = velocity

    clip = np.empty((1, task.frames, size, size))
    for t in range(task.frames):
        shift = (y0 + dy * t, x0 + dx * t)
        clip[0, t] = np.where(
            np.roll(mask, shift, axis=(0, 1)), np.roll(canvas, shift, axis=(0, 1)), background
        )
    return clip


def _velocity(rng: np.random.Generator, task: SyntheticTask, label: int) -> Tuple[int, int]:
    speed = int(rng.integers(1, 3))
    if task.name == "direction4":
        dy, dx = DIRECTIONS[label]
    elif label == 0:
        return 0, 0
    else:
        dy, dx = DIRECTIONS[int(rng.integers(0, 4))]
    return dy * speed, dx * speed


def gen_synthetic(task: SyntheticTask, split: str, seed: int) -> ClipSet:
    """Deterministic per (task, split, seed); classes are balanced."""
    if split not in SPLITS:
        raise ConfigInvalid(f"Unknown split {split!r}", {"known": list(SPLITS)})
    rng = np.random.default_rng([seed, SPLITS[split], TASKS.index(task.name)])
    n = task.split_size(split)
    labels = rng.permutation(np.arange(n) % task.classes)
    clips = np.stack([render_clip(rng, task, _velocity(rng, task, int(y))) for y in labels])
    logger.debug(f"Generated {n} {task.name} clips for split {split}")
    return ClipSet(clips, labels.astype(np.int64))
