"""
Tests for the synthetic motion datasets.
"""

import numpy as np
import pytest

from ctnet.error_handling import ConfigInvalid
from ctnet.train.synthetic import SyntheticTask, gen_synthetic, render_clip


@pytest.mark.unit
class TestSyntheticTask:
    def test_classes(self):
        assert SyntheticTask().classes == 4
        assert SyntheticTask(name="appearance-vs-motion").classes == 2

    def test_unknown_task(self):
        with pytest.raises(ConfigInvalid):
            SyntheticTask(name="colour")

    def test_patch_must_fit(self):
        with pytest.raises(ConfigInvalid):
            SyntheticTask(size=8, patch=8)


@pytest.mark.unit
class TestRenderClip:
    """Single clips move the patch by the given velocity."""

    def test_shift_between_frames(self, rng):
        task = SyntheticTask(frames=3, size=10, patch=3)
        clip = render_clip(rng, task, (0, 2))
        assert clip.shape == (1, 3, 10, 10)
        # the patch sits above the background range
        bright0 = np.argwhere(clip[0, 0] >= 0.7)
        bright1 = np.argwhere(clip[0, 1] >= 0.7)
        assert len(bright0) == len(bright1) == 9
        moved = {(int(y), int((x + 2) % 10)) for y, x in bright0}
        assert moved == {(int(y), int(x)) for y, x in bright1}

    def test_static_patch(self, rng):
        clip = render_clip(rng, SyntheticTask(frames=4, size=8, patch=2), (0, 0))
        assert np.array_equal(clip[0, 0], clip[0, 3])


@pytest.mark.unit
class TestGenSynthetic:
    """Datasets are deterministic and class-balanced."""

    def test_shapes(self, tiny_task):
        data = gen_synthetic(tiny_task, "train", 42)
        assert data.clips.shape == (16, 1, 4, 8, 8)
        assert data.labels.dtype == np.int64
        assert len(data) == 16

    def test_deterministic(self, tiny_task):
        a = gen_synthetic(tiny_task, "val", 7)
        b = gen_synthetic(tiny_task, "val", 7)
        assert np.array_equal(a.clips, b.clips)
        assert np.array_equal(a.labels, b.labels)

    def test_splits_differ(self, tiny_task):
        train = gen_synthetic(tiny_task, "train", 7)
        val = gen_synthetic(tiny_task, "val", 7)
        assert not np.array_equal(train.clips[:8], val.clips)

    def test_seeds_differ(self, tiny_task):
        assert not np.array_equal(
            gen_synthetic(tiny_task, "train", 1).clips, gen_synthetic(tiny_task, "train", 2).clips
        )

    def test_balanced_labels(self, tiny_task):
        labels = gen_synthetic(tiny_task, "train", 3).labels
        assert np.bincount(labels).tolist() == [4, 4, 4, 4]

    def test_appearance_vs_motion(self):
        task = SyntheticTask(name="appearance-vs-motion", frames=3, size=8, patch=2, train_size=6, val_size=2)
        data = gen_synthetic(task, "train", 0)
        for clip, label in zip(data.clips, data.labels):
            still = np.array_equal(clip[0, 0], clip[0, 1])
            assert still == (label == 0)

    def test_frame_statistics_match_across_classes(self):
        # a frame-order-agnostic model cannot tell directions apart
        task = SyntheticTask(frames=2, size=8, patch=2, train_size=400, val_size=4)
        data = gen_synthetic(task, "train", 0)
        left = data.clips[data.labels == 0, 0, 0].mean(axis=0)
        right = data.clips[data.labels == 1, 0, 0].mean(axis=0)
        assert np.max(np.abs(left - right)) < 0.15

    def test_batches_cover_everything(self, tiny_task):
        data = gen_synthetic(tiny_task, "train", 0)
        seen = np.concatenate([y for _, y in data.batches(5)])
        assert np.array_equal(seen, data.labels)

    def test_unknown_split(self, tiny_task):
        with pytest.raises(ConfigInvalid):
            gen_synthetic(tiny_task, "test", 0)
