"""Tests for the synthetic planted-patch task."""

import numpy as np
import pytest

from src.errors import ConfigurationError
from src.harness.dataset import (
    batch_rng,
    emit_dataset,
    generate_dataset,
    oracle_accuracy,
    oracle_predict,
)
from src.models.run import TaskConfig


def _task(**overrides):
    values = dict(num_classes=4, train_size=64, test_size=32, noise=0.1)
    values.update(overrides)
    return TaskConfig(**values)


class TestGenerate:
    """Tests for dataset generation."""

    def test_same_seed_same_bytes(self):
        """Generation is a pure function of the seed."""
        first = generate_dataset(_task(), 32, seed=5)
        second = generate_dataset(_task(), 32, seed=5)

        for a, b in zip(first, second):
            assert a.images.tobytes() == b.images.tobytes()
            assert a.labels.tobytes() == b.labels.tobytes()

    def test_seeds_differ(self):
        """Different seeds give different images."""
        train_a, _ = generate_dataset(_task(), 32, seed=0)
        train_b, _ = generate_dataset(_task(), 32, seed=1)

        assert not np.array_equal(train_a.images, train_b.images)

    def test_train_and_test_streams_disjoint(self):
        """Train and test draw from different streams."""
        train, test = generate_dataset(_task(train_size=32, test_size=32), 32, seed=0)

        assert not np.array_equal(train.images, test.images)

    def test_shapes_and_balance(self):
        """Images are (n, S, S, C) and every class appears equally often."""
        train, test = generate_dataset(_task(), 32, seed=2, channels=3)

        assert train.images.shape == (64, 32, 32, 3)
        assert len(test) == 32
        assert np.bincount(train.labels, minlength=4).tolist() == [16, 16, 16, 16]

    def test_noise_bounds(self):
        """Pixels stay within noise of either zero or the signal."""
        train, _ = generate_dataset(_task(noise=0.2), 32, seed=3)
        values = train.images.reshape(-1)
        near_zero = np.abs(values) <= 0.2
        near_signal = np.abs(values - 1.0) <= 0.2

        assert np.all(near_zero | near_signal)

    def test_nine_classes(self):
        """K = 9 uses a 3x3 grid of cells."""
        train, _ = generate_dataset(_task(num_classes=9, train_size=27), 36, seed=0)

        assert train.grid_side == 3
        assert set(train.labels.tolist()) == set(range(9))

    def test_image_too_small(self):
        """Test that cells narrower than two pixels are rejected."""
        with pytest.raises(ConfigurationError):
            generate_dataset(_task(), 2, seed=0)

    def test_batch_rng_deterministic(self):
        """Minibatch order is reproducible from the seed."""
        assert np.array_equal(batch_rng(4).permutation(10), batch_rng(4).permutation(10))


class TestOracle:
    """Tests for the planted-patch oracle."""

    def test_noise_free_ceiling(self):
        """The oracle is perfect on noise-free data."""
        train, test = generate_dataset(_task(noise=0.0), 32, seed=0)

        assert oracle_accuracy(train) == 1.0
        assert oracle_accuracy(test) == 1.0

    def test_predictions_are_labels(self):
        """Predictions are class indices."""
        train, _ = generate_dataset(_task(), 32, seed=1)
        predictions = oracle_predict(train)

        assert predictions.shape == train.labels.shape
        assert predictions.min() >= 0 and predictions.max() < 4


class TestEmit:
    """Tests for writing datasets to disk."""

    def test_npz_files(self, tmp_path):
        """train.npz and test.npz hold the arrays."""
        train, test = generate_dataset(_task(), 32, seed=0)
        paths = emit_dataset(train, test, tmp_path / "data")

        assert [p.name for p in paths] == ["train.npz", "test.npz"]
        with np.load(paths[0]) as stored:
            assert np.array_equal(stored["images"], train.images)
            assert np.array_equal(stored["labels"], train.labels)
