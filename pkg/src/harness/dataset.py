"""Synthetic planted-patch classification task.

The image is split into a sqrt(K) x sqrt(K) grid of cells. One cell holds a
square patch of value ``signal`` at a random offset; the label is that
cell's row-major index. Every pixel also gets uniform noise in
[-noise, noise].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from src.errors import ConfigurationError
from src.models.run import TaskConfig
from src.utils.logger import get_logger

logger = get_logger("dataset")

# SeedSequence children: train images, test images, minibatch order
TRAIN_STREAM, TEST_STREAM, BATCH_STREAM = range(3)


@dataclass
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    grid_side: int

    def __len__(self) -> int:
        return len(self.labels)


def seed_streams(seed: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(3)


def batch_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed_streams(seed)[BATCH_STREAM])


def _cell_layout(image_size: int, grid_side: int) -> tuple[int, int]:
    cell = image_size // grid_side
    if cell * grid_side != image_size or cell < 2:
        raise ConfigurationError(
            f"image size {image_size} does not split into a {grid_side}x{grid_side} grid of cells"
        )
    return cell, max(1, cell // 2)


def _generate(
    task: TaskConfig, size: int, image_size: int, channels: int, stream: np.random.SeedSequence
) -> Dataset:
    rng = np.random.default_rng(stream)
    k, side = task.num_classes, task.grid_side
    cell, patch = _cell_layout(image_size, side)

    labels = rng.permutation(np.arange(size) % k)
    images = rng.uniform(-task.noise, task.noise, size=(size, image_size, image_size, channels))
    offsets = rng.integers(0, cell - patch + 1, size=(size, 2))
    for i, label in enumerate(labels):
        row = (label // side) * cell + offsets[i, 0]
        col = (label % side) * cell + offsets[i, 1]
        images[i, row : row + patch, col : col + patch, :] += task.signal
    return Dataset(images=images, labels=labels.astype(np.int64), grid_side=side)


def generate_dataset(
    task: TaskConfig, image_size: int, seed: int, channels: int = 3
) -> tuple[Dataset, Dataset]:
    """Deterministic (train, test) pair; the two draw from disjoint seed streams.

    Labels are balanced: each class appears floor(n / K) or ceil(n / K) times.

    Raises:
        ConfigurationError: If the image does not split into cells of side >= 2
    """
    streams = seed_streams(seed)
    train = _generate(task, task.train_size, image_size, channels, streams[TRAIN_STREAM])
    test = _generate(task, task.test_size, image_size, channels, streams[TEST_STREAM])
    logger.debug(
        "dataset_generated",
        seed=seed,
        train=len(train),
        test=len(test),
        classes=task.num_classes,
        noise=task.noise,
    )
    return train, test


def oracle_predict(data: Dataset) -> np.ndarray:
    """Index of the cell with the highest mean intensity."""
    n, size = data.images.shape[:2]
    side = data.grid_side
    cell = size // side
    means = data.images.reshape(n, side, cell, side, cell, -1).mean(axis=(2, 4, 5))
    return means.reshape(n, side * side).argmax(axis=1)


def oracle_accuracy(data: Dataset) -> float:
    """Accuracy of the planted-patch oracle; 1.0 on noise-free data."""
    return float((oracle_predict(data) == data.labels).mean())


def emit_dataset(train: Dataset, test: Dataset, directory: Union[str, Path]) -> list[Path]:
    """Write ``train.npz`` and ``test.npz`` (images, labels) to ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, data in (("train", train), ("test", test)):
        path = directory / f"{name}.npz"
        np.savez(path, images=data.images, labels=data.labels)
        paths.append(path)
    logger.info("dataset_emitted", directory=str(directory), files=[p.name for p in paths])
    return paths
