"""Toy training loop with metric traces, checkpoints and paired comparisons."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from statistics import mean
from typing import Iterable, Optional

from src.errors import TrainingDivergedError
from src.harness.checkpoint import save_checkpoint
from src.harness.dataset import Dataset, batch_rng, generate_dataset
from src.models.metrics import MetricRow, PairedRow
from src.models.run import RunConfig
from src.nn.backbone import ModelParams, build_model_params, model_forward
from src.nn.optim import build_optimizer
from src.tensor import no_grad, precision
from src.tensor import ops
from src.utils.logger import LoggerMixin

METRICS_HEADER = ["step", "loss", "train_acc", "test_acc"]
PAIRED_HEADER = [
    "seed",
    "step",
    "grafted_loss",
    "plain_loss",
    "grafted_test_acc",
    "plain_test_acc",
]
EVAL_CHUNK = 256


class Trainer(LoggerMixin):
    """Trains one model of a RunConfig and records its metric trace.

    With ``grafted=False`` the same spec is trained without its grafts; the
    shared backbone starts from identical weights.
    """

    def __init__(self, config: RunConfig, grafted: bool = True, output_dir: Optional[Path] = None):
        self.config = config
        self.grafted = grafted
        self.spec = config.spec if grafted else config.spec.without_grafts()
        self.output_dir = Path(output_dir or config.output_dir)
        self.model: Optional[ModelParams] = None
        self.rows: list[MetricRow] = []

    @property
    def metrics_path(self) -> Path:
        return self.output_dir / "metrics.csv"

    @property
    def checkpoint_path(self) -> Path:
        return self.output_dir / "model.ckpt"

    def evaluate(self, data: Dataset) -> tuple[float, float]:
        """Mean cross-entropy and accuracy over the whole dataset."""
        total_loss, correct = 0.0, 0
        with no_grad():
            for start in range(0, len(data), EVAL_CHUNK):
                images = data.images[start : start + EVAL_CHUNK]
                labels = data.labels[start : start + EVAL_CHUNK]
                logits = model_forward(images, self.model)
                total_loss += ops.cross_entropy(logits, labels).item() * len(labels)
                correct += int((logits.data.argmax(axis=1) == labels).sum())
        return total_loss / len(data), correct / len(data)

    def _record(self, step: int, train: Dataset, test: Dataset, writer) -> MetricRow:
        loss, train_acc = self.evaluate(train)
        _, test_acc = self.evaluate(test)
        row = MetricRow(step=step, loss=loss, train_acc=train_acc, test_acc=test_acc)
        self.rows.append(row)
        writer.writerow(row.csv_fields())
        self.log.info(
            "train_eval",
            step=step,
            loss=round(loss, 6),
            train_acc=train_acc,
            test_acc=test_acc,
            grafted=self.grafted,
        )
        return row

    def train(self) -> list[MetricRow]:
        """Run the configured number of steps.

        Writes ``metrics.csv`` (a row every ``eval_interval`` steps and after
        the last step) and ``model.ckpt`` into the output directory. Files
        left there by an earlier run are replaced, with a warning.

        Raises:
            TrainingDivergedError: If a minibatch loss is not finite
        """
        cfg, opt_cfg = self.config, self.config.optimizer
        self.rows = []
        self.output_dir.mkdir(parents=True, exist_ok=True)
        previous = [p.name for p in (self.metrics_path, self.checkpoint_path) if p.exists()]
        if previous:
            self.log.warning("run_overwritten", output_dir=str(self.output_dir), files=previous)
        with precision(cfg.precision):
            self.model = build_model_params(self.spec, cfg.seed)
            train, test = generate_dataset(
                cfg.task, self.spec.image_size, cfg.seed, self.spec.in_channels
            )
            train.images = train.images.astype(self.model.store.dtype)
            test.images = test.images.astype(self.model.store.dtype)
            optimizer = build_optimizer(self.model.store, opt_cfg)
            rng = batch_rng(cfg.seed)
            batch = min(opt_cfg.batch_size, len(train))

            self.log.info(
                "train_started",
                seed=cfg.seed,
                steps=opt_cfg.steps,
                params=self.model.store.num_elements(),
                grafts=self.model.num_grafts,
                precision=cfg.precision,
            )
            with self.metrics_path.open("w", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(METRICS_HEADER)
                for step in range(opt_cfg.steps):
                    if step % cfg.eval_interval == 0:
                        self._record(step, train, test, writer)
                    index = rng.choice(len(train), size=batch, replace=False)
                    logits = model_forward(train.images[index], self.model)
                    loss = ops.cross_entropy(logits, train.labels[index])
                    value = loss.item()
                    if not math.isfinite(value):
                        self.log.error("train_diverged", step=step, loss=value)
                        raise TrainingDivergedError(step, value)
                    optimizer.zero_grad()
                    loss.backward()
                    optimizer.step()
                self._record(opt_cfg.steps, train, test, writer)

            save_checkpoint(self.model.store, self.checkpoint_path, self.spec.model_dump_json())
        return self.rows


def train(config: RunConfig, grafted: bool = True) -> list[MetricRow]:
    """Train ``config``'s model and return its metric trace."""
    return Trainer(config, grafted=grafted).train()


def paired_train(config: RunConfig, seeds: Optional[Iterable[int]] = None) -> list[PairedRow]:
    """Train grafted and ungrafted models per seed and pair their metric rows.

    Each run writes under ``<output_dir>/seed_<s>/{grafted,plain}``; the
    pairs go to ``<output_dir>/paired.csv``.
    """
    seeds = list(seeds) if seeds is not None else [config.seed]
    root = Path(config.output_dir)
    rows: list[PairedRow] = []
    for seed in seeds:
        seeded = config.model_copy(update={"seed": seed})
        grafted = Trainer(seeded, True, root / f"seed_{seed}" / "grafted").train()
        plain = Trainer(seeded, False, root / f"seed_{seed}" / "plain").train()
        for g, p in zip(grafted, plain):
            rows.append(
                PairedRow(
                    seed=seed,
                    step=g.step,
                    grafted_loss=g.loss,
                    plain_loss=p.loss,
                    grafted_test_acc=g.test_acc,
                    plain_test_acc=p.test_acc,
                )
            )

    root.mkdir(parents=True, exist_ok=True)
    with (root / "paired.csv").open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PAIRED_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.seed,
                    row.step,
                    repr(row.grafted_loss),
                    repr(row.plain_loss),
                    repr(row.grafted_test_acc),
                    repr(row.plain_test_acc),
                ]
            )
    return rows


def trend_summary(rows: list[PairedRow]) -> dict[str, float]:
    """Final-step test accuracy averaged over seeds, and the grafted - plain gap."""
    final: dict[int, PairedRow] = {}
    for row in rows:
        if row.seed not in final or row.step >= final[row.seed].step:
            final[row.seed] = row
    grafted = mean(r.grafted_test_acc for r in final.values())
    plain = mean(r.plain_test_acc for r in final.values())
    return {
        "grafted_mean": grafted,
        "plain_mean": plain,
        "gap": grafted - plain,
        "seeds": float(len(final)),
    }


def loss_reduction(rows: list[MetricRow]) -> float:
    """Fractional drop from the first to the last recorded loss."""
    first, last = rows[0].loss, rows[-1].loss
    return (first - last) / first if first else 0.0
