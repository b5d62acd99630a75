"""Tests for toy training, metric traces and paired runs."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from src.harness.checkpoint import load_checkpoint
from src.harness.config_loader import load_config
from src.harness.trainer import (
    METRICS_HEADER,
    PAIRED_HEADER,
    Trainer,
    loss_reduction,
    paired_train,
    trend_summary,
)
from src.models.metrics import MetricRow, PairedRow
from src.nn.backbone import build_model_params
from src.utils.logger import init_logger
from tests.conftest import make_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _rows(path):
    with path.open(newline="") as handle:
        return list(csv.reader(handle))


def _pair(seed, step, grafted_acc, plain_acc):
    return PairedRow(
        seed=seed,
        step=step,
        grafted_loss=1.0,
        plain_loss=1.0,
        grafted_test_acc=grafted_acc,
        plain_test_acc=plain_acc,
    )


class TestTrainer:
    """Tests for a single training run."""

    def test_writes_metrics_and_checkpoint(self, tiny_config):
        """A run writes a header, one row per eval point and a checkpoint."""
        trainer = Trainer(tiny_config)
        rows = trainer.train()

        assert [row.step for row in rows] == [0, 2, 3]
        table = _rows(trainer.metrics_path)
        assert table[0] == METRICS_HEADER
        assert [line[0] for line in table[1:]] == ["0", "2", "3"]
        assert trainer.checkpoint_path.exists()

    def test_checkpoint_matches_model(self, tiny_config):
        """The saved checkpoint loads into a fresh model of the same spec."""
        trainer = Trainer(tiny_config)
        trainer.train()
        store = build_model_params(tiny_config.spec, seed=99).store

        checkpoint = load_checkpoint(trainer.checkpoint_path, store)

        assert '"homogeneous"' in checkpoint.spec_json
        for name, tensor in trainer.model.store.named_parameters():
            np.testing.assert_allclose(store[name].data, tensor.data, rtol=1e-6, atol=1e-7)

    def test_deterministic(self, tmp_path):
        """Same seed and config give byte-identical metrics and checkpoints."""
        first = Trainer(make_config(output_dir=tmp_path / "a"))
        second = Trainer(make_config(output_dir=tmp_path / "b"))
        first.train()
        second.train()

        assert first.metrics_path.read_bytes() == second.metrics_path.read_bytes()
        assert first.checkpoint_path.read_bytes() == second.checkpoint_path.read_bytes()

    def test_rerun_replaces_history_with_warning(self, tiny_config, capsys):
        """A second run into the same directory overwrites its files and says so."""
        init_logger(level="INFO", json_format=True)
        Trainer(tiny_config).train()
        capsys.readouterr()
        rows = Trainer(tiny_config).train()

        events = [json.loads(line) for line in capsys.readouterr().err.strip().splitlines()]
        warning = next(e for e in events if e["event"] == "run_overwritten")
        assert warning["files"] == ["metrics.csv", "model.ckpt"]
        assert len(_rows(Path(tiny_config.output_dir) / "metrics.csv")) == len(rows) + 1

    def test_plain_run_drops_grafts(self, tiny_config):
        """grafted=False trains the same spec without its branches."""
        trainer = Trainer(tiny_config, grafted=False)
        trainer.train()

        assert trainer.model.num_grafts == 0
        assert not any(name.startswith("grafts.") for name in trainer.model.store.names())

    def test_accuracies_in_range(self, tiny_config):
        """Evaluated accuracies are fractions."""
        for row in Trainer(tiny_config).train():
            assert 0.0 <= row.train_acc <= 1.0
            assert 0.0 <= row.test_acc <= 1.0
            assert np.isfinite(row.loss)


class TestPaired:
    """Tests for grafted / plain comparisons."""

    def test_paired_csv(self, tiny_config):
        """Both arms run per seed and their rows are paired by step."""
        rows = paired_train(tiny_config, seeds=[0, 1])
        root = Path(tiny_config.output_dir)

        assert len(rows) == 6
        assert {row.seed for row in rows} == {0, 1}
        table = _rows(root / "paired.csv")
        assert table[0] == PAIRED_HEADER
        assert len(table) == 7
        assert (root / "seed_1" / "plain" / "metrics.csv").exists()

    def test_trend_summary_uses_final_step(self):
        """Only each seed's last row counts."""
        rows = [_pair(0, 0, 0.0, 0.9), _pair(0, 5, 0.8, 0.6), _pair(1, 5, 0.6, 0.6)]
        summary = trend_summary(rows)

        assert summary["seeds"] == 2.0
        assert summary["grafted_mean"] == pytest.approx(0.7)
        assert summary["plain_mean"] == pytest.approx(0.6)
        assert summary["gap"] == pytest.approx(0.1)

    def test_loss_reduction(self):
        """Fractional drop from the first to the last row."""
        rows = [
            MetricRow(step=0, loss=2.0, train_acc=0.25, test_acc=0.25),
            MetricRow(step=10, loss=0.5, train_acc=1.0, test_acc=1.0),
        ]

        assert loss_reduction(rows) == pytest.approx(0.75)


@pytest.mark.slow
class TestDeskScaleTrend:
    """The shipped trend config, grafted against plain over five seeds."""

    def test_grafted_not_worse(self, tmp_path):
        """Grafted mean test accuracy is within half a point of plain or better."""
        config = load_config(CONFIG_DIR / "trend.conf").model_copy(
            update={"output_dir": str(tmp_path)}
        )
        summary = trend_summary(paired_train(config, seeds=range(5)))

        assert summary["gap"] >= -0.005
