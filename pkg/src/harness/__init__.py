"""Config loading, synthetic data, training, checkpoints and verification suites."""

from src.harness.checkpoint import load_checkpoint, save_checkpoint
from src.harness.config_loader import load_config, parse_config_text
from src.harness.dataset import emit_dataset, generate_dataset, oracle_accuracy
from src.harness.suites import SUITES, run_suite
from src.harness.trainer import Trainer, paired_train, train

__all__ = [
    "SUITES",
    "Trainer",
    "emit_dataset",
    "generate_dataset",
    "load_checkpoint",
    "load_config",
    "oracle_accuracy",
    "paired_train",
    "parse_config_text",
    "run_suite",
    "save_checkpoint",
    "train",
]
