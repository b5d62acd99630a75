"""Shared fixtures: tiny run configs that train in well under a second."""

import pytest

from src.harness.config_loader import build_run_config, parse_config_text

TINY_CONFIG = """
precision = verify64
eval_interval = 2
grad_seeds = 1
oracle_instances = 2

model.kind = homogeneous
model.image_size = 16
model.patch_size = 4
model.depths = 2
model.channels = 8
model.heads = 2
model.window = 2
model.num_classes = 4

task.train_size = 16
task.test_size = 8

optimizer.lr = 0.01
optimizer.steps = 3
optimizer.batch_size = 8
"""


def make_config(text: str = TINY_CONFIG, **top_level):
    """Build a RunConfig from config text plus extra top-level keys."""
    extra = "".join(f"{key} = {value}\n" for key, value in top_level.items())
    return build_run_config(parse_config_text(text + extra))


@pytest.fixture
def tiny_config_text(tmp_path):
    """Config text for a tiny homogeneous run writing under tmp_path."""
    return TINY_CONFIG + f"output_dir = {tmp_path / 'run'}\n"


@pytest.fixture
def tiny_config(tmp_path):
    """A validated tiny RunConfig writing under tmp_path."""
    return make_config(output_dir=tmp_path / "run")


@pytest.fixture
def tiny_config_file(tmp_path, tiny_config_text):
    """The tiny config written to disk."""
    path = tmp_path / "tiny.conf"
    path.write_text(tiny_config_text, encoding="utf-8")
    return path
