"""Run configuration: model spec plus task, optimizer and output settings."""

import math
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from src.config import PrecisionMode
from src.errors import ConfigurationError
from src.models.spec import BackboneSpec

OptimizerKind = Literal["adamw", "sgd"]


class TaskConfig(BaseModel):
    """Synthetic planted-patch classification task."""

    num_classes: int = Field(default=4, ge=1, description="K; must be a perfect square")
    train_size: int = Field(default=512, ge=1, description="Training images")
    test_size: int = Field(default=256, ge=1, description="Test images")
    noise: float = Field(default=0.1, ge=0.0, description="Half-width of additive uniform noise")
    signal: float = Field(default=1.0, gt=0.0, description="Value of the planted patch")

    @property
    def grid_side(self) -> int:
        return math.isqrt(self.num_classes)

    @model_validator(mode="after")
    def _check_square(self) -> "TaskConfig":
        if self.grid_side**2 != self.num_classes:
            raise ConfigurationError(f"K={self.num_classes} classes is not a perfect square")
        return self


class OptimizerConfig(BaseModel):
    """Optimizer and schedule for toy training."""

    kind: OptimizerKind = Field(default="adamw", description="adamw or sgd")
    lr: float = Field(default=1e-3, ge=0.0, description="Learning rate")
    steps: int = Field(default=500, ge=0, description="Optimizer steps")
    batch_size: int = Field(default=32, ge=1, description="Images per step")
    weight_decay: float = Field(default=0.05, ge=0.0, description="Decoupled weight decay")
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0, description="AdamW first-moment decay")
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0, description="AdamW second-moment decay")
    eps: float = Field(default=1e-8, gt=0.0, description="AdamW denominator guard")
    momentum: float = Field(default=0.0, ge=0.0, lt=1.0, description="SGD momentum")


class RunConfig(BaseModel):
    """Everything one CLI job needs."""

    spec: BackboneSpec
    seed: int = Field(default=0, ge=0, description="Seed for init, data and batching")
    precision: PrecisionMode = Field(default="train32", description="verify64 or train32")
    task: TaskConfig = Field(default_factory=TaskConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    eval_interval: int = Field(default=50, ge=1, description="Steps between metric rows")
    output_dir: str = Field(default="runs/default", description="Checkpoint and metrics directory")
    grad_seeds: int = Field(default=3, ge=1, description="Seeds for the gradient suite")
    oracle_instances: int = Field(default=10, ge=1, description="Random cases per oracle check")

    @model_validator(mode="after")
    def _check_task_matches_model(self) -> "RunConfig":
        if self.task.num_classes != self.spec.num_classes:
            raise ConfigurationError(
                f"task has {self.task.num_classes} classes but the model has "
                f"{self.spec.num_classes} outputs"
            )
        cell = self.spec.image_size // self.task.grid_side
        if cell * self.task.grid_side != self.spec.image_size or cell < 2:
            raise ConfigurationError(
                f"image size {self.spec.image_size} does not split into a "
                f"{self.task.grid_side}x{self.task.grid_side} grid of planted-patch cells"
            )
        return self
