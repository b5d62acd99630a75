"""Data models for specs, run configs and reports."""

from src.models.cost import BlockCost, ComplexityPoint, ComplexityReport, CostReport
from src.models.metrics import MetricRow, PairedRow
from src.models.report import CheckResult, SuiteReport
from src.models.run import OptimizerConfig, RunConfig, TaskConfig
from src.models.spec import BackboneSpec, GraftConfig, GraftSite

__all__ = [
    "BackboneSpec",
    "BlockCost",
    "CheckResult",
    "ComplexityPoint",
    "ComplexityReport",
    "CostReport",
    "GraftConfig",
    "GraftSite",
    "MetricRow",
    "OptimizerConfig",
    "PairedRow",
    "RunConfig",
    "SuiteReport",
    "TaskConfig",
]
