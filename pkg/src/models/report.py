"""Verification suite results."""

from typing import Optional

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """Outcome of one verification check."""

    name: str = Field(..., description="Check name, e.g. 'grad.stages.0.blocks.1.attn.query.weight'")
    passed: bool = Field(..., description="Whether the check held")
    value: Optional[float] = Field(default=None, description="Measured quantity (error, ratio...)")
    threshold: Optional[float] = Field(default=None, description="Bound the value was held to")
    detail: str = Field(default="", description="Human-readable context")


class SuiteReport(BaseModel):
    """All checks of one suite run."""

    suite: str = Field(..., description="grad, invariants, cost or oracle")
    checks: list[CheckResult] = Field(default_factory=list)
    duration_s: float = Field(default=0.0, description="Wall-clock seconds")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]
