"""Parameter and FLOP accounting records."""

from typing import Literal

from pydantic import BaseModel, Field

CostGroup = Literal["backbone", "graft", "head"]


class BlockCost(BaseModel):
    """Cost of one named block; ``name`` is the parameter-name prefix it owns."""

    name: str = Field(..., description="Parameter prefix, e.g. 'stages.0.blocks.1'")
    group: CostGroup = Field(..., description="backbone, graft or head")
    params: int = Field(default=0, ge=0, description="Learnable scalars")
    macs: int = Field(default=0, ge=0, description="Multiply-accumulates of contractions")
    elementwise: int = Field(default=0, ge=0, description="Unit-cost elementwise operations")
    resolution: str = Field(default="", description="Feature extents the block runs at")

    @property
    def total_ops(self) -> int:
        return self.macs + self.elementwise


class CostReport(BaseModel):
    """Per-block costs of one BackboneSpec at batch size 1."""

    records: list[BlockCost] = Field(default_factory=list)

    @property
    def params(self) -> int:
        return sum(r.params for r in self.records)

    @property
    def macs(self) -> int:
        return sum(r.macs for r in self.records)

    @property
    def total_ops(self) -> int:
        return sum(r.total_ops for r in self.records)

    def group(self, name: CostGroup) -> list[BlockCost]:
        return [r for r in self.records if r.group == name]

    def group_totals(self) -> dict[str, dict[str, int]]:
        totals: dict[str, dict[str, int]] = {}
        for record in self.records:
            entry = totals.setdefault(record.group, {"params": 0, "macs": 0, "elementwise": 0})
            entry["params"] += record.params
            entry["macs"] += record.macs
            entry["elementwise"] += record.elementwise
        return totals

    def record(self, name: str) -> BlockCost:
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)


class ComplexityPoint(BaseModel):
    """Grafted vs. plain block cost at one token-grid resolution."""

    resolution: int
    grafted_ops: int
    plain_ops: int

    @property
    def ratio(self) -> float:
        return self.grafted_ops / self.plain_ops


class ComplexityReport(BaseModel):
    """Overhead of grafting across resolutions."""

    points: list[ComplexityPoint] = Field(default_factory=list)
    bound: float = Field(default=2.0, description="Constant the ratio must stay under")

    @property
    def ratios(self) -> list[float]:
        return [p.ratio for p in self.points]

    @property
    def limiting_ratio(self) -> float:
        return self.ratios[-1]

    @property
    def bounded(self) -> bool:
        return all(r <= self.bound for r in self.ratios)

    @property
    def non_increasing(self) -> bool:
        ratios = self.ratios
        return all(later <= earlier for earlier, later in zip(ratios, ratios[1:]))
