"""Training metric rows."""

from pydantic import BaseModel, Field


class MetricRow(BaseModel):
    """One evaluation point of a training run."""

    step: int = Field(..., ge=0)
    loss: float = Field(..., description="Mean cross-entropy over the training set")
    train_acc: float = Field(..., ge=0.0, le=1.0)
    test_acc: float = Field(..., ge=0.0, le=1.0)

    def csv_fields(self) -> list[str]:
        return [str(self.step), repr(self.loss), repr(self.train_acc), repr(self.test_acc)]


class PairedRow(BaseModel):
    """Grafted and ungrafted runs of the same seed at the same step."""

    seed: int
    step: int
    grafted_loss: float
    plain_loss: float
    grafted_test_acc: float
    plain_test_acc: float

    @property
    def test_acc_gap(self) -> float:
        return self.grafted_test_acc - self.plain_test_acc
