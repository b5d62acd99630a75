"""Semantic view of a tensor as a (batch, height, width, channels) feature map."""

from dataclasses import dataclass

from src.errors import ShapeError
from src.tensor.tensor import Tensor


def require_feature_map(x: Tensor, what: str = "feature map") -> tuple[int, int, int, int]:
    """Return (N, H, W, C) of ``x`` or raise ShapeError."""
    if x.ndim != 4:
        raise ShapeError(f"{what} must be (N, H, W, C), got shape {x.shape}")
    n, h, w, c = x.shape
    return n, h, w, c


@dataclass(frozen=True)
class FeatureMap:
    """A feature tensor tagged with where it lives in the network.

    ``stage`` and ``depth`` locate the backbone block, ``level`` the horizontal
    scale inside a graft branch (0 is the backbone resolution).
    """

    tensor: Tensor
    stage: int = 0
    depth: int = 0
    level: int = 0

    def __post_init__(self) -> None:
        require_feature_map(self.tensor)

    @property
    def batch(self) -> int:
        return self.tensor.shape[0]

    @property
    def height(self) -> int:
        return self.tensor.shape[1]

    @property
    def width(self) -> int:
        return self.tensor.shape[2]

    @property
    def channels(self) -> int:
        return self.tensor.shape[3]

    @property
    def extents(self) -> tuple[int, int]:
        return self.height, self.width
