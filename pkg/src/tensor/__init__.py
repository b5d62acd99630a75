"""Tensor core: dense arrays, the gradient tape and the finite-difference oracle."""

from src.tensor.tensor import (
    Tensor,
    backward,
    get_default_dtype,
    no_grad,
    precision,
    set_default_dtype,
)
from src.tensor.feature_map import FeatureMap
from src.tensor.gradcheck import finite_diff_grad

__all__ = [
    "Tensor",
    "FeatureMap",
    "backward",
    "finite_diff_grad",
    "get_default_dtype",
    "no_grad",
    "precision",
    "set_default_dtype",
]
