"""Small building blocks shared by attention, graft and backbone code."""

from src.nn.params import FFNParams, LinearParams, NormParams
from src.tensor import Tensor
from src.tensor import ops


def linear(x: Tensor, p: LinearParams) -> Tensor:
    out = x @ p.weight
    return out + p.bias if p.bias is not None else out


def norm(x: Tensor, p: NormParams) -> Tensor:
    return ops.layer_norm(x, p.gamma, p.beta)


def feed_forward(x: Tensor, p: FFNParams) -> Tensor:
    """MLP(LN(x)): Linear(C -> rC), exact GELU, Linear(rC -> C)."""
    return linear(ops.gelu(linear(norm(x, p.norm), p.fc1)), p.fc2)
