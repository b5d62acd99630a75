"""Differentiable primitives.

Every function takes and returns Tensors. Each primitive computes its result
with numpy and registers one tape record whose backward maps the output
gradient to one gradient per input (None where an input needs none).
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import erf, expit

from src.errors import ConfigurationError, ShapeError
from src.tensor.tensor import Tensor, get_tape

Operand = Union[Tensor, float, int, np.ndarray]
Axis = Optional[Union[int, Sequence[int]]]

LAYER_NORM_EPS = 1e-5
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def as_tensor(value: Operand, like: Optional[Tensor] = None) -> Tensor:
    """Wrap a constant as a non-differentiable Tensor (dtype follows ``like``)."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _result(data: np.ndarray, inputs: Sequence[Tensor], backward, op: str) -> Tensor:
    tape = get_tape()
    requires_grad = tape.enabled and any(t.requires_grad for t in inputs)
    out = Tensor._from_array(data, requires_grad)
    if requires_grad:
        out._node = tape.record(op, inputs, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` back down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _pair(a: Operand, b: Operand) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


# Elementwise arithmetic


def add(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.data + b.data, (a, b), backward, "add")


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result(a.data - b.data, (a, b), backward, "sub")


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward, "mul")


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return _result(a.data / b.data, (a, b), backward, "div")


def neg(x: Tensor) -> Tensor:
    return _result(-x.data, (x,), lambda g: (-g,), "neg")


def power(x: Tensor, exponent: float) -> Tensor:
    def backward(g):
        return (g * exponent * np.power(x.data, exponent - 1),)

    return _result(np.power(x.data, exponent), (x,), backward, "power")


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _result(y, (x,), lambda g: (g * y,), "exp")


def log(x: Tensor) -> Tensor:
    return _result(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


def sigmoid(x: Tensor) -> Tensor:
    y = expit(x.data)
    return _result(y, (x,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def gelu(x: Tensor) -> Tensor:
    """Exact GELU, x * Phi(x) with the Gaussian CDF (no tanh approximation)."""
    cdf = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))

    def backward(g):
        pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT_2PI
        return (g * (cdf + x.data * pdf),)

    return _result(x.data * cdf, (x,), backward, "gelu")


# Contractions and reductions


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product ``a[..., i, k] @ b[..., k, j]``.

    Raises:
        ShapeError: If inner extents differ or batch extents do not broadcast
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as exc:
        raise ShapeError(f"matmul batch extents differ: {a.shape} x {b.shape}") from exc

    def backward(g):
        grad_a = g @ np.swapaxes(b.data, -1, -2)
        grad_b = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _result(a.data @ b.data, (a, b), backward, "matmul")


def sum(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    axes = _normalize_axes(axis, x.ndim)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.array(np.broadcast_to(g, x.shape)),)

    return _result(x.data.sum(axis=axes, keepdims=keepdims), (x,), backward, "sum")


def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return div(sum(x, axis=axes, keepdims=keepdims), float(count))


# Shape manipulation


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        data = x.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {x.shape} to {tuple(shape)}") from exc
    return _result(data, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    inverse = np.argsort(axes)
    return _result(
        np.ascontiguousarray(x.data.transpose(axes)),
        (x,),
        lambda g: (g.transpose(inverse),),
        "transpose",
    )


def take(x: Tensor, index: np.ndarray) -> Tensor:
    """Gather rows of ``x`` along axis 0 with an integer index array."""

    def backward(g):
        grad = np.zeros_like(x.data)
        np.add.at(grad, index, g)
        return (grad,)

    return _result(x.data[index], (x,), backward, "take")


def roll(x: Tensor, shifts: Sequence[int], axes: Sequence[int]) -> Tensor:
    shifts, axes = tuple(shifts), tuple(axes)
    back = tuple(-s for s in shifts)
    return _result(
        np.roll(x.data, shifts, axes), (x,), lambda g: (np.roll(g, back, axes),), "roll"
    )


# Normalisation and attention helpers


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Max-subtracted softmax along ``axis``."""
    shifted = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
    y = shifted / shifted.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _result(y, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    y = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g):
        return (g - np.exp(y) * g.sum(axis=axis, keepdims=True),)

    return _result(y, (x,), backward, "log_softmax")


def layer_norm(
    x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS
) -> Tensor:
    """Normalise over the channel (last) axis, then apply the affine (gamma, beta)."""
    channels = x.shape[-1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError(
            f"layer_norm affine shapes {gamma.shape}/{beta.shape} do not match channels {channels}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    rstd = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * rstd

    def backward(g):
        dxhat = g * gamma.data
        dx = rstd * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        flat_g = g.reshape(-1, channels)
        dgamma = (flat_g * xhat.reshape(-1, channels)).sum(axis=0)
        return dx, dgamma, flat_g.sum(axis=0)

    return _result(xhat * gamma.data + beta.data, (x, gamma, beta), backward, "layer_norm")


def adaptive_avg_pool(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Block-mean pooling of an (N, H, W, C) map to (N, out_h, out_w, C).

    Raises:
        ConfigurationError: If H or W is not divisible by the output extent
    """
    if x.ndim != 4:
        raise ShapeError(f"adaptive_avg_pool expects (N, H, W, C), got {x.shape}")
    n, h, w, c = x.shape
    if out_h < 1 or out_w < 1 or h % out_h or w % out_w:
        raise ConfigurationError(
            f"cannot pool {h}x{w} to {out_h}x{out_w}: extents must divide evenly"
        )
    blocks = reshape(x, (n, out_h, h // out_h, out_w, w // out_w, c))
    return mean(blocks, axis=(2, 4))


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean cross-entropy of (N, K) logits against integer class targets."""
    onehot = np.zeros(logits.shape, dtype=logits.dtype)
    onehot[np.arange(logits.shape[0]), targets] = 1.0
    return neg(mean(sum(mul(log_softmax(logits), onehot), axis=-1)))
