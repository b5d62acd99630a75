"""Dense tensors with reverse-mode automatic differentiation."""

from __future__ import annotations

import itertools
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from src.errors import UsageError

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

PRECISIONS: dict[str, type] = {"verify64": np.float64, "train32": np.float32}

_default_dtype: type = np.float64


def get_default_dtype() -> type:
    """Return the dtype used for tensors built from Python data."""
    return _default_dtype


def set_default_dtype(dtype: type) -> None:
    """Set the dtype used for tensors built from Python data."""
    global _default_dtype
    _default_dtype = np.dtype(dtype).type


@contextmanager
def precision(mode: str) -> Iterator[None]:
    """Run a block under a precision build ("verify64" or "train32").

    Args:
        mode: Precision mode name

    Raises:
        UsageError: If the mode is unknown
    """
    if mode not in PRECISIONS:
        raise UsageError(f"unknown precision mode {mode!r}; expected one of {sorted(PRECISIONS)}")
    previous = _default_dtype
    set_default_dtype(PRECISIONS[mode])
    try:
        yield
    finally:
        set_default_dtype(previous)


@dataclass(eq=False)
class Node:
    """One recorded primitive application."""

    seq: int
    op: str
    inputs: tuple["Tensor", ...]
    backward: BackwardFn


class Tape:
    """Ordered record of primitive applications.

    Records are numbered in creation order. Backward replays the records
    reachable from the loss in reverse numbering, so gradient accumulation
    order is fixed by program order alone.
    """

    def __init__(self) -> None:
        self._counter = itertools.count()
        self.enabled = True

    def record(self, op: str, inputs: Sequence["Tensor"], backward: BackwardFn) -> Node:
        return Node(next(self._counter), op, tuple(inputs), backward)

    def reachable(self, root: "Tensor") -> list[Node]:
        """Records reachable from ``root``, newest first."""
        found: dict[int, Node] = {}
        stack = [root]
        while stack:
            node = stack.pop()._node
            if node is None or id(node) in found:
                continue
            found[id(node)] = node
            stack.extend(node.inputs)
        return sorted(found.values(), key=lambda n: n.seq, reverse=True)


_tape = Tape()


def get_tape() -> Tape:
    return _tape


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable recording for the enclosed block."""
    previous = _tape.enabled
    _tape.enabled = False
    try:
        yield
    finally:
        _tape.enabled = previous


class Tensor:
    """N-dimensional real array that can take part in the gradient tape.

    Leaf tensors (parameters, inputs) carry ``requires_grad``; tensors produced
    by primitives carry the tape record that created them.
    """

    __array_priority__ = 1000

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[type] = None,
    ):
        self.data: np.ndarray = np.array(data, dtype=dtype or _default_dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._node: Optional[Node] = None

    @classmethod
    def _from_array(cls, array: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = array
        out.requires_grad = requires_grad
        out.grad = None
        out._node = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor._from_array(self.data, False)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if grad.shape != self.shape:
            raise UsageError(f"gradient shape {grad.shape} does not match tensor {self.shape}")
        self.grad = np.array(grad, dtype=self.dtype) if self.grad is None else self.grad + grad

    def backward(self) -> None:
        backward(self)

    # Arithmetic delegates to src.tensor.ops
    def __add__(self, other) -> "Tensor":
        return ops.add(self, other)

    def __radd__(self, other) -> "Tensor":
        return ops.add(other, self)

    def __sub__(self, other) -> "Tensor":
        return ops.sub(self, other)

    def __rsub__(self, other) -> "Tensor":
        return ops.sub(other, self)

    def __mul__(self, other) -> "Tensor":
        return ops.mul(self, other)

    def __rmul__(self, other) -> "Tensor":
        return ops.mul(other, self)

    def __truediv__(self, other) -> "Tensor":
        return ops.div(self, other)

    def __rtruediv__(self, other) -> "Tensor":
        return ops.div(other, self)

    def __neg__(self) -> "Tensor":
        return ops.neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return ops.power(self, exponent)

    def __matmul__(self, other) -> "Tensor":
        return ops.matmul(self, other)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every requires_grad tensor reachable from ``loss``.

    Leaves and intermediate results alike receive their gradient. An
    intermediate is written once, with its total, when its record is replayed.
    Gradients accumulate additively, both across multiple uses of a tensor in
    one graph and across repeated calls.

    Raises:
        UsageError: If ``loss`` is not a scalar
    """
    if loss.size != 1:
        raise UsageError(f"backward() needs a scalar loss, got shape {loss.shape}")
    seed = np.ones_like(loss.data)
    if loss._node is None:
        if loss.requires_grad:
            loss._accumulate(seed)
        return

    pending: dict[int, np.ndarray] = {id(loss._node): seed}
    owners: dict[int, Tensor] = {id(loss._node): loss}
    for node in _tape.reachable(loss):
        out_grad = pending.pop(id(node), None)
        if out_grad is None:
            continue
        owners.pop(id(node))._accumulate(out_grad)
        for tensor, grad in zip(node.inputs, node.backward(out_grad)):
            if grad is None or not tensor.requires_grad:
                continue
            if tensor._node is None:
                tensor._accumulate(grad)
            else:
                key = id(tensor._node)
                pending[key] = pending[key] + grad if key in pending else grad
                owners[key] = tensor


from src.tensor import ops  # noqa: E402
