"""Finite-difference gradient oracle."""

from __future__ import annotations

from typing import Callable, Iterable, Optional

import numpy as np

from src.tensor.tensor import Tensor, no_grad

DEFAULT_STEP = 1e-5


def finite_diff_grad(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    step: float = DEFAULT_STEP,
    coords: Optional[Iterable[int]] = None,
) -> Tensor:
    """Central-difference gradient of a scalar function at ``x``.

    Each coordinate is estimated as (f(x + h e) - f(x - h e)) / 2h. ``f`` is
    called on fresh tensors, ``x`` itself is never modified.

    Args:
        f: Deterministic scalar-valued function of one tensor
        x: Evaluation point
        step: Step size h (> 0)
        coords: Flat indices to estimate; all coordinates when omitted.
            Coordinates not listed are left at zero.

    Returns:
        Tensor of x's shape holding the estimates
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    base = np.array(x.data)
    grad = np.zeros_like(base)
    indices = range(base.size) if coords is None else coords
    with no_grad():
        for index in indices:
            plus = base.copy()
            plus.flat[index] += step
            minus = base.copy()
            minus.flat[index] -= step
            delta = f(Tensor(plus, dtype=base.dtype)).item() - f(
                Tensor(minus, dtype=base.dtype)
            ).item()
            grad.flat[index] = delta / (2.0 * step)
    return Tensor(grad, dtype=base.dtype)


def parameter_fd_grad(
    loss_fn: Callable[[], Tensor],
    param: Tensor,
    step: float = DEFAULT_STEP,
    coords: Optional[Iterable[int]] = None,
) -> Tensor:
    """Finite-difference gradient of ``loss_fn()`` with respect to a parameter.

    The parameter's data is swapped for each evaluation and restored afterwards.
    """
    original = param.data

    def evaluate(candidate: Tensor) -> Tensor:
        param.data = candidate.data
        try:
            return loss_fn()
        finally:
            param.data = original

    return finite_diff_grad(evaluate, param, step=step, coords=coords)


def sample_coords(size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Pick up to ``count`` distinct flat indices, sorted."""
    if count >= size:
        return np.arange(size)
    return np.sort(rng.choice(size, size=count, replace=False))


def max_relative_error(
    analytic: np.ndarray,
    numeric: np.ndarray,
    coords: Optional[np.ndarray] = None,
    floor: float = 1e-8,
) -> float:
    """max|a - n| / max(max|a|, max|n|, floor) over the selected coordinates.

    The floor keeps groups whose true gradient is zero (e.g. key biases under
    softmax shift invariance) from reporting roundoff as a relative error.
    """
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if coords is not None:
        a, n = a[coords], n[coords]
    if a.size == 0:
        return 0.0
    scale = max(float(np.abs(a).max()), float(np.abs(n).max()), floor)
    return float(np.abs(a - n).max() / scale)
