"""Optimizers over a ParameterStore."""

from __future__ import annotations

from typing import Optional

import numpy as np

from src.models.run import OptimizerConfig
from src.nn.params import ParameterStore

NO_DECAY_SUFFIXES = (".bias", ".gamma", ".beta", ".rel_bias", ".pos")


def decays(name: str) -> bool:
    """Weight decay applies to projection weights only."""
    return not name.endswith(NO_DECAY_SUFFIXES)


class Optimizer:
    def __init__(self, store: ParameterStore, lr: float, weight_decay: float = 0.0):
        self.store = store
        self.lr = lr
        self.weight_decay = weight_decay
        self.steps = 0

    def zero_grad(self) -> None:
        self.store.zero_grad()

    def step(self) -> None:
        self.steps += 1
        for name, param in self.store.named_parameters():
            if param.grad is not None:
                param.data = self._update(name, param.data, param.grad)

    def _update(self, name: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class AdamW(Optimizer):
    """Adam with decoupled weight decay: p -= lr * (wd * p + m_hat / (sqrt(v_hat) + eps))."""

    def __init__(
        self,
        store: ParameterStore,
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.05,
    ):
        super().__init__(store, lr, weight_decay)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def _update(self, name: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if decays(name):
            value = value - self.lr * self.weight_decay * value
        m = self._m.get(name, np.zeros_like(value))
        v = self._v.get(name, np.zeros_like(value))
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
        self._m[name], self._v[name] = m, v
        m_hat = m / (1.0 - self.beta1**self.steps)
        v_hat = v / (1.0 - self.beta2**self.steps)
        return (value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(value.dtype)


class SGD(Optimizer):
    """SGD with optional heavy-ball momentum and L2 weight decay."""

    def __init__(
        self,
        store: ParameterStore,
        lr: float = 1e-2,
        momentum: float = 0.0,
        weight_decay: float = 0.0,
    ):
        super().__init__(store, lr, weight_decay)
        self.momentum = momentum
        self._buffers: dict[str, np.ndarray] = {}

    def _update(self, name: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.weight_decay and decays(name):
            grad = grad + self.weight_decay * value
        if self.momentum:
            buffer = self._buffers.get(name)
            buffer = grad if buffer is None else self.momentum * buffer + grad
            self._buffers[name] = buffer
            grad = buffer
        return (value - self.lr * grad).astype(value.dtype)


def build_optimizer(store: ParameterStore, config: Optional[OptimizerConfig] = None) -> Optimizer:
    config = config or OptimizerConfig()
    if config.kind == "sgd":
        return SGD(store, lr=config.lr, momentum=config.momentum, weight_decay=config.weight_decay)
    return AdamW(
        store,
        lr=config.lr,
        betas=(config.beta1, config.beta2),
        eps=config.eps,
        weight_decay=config.weight_decay,
    )
