"""Parameter bundles and the deterministic parameter store."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

import numpy as np
from scipy.stats import truncnorm

from src.errors import CheckpointCompatibilityError, UsageError
from src.tensor import Tensor, get_default_dtype

INIT_STD = 0.02


@dataclass
class LinearParams:
    """Affine map ``x @ weight + bias`` with weight of shape (fan_in, fan_out)."""

    weight: Tensor
    bias: Optional[Tensor]

    @property
    def fan_in(self) -> int:
        return self.weight.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[1]


@dataclass
class NormParams:
    gamma: Tensor
    beta: Tensor


@dataclass
class AttentionParams:
    """Multi-head attention projections plus an optional relative position bias.

    ``rel_bias`` has shape ((2 Mh - 1)(2 Mw - 1), heads) and is only valid for
    windows of side ``window``.
    """

    query: LinearParams
    key: LinearParams
    value: LinearParams
    out: LinearParams
    num_heads: int
    rel_bias: Optional[Tensor] = None
    window: Optional[tuple[int, int]] = None

    @property
    def channels(self) -> int:
        return self.query.fan_in


@dataclass
class FFNParams:
    norm: NormParams
    fc1: LinearParams
    fc2: LinearParams


class ParameterStore:
    """Ordered registry of named, learnable tensors.

    Every tensor draws from its own generator seeded by (seed, crc32(name)), so
    a parameter's initial value depends only on the seed and its name, never on
    which other parameters exist.
    """

    def __init__(self, seed: int, dtype: Optional[type] = None):
        self.seed = seed
        self.dtype = dtype or get_default_dtype()
        self._params: dict[str, Tensor] = {}

    def _rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(name.encode("utf-8"))])

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise UsageError(f"parameter {name!r} registered twice")
        tensor = Tensor(data, requires_grad=True, dtype=self.dtype)
        self._params[name] = tensor
        return tensor

    def trunc_normal(self, name: str, shape: tuple[int, ...], std: float = INIT_STD) -> Tensor:
        rng = self._rng(name)
        values = truncnorm.rvs(-2.0, 2.0, loc=0.0, scale=std, size=shape, random_state=rng)
        return self.add(name, values)

    def zeros(self, name: str, shape: tuple[int, ...]) -> Tensor:
        return self.add(name, np.zeros(shape))

    def ones(self, name: str, shape: tuple[int, ...]) -> Tensor:
        return self.add(name, np.ones(shape))

    def linear(self, prefix: str, fan_in: int, fan_out: int, bias: bool = True) -> LinearParams:
        weight = self.trunc_normal(f"{prefix}.weight", (fan_in, fan_out))
        return LinearParams(weight, self.zeros(f"{prefix}.bias", (fan_out,)) if bias else None)

    def norm(self, prefix: str, channels: int) -> NormParams:
        gamma = self.ones(f"{prefix}.gamma", (channels,))
        return NormParams(gamma, self.zeros(f"{prefix}.beta", (channels,)))

    def attention(
        self,
        prefix: str,
        channels: int,
        num_heads: int,
        window: Optional[tuple[int, int]] = None,
    ) -> AttentionParams:
        """Attention projections; a relative-bias table is created iff ``window`` is given."""
        rel_bias = None
        if window is not None:
            entries = (2 * window[0] - 1) * (2 * window[1] - 1)
            rel_bias = self.trunc_normal(f"{prefix}.rel_bias", (entries, num_heads))
        return AttentionParams(
            query=self.linear(f"{prefix}.query", channels, channels),
            key=self.linear(f"{prefix}.key", channels, channels),
            value=self.linear(f"{prefix}.value", channels, channels),
            out=self.linear(f"{prefix}.out", channels, channels),
            num_heads=num_heads,
            rel_bias=rel_bias,
            window=window,
        )

    def ffn(self, prefix: str, channels: int, ratio: int) -> FFNParams:
        return FFNParams(
            norm=self.norm(f"{prefix}.norm", channels),
            fc1=self.linear(f"{prefix}.fc1", channels, ratio * channels),
            fc2=self.linear(f"{prefix}.fc2", ratio * channels, channels),
        )

    # Enumeration

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        yield from self._params.items()

    def names(self) -> list[str]:
        return list(self._params)

    def num_elements(self, prefix: str = "") -> int:
        """Scalar count of every parameter whose name is ``prefix`` or starts with ``prefix.``."""
        if not prefix:
            return sum(t.size for t in self._params.values())
        return sum(
            t.size
            for name, t in self._params.items()
            if name == prefix or name.startswith(prefix + ".")
        )

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.zero_grad()

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    # Serialisation support

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self._params.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Copy ``state`` into the store after checking names and shapes line up.

        Raises:
            CheckpointCompatibilityError: Naming the first mismatched tensor
        """
        check_compatible(state, self)
        for name, tensor in self._params.items():
            tensor.data = np.array(state[name], dtype=tensor.dtype)


def check_compatible(state: Mapping[str, np.ndarray], store: ParameterStore) -> None:
    """Raise if ``state`` and ``store`` disagree on names, order or shapes."""
    expected = store.names()
    found = list(state)
    missing = [n for n in expected if n not in state]
    extra = [n for n in found if n not in store]
    if missing or extra:
        first = missing[0] if missing else extra[0]
        raise CheckpointCompatibilityError(
            f"parameter names differ, first mismatch {first!r}; "
            f"missing={missing[:5]} extra={extra[:5]}"
        )
    for name in expected:
        if tuple(state[name].shape) != store[name].shape:
            raise CheckpointCompatibilityError(
                f"tensor {name!r} has shape {tuple(state[name].shape)}, "
                f"model expects {store[name].shape}"
            )
