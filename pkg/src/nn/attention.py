"""Window partitioning and multi-head attention.

Feature maps are (N, H, W, C) tensors. Windows are (N, nWin, M_h * M_w, C)
with windows ordered row-major over (m, n) and tokens row-major inside each
window. Global attention is the single-window case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from src.errors import ConfigurationError, ShapeError
from src.nn.layers import linear
from src.nn.params import AttentionParams
from src.tensor import Tensor
from src.tensor import ops
from src.tensor.feature_map import require_feature_map

WindowSize = Union[int, tuple[int, int]]

SHIFT_MASK_VALUE = -100.0


def window_pair(window: WindowSize) -> tuple[int, int]:
    if isinstance(window, int):
        return window, window
    return int(window[0]), int(window[1])


@dataclass(frozen=True)
class WindowGrid:
    """Tiling of a ``height`` x ``width`` map into ``window_h`` x ``window_w`` windows."""

    height: int
    width: int
    window_h: int
    window_w: int

    @classmethod
    def for_map(cls, height: int, width: int, window: WindowSize) -> "WindowGrid":
        """Build the grid, checking that the window tiles the map.

        Raises:
            ConfigurationError: Naming H, W and M when they do not divide
        """
        window_h, window_w = window_pair(window)
        if window_h < 1 or window_w < 1 or height % window_h or width % window_w:
            raise ConfigurationError(
                f"window {window_h}x{window_w} does not tile feature map "
                f"H={height} W={width}"
            )
        return cls(height, width, window_h, window_w)

    @property
    def rows(self) -> int:
        return self.height // self.window_h

    @property
    def cols(self) -> int:
        return self.width // self.window_w

    @property
    def num_windows(self) -> int:
        return self.rows * self.cols

    @property
    def tokens(self) -> int:
        return self.window_h * self.window_w


def window_partition(x: Tensor, window: WindowSize) -> Tensor:
    """Split (N, H, W, C) into (N, nWin, M_h * M_w, C) non-overlapping tiles."""
    n, h, w, c = require_feature_map(x)
    grid = WindowGrid.for_map(h, w, window)
    tiles = x.reshape(n, grid.rows, grid.window_h, grid.cols, grid.window_w, c)
    tiles = tiles.transpose(0, 1, 3, 2, 4, 5)
    return tiles.reshape(n, grid.num_windows, grid.tokens, c)


def window_reverse(windows: Tensor, grid: WindowGrid) -> Tensor:
    """Inverse of :func:`window_partition`.

    Raises:
        ShapeError: If ``windows`` does not hold ``grid``'s windows
    """
    if windows.ndim != 4 or windows.shape[1:3] != (grid.num_windows, grid.tokens):
        raise ShapeError(
            f"windows of shape {windows.shape} do not match a {grid.height}x{grid.width} "
            f"map in {grid.window_h}x{grid.window_w} windows"
        )
    n, c = windows.shape[0], windows.shape[3]
    tiles = windows.reshape(n, grid.rows, grid.cols, grid.window_h, grid.window_w, c)
    tiles = tiles.transpose(0, 1, 3, 2, 4, 5)
    return tiles.reshape(n, grid.height, grid.width, c)


@lru_cache(maxsize=None)
def relative_position_index(window_h: int, window_w: int) -> np.ndarray:
    """(T, T) index into a ((2 M_h - 1)(2 M_w - 1), heads) bias table.

    Entry (i, j) encodes the offset of token i relative to token j, so every
    offset pair within a window maps to exactly one table row.
    """
    rows, cols = np.meshgrid(np.arange(window_h), np.arange(window_w), indexing="ij")
    coords = np.stack([rows.reshape(-1), cols.reshape(-1)])
    delta = coords[:, :, None] - coords[:, None, :]
    index = (delta[0] + window_h - 1) * (2 * window_w - 1) + (delta[1] + window_w - 1)
    index.setflags(write=False)
    return index


def relative_bias(table: Tensor, window: WindowSize) -> Tensor:
    """Gather the (heads, T, T) logit bias for one window from its table."""
    window_h, window_w = window_pair(window)
    expected = (2 * window_h - 1) * (2 * window_w - 1)
    if table.ndim != 2 or table.shape[0] != expected:
        raise ShapeError(
            f"relative bias table {table.shape} does not fit a {window_h}x{window_w} window"
        )
    index = relative_position_index(window_h, window_w)
    tokens = window_h * window_w
    gathered = ops.take(table, index.reshape(-1))
    return gathered.reshape(tokens, tokens, table.shape[1]).transpose(2, 0, 1)


def shifted_window_mask(height: int, width: int, window: WindowSize, shift: int) -> np.ndarray:
    """Additive (nWin, T, T) mask for cyclically shifted windows.

    Token pairs that came from different regions before the roll get
    ``SHIFT_MASK_VALUE``; all other pairs get 0.
    """
    grid = WindowGrid.for_map(height, width, window)
    labels = np.zeros((height, width))
    region = 0
    for rows in (slice(0, -grid.window_h), slice(-grid.window_h, -shift), slice(-shift, None)):
        for cols in (slice(0, -grid.window_w), slice(-grid.window_w, -shift), slice(-shift, None)):
            labels[rows, cols] = region
            region += 1
    tiles = labels.reshape(grid.rows, grid.window_h, grid.cols, grid.window_w)
    tiles = tiles.transpose(0, 2, 1, 3).reshape(grid.num_windows, grid.tokens)
    differs = tiles[:, :, None] != tiles[:, None, :]
    return np.where(differs, SHIFT_MASK_VALUE, 0.0)


def _split_heads(tokens: Tensor, num_heads: int) -> Tensor:
    """(..., T, C) -> (..., heads, T, C / heads)."""
    *lead, length, channels = tokens.shape
    split = tokens.reshape(*lead, length, num_heads, channels // num_heads)
    k = len(lead)
    return split.transpose(*range(k), k + 1, k, k + 2)


def _merge_heads(heads: Tensor) -> Tensor:
    """(..., heads, T, d) -> (..., T, heads * d)."""
    *lead, num_heads, length, dim = heads.shape
    k = len(lead)
    merged = heads.transpose(*range(k), k + 1, k, k + 2)
    return merged.reshape(*lead, length, num_heads * dim)


def attend(
    query_tokens: Tensor,
    kv_tokens: Tensor,
    p: AttentionParams,
    bias: Optional[Tensor] = None,
    mask: Optional[np.ndarray] = None,
) -> Tensor:
    """Multi-head scaled dot-product attention over the last two axes.

    ``query_tokens`` is (..., T_q, C) and ``kv_tokens`` is (..., T_k, C) with
    matching leading axes. ``bias`` broadcasts against (heads, T_q, T_k) logits,
    ``mask`` against (..., heads, T_q, T_k).
    """
    channels = query_tokens.shape[-1]
    if channels % p.num_heads:
        raise ConfigurationError(f"channels {channels} not divisible by heads {p.num_heads}")
    if kv_tokens.shape[-1] != channels:
        raise ShapeError(f"query tokens {query_tokens.shape} vs key tokens {kv_tokens.shape}")

    scale = 1.0 / math.sqrt(channels // p.num_heads)
    q = _split_heads(linear(query_tokens, p.query), p.num_heads)
    k = _split_heads(linear(kv_tokens, p.key), p.num_heads)
    v = _split_heads(linear(kv_tokens, p.value), p.num_heads)

    nd = k.ndim
    logits = (q @ k.transpose(*range(nd - 2), nd - 1, nd - 2)) * scale
    if bias is not None:
        logits = logits + bias
    if mask is not None:
        logits = logits + ops.as_tensor(mask, like=logits)
    weights = ops.softmax(logits, axis=-1)
    return linear(_merge_heads(weights @ v), p.out)


def l_msa(x: Tensor, p: AttentionParams, window: WindowSize, shift: int = 0) -> Tensor:
    """Local multi-head self-attention inside non-overlapping windows.

    No residual and no normalisation; callers compose those around it. A
    non-zero ``shift`` cyclically rolls the map by (-shift, -shift) first and
    masks token pairs that were not adjacent before the roll.

    Raises:
        ConfigurationError: If the window does not tile the map, or the
            relative bias table was built for another window
    """
    _, h, w, _ = require_feature_map(x)
    grid = WindowGrid.for_map(h, w, window)
    bias = None
    if p.rel_bias is not None:
        if p.window != (grid.window_h, grid.window_w):
            raise ConfigurationError(
                f"relative bias built for window {p.window}, "
                f"used with {grid.window_h}x{grid.window_w}"
            )
        bias = relative_bias(p.rel_bias, p.window)

    mask = None
    if shift:
        x = ops.roll(x, (-shift, -shift), (1, 2))
        mask = shifted_window_mask(h, w, (grid.window_h, grid.window_w), shift)[:, None]

    windows = window_partition(x, (grid.window_h, grid.window_w))
    out = window_reverse(attend(windows, windows, p, bias=bias, mask=mask), grid)
    if shift:
        out = ops.roll(out, (shift, shift), (1, 2))
    return out


def global_msa(x: Tensor, p: AttentionParams) -> Tensor:
    """Full self-attention: :func:`l_msa` with one window covering the map."""
    _, h, w, _ = require_feature_map(x)
    return l_msa(x, p, (h, w))


def cross_attention(query_tokens: Tensor, kv_tokens: Tensor, p: AttentionParams) -> Tensor:
    """Multi-head cross-attention from (N, T_q, C) queries to (N, T_k, C) keys/values."""
    if query_tokens.ndim != 3 or kv_tokens.ndim != 3:
        raise ShapeError(
            f"cross attention expects (N, T, C) tokens, got {query_tokens.shape} "
            f"and {kv_tokens.shape}"
        )
    if query_tokens.shape[0] != kv_tokens.shape[0]:
        raise ShapeError(f"batch sizes differ: {query_tokens.shape} vs {kv_tokens.shape}")
    return attend(query_tokens, kv_tokens, p)
