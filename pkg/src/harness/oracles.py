"""Naive reference implementations written with explicit loops.

Each oracle works on plain float64 arrays for a single image (H, W, C) and
reads parameters straight out of the parameter dataclasses. They are slow on
purpose: every index is spelled out so that the vectorised kernels can be
compared against them.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.special import erf

from src.nn.graft import GraftParams, UpsampleParams
from src.nn.params import AttentionParams, LinearParams, NormParams
from src.tensor.ops import LAYER_NORM_EPS


def _arr(t) -> np.ndarray:
    return np.asarray(t.data, dtype=np.float64)


def ref_linear(x: np.ndarray, p: LinearParams) -> np.ndarray:
    out = x @ _arr(p.weight)
    return out + _arr(p.bias) if p.bias is not None else out


def ref_layer_norm(x: np.ndarray, p: NormParams) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + LAYER_NORM_EPS) * _arr(p.gamma) + _arr(p.beta)


def ref_gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def ref_attention_tokens(
    queries: np.ndarray,
    keys: np.ndarray,
    p: AttentionParams,
    bias: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Attention of (Tq, C) queries over (Tk, C) keys with per-head loops.

    ``bias`` is an optional (heads, Tq, Tk) logit offset.
    """
    tq, c = queries.shape
    tk = keys.shape[0]
    heads = p.num_heads
    d = c // heads
    q = ref_linear(queries, p.query)
    k = ref_linear(keys, p.key)
    v = ref_linear(keys, p.value)
    merged = np.zeros((tq, c))
    for h in range(heads):
        cols = slice(h * d, (h + 1) * d)
        for i in range(tq):
            logits = np.array([float(q[i, cols] @ k[j, cols]) / math.sqrt(d) for j in range(tk)])
            if bias is not None:
                logits = logits + bias[h, i]
            weights = np.exp(logits - logits.max())
            weights /= weights.sum()
            for j in range(tk):
                merged[i, cols] += weights[j] * v[j, cols]
    return ref_linear(merged, p.out)


def ref_relative_bias(p: AttentionParams, window_h: int, window_w: int) -> np.ndarray:
    """(heads, T, T) bias with offsets computed token by token."""
    table = _arr(p.rel_bias)
    tokens = window_h * window_w
    bias = np.zeros((p.num_heads, tokens, tokens))
    for i in range(tokens):
        for j in range(tokens):
            dy = i // window_w - j // window_w + window_h - 1
            dx = i % window_w - j % window_w + window_w - 1
            bias[:, i, j] = table[dy * (2 * window_w - 1) + dx]
    return bias


def ref_window_attention(x: np.ndarray, p: AttentionParams, window: int) -> np.ndarray:
    """L-MSA of one (H, W, C) map: a window loop around :func:`ref_attention_tokens`."""
    h, w, c = x.shape
    out = np.zeros_like(x, dtype=np.float64)
    bias = ref_relative_bias(p, window, window) if p.rel_bias is not None else None
    for top in range(0, h, window):
        for left in range(0, w, window):
            tokens = x[top : top + window, left : left + window].reshape(-1, c)
            result = ref_attention_tokens(tokens, tokens, p, bias)
            out[top : top + window, left : left + window] = result.reshape(window, window, c)
    return out


def ref_full_attention(x: np.ndarray, p: AttentionParams) -> np.ndarray:
    h, w, c = x.shape
    bias = ref_relative_bias(p, h, w) if p.rel_bias is not None else None
    tokens = x.reshape(-1, c)
    return ref_attention_tokens(tokens, tokens, p, bias).reshape(h, w, c)


def ref_block_mean(x: np.ndarray, ratio_h: int, ratio_w: int) -> np.ndarray:
    h, w, c = x.shape
    out = np.zeros((h // ratio_h, w // ratio_w, c))
    for i in range(h // ratio_h):
        for j in range(w // ratio_w):
            block = x[i * ratio_h : (i + 1) * ratio_h, j * ratio_w : (j + 1) * ratio_w]
            out[i, j] = block.reshape(-1, c).sum(axis=0) / (ratio_h * ratio_w)
    return out


def ref_avgpool_downsample(x: np.ndarray, norm: NormParams, ratio_h: int, ratio_w: int) -> np.ndarray:
    """LN -> GELU -> block mean, composed from the reference ops."""
    return ref_block_mean(ref_gelu(ref_layer_norm(x, norm)), ratio_h, ratio_w)


def ref_bilinear_window(values: np.ndarray, ratio_h: int, ratio_w: int) -> np.ndarray:
    """Half-pixel, edge-clamped bilinear upsampling of one (M_h, M_w) window, scalar loops."""
    mh, mw = values.shape
    th, tw = ratio_h * mh, ratio_w * mw
    out = np.zeros((th, tw))
    for i in range(th):
        y = min(max((i + 0.5) * mh / th - 0.5, 0.0), mh - 1)
        y0 = int(math.floor(y))
        y1 = min(y0 + 1, mh - 1)
        fy = y - y0
        for j in range(tw):
            x = min(max((j + 0.5) * mw / tw - 0.5, 0.0), mw - 1)
            x0 = int(math.floor(x))
            x1 = min(x0 + 1, mw - 1)
            fx = x - x0
            out[i, j] = (
                (1 - fy) * (1 - fx) * values[y0, x0]
                + (1 - fy) * fx * values[y0, x1]
                + fy * (1 - fx) * values[y1, x0]
                + fy * fx * values[y1, x1]
            )
    return out


def ref_window_bilinear(x: np.ndarray, window: int, ratio_h: int, ratio_w: int) -> np.ndarray:
    h, w, c = x.shape
    out = np.zeros((h * ratio_h, w * ratio_w, c))
    th, tw = window * ratio_h, window * ratio_w
    for m in range(h // window):
        for n in range(w // window):
            for ch in range(c):
                source = x[m * window : (m + 1) * window, n * window : (n + 1) * window, ch]
                out[m * th : (m + 1) * th, n * tw : (n + 1) * tw, ch] = ref_bilinear_window(
                    source, ratio_h, ratio_w
                )
    return out


def ref_w_bilinear_upsample(
    z: np.ndarray, p: UpsampleParams, window: int, ratio_h: int, ratio_w: int
) -> np.ndarray:
    mixed = ref_linear(ref_gelu(ref_layer_norm(z, p.norm)), p.mix)
    weight = 1.0 / (1.0 + np.exp(-_arr(p.pos)))
    return ref_window_bilinear(mixed * weight, window, ratio_h, ratio_w)


def ref_nearest_upsample(z: np.ndarray, ratio_h: int, ratio_w: int) -> np.ndarray:
    h, w, c = z.shape
    out = np.zeros((h * ratio_h, w * ratio_w, c))
    for i in range(h * ratio_h):
        for j in range(w * ratio_w):
            out[i, j] = z[i // ratio_h, j // ratio_w]
    return out


def ref_cross_attention(queries: np.ndarray, keys: np.ndarray, p: AttentionParams) -> np.ndarray:
    """(H_q, W_q, C) queries attend over (H_k, W_k, C) keys; output at query resolution."""
    hq, wq, c = queries.shape
    return ref_attention_tokens(queries.reshape(-1, c), keys.reshape(-1, c), p).reshape(hq, wq, c)


def _ref_downsample(x: np.ndarray, step, rh: int, rw: int) -> np.ndarray:
    if step.kind == "avgpool":
        return ref_avgpool_downsample(x, step.norm, rh, rw)
    h, w, c = x.shape
    if step.kind == "linear_proj":
        out = np.zeros((h // rh, w // rw, c))
        for i in range(h // rh):
            for j in range(w // rw):
                block = x[i * rh : (i + 1) * rh, j * rw : (j + 1) * rw].reshape(-1)
                out[i, j] = ref_linear(block, step.proj)
        return out
    return ref_cross_attention(ref_block_mean(x, rh, rw), x, step.attn)


def _ref_upsample(
    z: np.ndarray, fine: np.ndarray, step: UpsampleParams, window: int, rh: int, rw: int
) -> np.ndarray:
    if step.kind == "wbilinear":
        return ref_w_bilinear_upsample(z, step, window, rh, rw)
    if step.kind == "nearest":
        return ref_nearest_upsample(z, rh, rw)
    return ref_cross_attention(fine, z, step.attn)


def ref_graft_forward(x0: np.ndarray, params: GraftParams) -> np.ndarray:
    """Hand-unrolled branch: downsample chain, coarsest attention, then merge upward level by level."""
    cfg = params.config
    rh, rw, window = cfg.ratio_h, cfg.ratio_w, cfg.window
    levels = [x0]
    for step in params.down:
        levels.append(_ref_downsample(levels[-1], step, rh, rw))

    def attend(level: int) -> np.ndarray:
        lp = params.levels[level - 1]
        return ref_window_attention(ref_layer_norm(levels[level], lp.norm), lp.attn, window)

    z = levels[cfg.scales] + attend(cfg.scales)
    for b in range(cfg.scales - 1, 0, -1):
        z_bar = _ref_upsample(z, levels[b], params.up[b], window, rh, rw)
        z = levels[b] + attend(b) + z_bar
    return _ref_upsample(z, levels[0], params.up[0], window, rh, rw)


def ref_patch_embed(image: np.ndarray, proj: LinearParams, patch: int) -> np.ndarray:
    h, w, c = image.shape
    out = np.zeros((h // patch, w // patch, proj.fan_out))
    for i in range(h // patch):
        for j in range(w // patch):
            flat = image[i * patch : (i + 1) * patch, j * patch : (j + 1) * patch].reshape(-1)
            out[i, j] = ref_linear(flat, proj)
    return out


def ref_patch_merging(x: np.ndarray, norm: NormParams, proj: LinearParams) -> np.ndarray:
    h, w, c = x.shape
    out = np.zeros((h // 2, w // 2, proj.fan_out))
    for i in range(h // 2):
        for j in range(w // 2):
            concat = np.concatenate([x[2 * i + di, 2 * j + dj] for di in range(2) for dj in range(2)])
            out[i, j] = ref_linear(ref_layer_norm(concat, norm), proj)
    return out
