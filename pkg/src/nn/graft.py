"""Multi-scale graft branch.

A graft taps a backbone block input X^0, builds coarser levels X^1..X^B by
repeated downsampling, runs windowed attention bottom-up from the coarsest
level and upsamples each result into the next finer level, ending with a
feature of the input's shape that the block adds to its attention output.

Indexing: ``down[b]`` maps level b to b+1, ``levels[b - 1]`` holds the
attention for level b (1..B) and ``up[b]`` maps level b+1 back to level b.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from src.errors import ConfigurationError, ShapeError
from src.models.spec import GraftConfig
from src.nn.attention import WindowGrid, cross_attention, l_msa, window_pair
from src.nn.layers import feed_forward, linear, norm
from src.nn.params import (
    AttentionParams,
    FFNParams,
    LinearParams,
    NormParams,
    ParameterStore,
)
from src.tensor import FeatureMap, Tensor
from src.tensor import ops
from src.tensor.feature_map import require_feature_map
from src.utils.logger import get_logger

logger = get_logger("graft")


@dataclass
class DownsampleParams:
    """One left-right step; which fields are set depends on the variant."""

    kind: str
    norm: Optional[NormParams] = None
    proj: Optional[LinearParams] = None
    attn: Optional[AttentionParams] = None


@dataclass
class LevelParams:
    norm: NormParams
    attn: AttentionParams


@dataclass
class UpsampleParams:
    """One right-left step.

    ``pos`` is the anti-aliasing embedding with the coarse level's extents;
    the effective weight is sigmoid(pos).
    """

    kind: str
    norm: Optional[NormParams] = None
    mix: Optional[LinearParams] = None
    pos: Optional[Tensor] = None
    attn: Optional[AttentionParams] = None


@dataclass
class GraftParams:
    config: GraftConfig
    down: list[DownsampleParams] = field(default_factory=list)
    levels: list[LevelParams] = field(default_factory=list)
    up: list[UpsampleParams] = field(default_factory=list)
    ffn: Optional[FFNParams] = None

    @property
    def scales(self) -> int:
        return self.config.scales


def max_scales(extent: int, window: int, ratio: int = 2, limit: Optional[int] = None) -> int:
    """Largest B whose levels 1..B all have integer extents tiled by ``window``."""
    scales, current = 0, extent
    while current % ratio == 0:
        current //= ratio
        if current < window or current % window:
            break
        scales += 1
        if limit is not None and scales >= limit:
            break
    return scales


def build_graft_params(
    store: ParameterStore,
    prefix: str,
    config: GraftConfig,
    channels: int,
    num_heads: int,
    height: int,
    width: int,
    ffn_ratio: Optional[int] = None,
) -> GraftParams:
    """Register every tensor of one graft branch under ``prefix``.

    ``ffn_ratio`` adds a branch-owned FFN (separate fusion mode).
    """
    extents = config.validate_for(height, width)
    rh, rw = config.ratio_h, config.ratio_w
    graft = GraftParams(config=config)

    for b in range(config.scales):
        name = f"{prefix}.down.{b}"
        if config.down == "avgpool":
            graft.down.append(DownsampleParams("avgpool", norm=store.norm(f"{name}.norm", channels)))
        elif config.down == "linear_proj":
            proj = store.linear(f"{name}.proj", rh * rw * channels, channels)
            graft.down.append(DownsampleParams("linear_proj", proj=proj))
        else:
            graft.down.append(
                DownsampleParams("cross_attn", attn=store.attention(f"{name}.attn", channels, num_heads))
            )

    window = (config.window, config.window)
    for b in range(1, config.scales + 1):
        name = f"{prefix}.level.{b}"
        graft.levels.append(
            LevelParams(
                norm=store.norm(f"{name}.norm", channels),
                attn=store.attention(f"{name}.attn", channels, num_heads, window=window),
            )
        )

    for b in range(config.scales):
        name = f"{prefix}.up.{b}"
        coarse_h, coarse_w = extents[b + 1]
        if config.up == "wbilinear":
            graft.up.append(
                UpsampleParams(
                    "wbilinear",
                    norm=store.norm(f"{name}.norm", channels),
                    mix=store.linear(f"{name}.mix", channels, channels),
                    pos=store.zeros(f"{name}.pos", (coarse_h, coarse_w, channels)),
                )
            )
        elif config.up == "nearest":
            graft.up.append(UpsampleParams("nearest"))
        else:
            graft.up.append(
                UpsampleParams("cross_attn", attn=store.attention(f"{name}.attn", channels, num_heads))
            )

    if ffn_ratio is not None:
        graft.ffn = store.ffn(f"{prefix}.ffn", channels, ffn_ratio)
    logger.debug(
        "graft_built",
        prefix=prefix,
        levels=[f"{h}x{w}" for h, w in extents],
        window=config.window,
        down=config.down,
        up=config.up,
    )
    return graft


# Left-right pathway


def _tokens(x: Tensor) -> Tensor:
    n, h, w, c = require_feature_map(x)
    return x.reshape(n, h * w, c)


def downsample(x: Tensor, p: DownsampleParams, config: GraftConfig) -> Tensor:
    """One step from level b to level b+1.

    avgpool: block-mean of GELU(LN(x)). linear_proj: concatenate each
    r_h x r_w block (row-major) and project r_h r_w C -> C. cross_attn:
    block-mean of x queries the full-resolution tokens.

    Raises:
        ConfigurationError: If the ratios do not divide the extents
    """
    n, h, w, c = require_feature_map(x)
    rh, rw = config.ratio_h, config.ratio_w
    if h % rh or w % rw:
        raise ConfigurationError(f"cannot downsample {h}x{w} by {rh}x{rw}")
    oh, ow = h // rh, w // rw

    if p.kind == "avgpool":
        return ops.adaptive_avg_pool(ops.gelu(norm(x, p.norm)), oh, ow)
    if p.kind == "linear_proj":
        blocks = x.reshape(n, oh, rh, ow, rw, c).transpose(0, 1, 3, 2, 4, 5)
        return linear(blocks.reshape(n, oh, ow, rh * rw * c), p.proj)
    pooled = ops.adaptive_avg_pool(x, oh, ow)
    out = cross_attention(_tokens(pooled), _tokens(x), p.attn)
    return out.reshape(n, oh, ow, c)


# Right-left pathway


@lru_cache(maxsize=None)
def bilinear_matrix(source: int, target: int) -> np.ndarray:
    """(target, source) 1-D interpolation weights, half-pixel and edge-clamped.

    Output sample i sits at source coordinate (i + 0.5) * source / target - 0.5,
    clamped to [0, source - 1]. Rows sum to one.
    """
    weights = np.zeros((target, source))
    coords = (np.arange(target) + 0.5) * (source / target) - 0.5
    coords = np.clip(coords, 0.0, source - 1)
    lower = np.floor(coords).astype(int)
    upper = np.minimum(lower + 1, source - 1)
    frac = coords - lower
    rows = np.arange(target)
    np.add.at(weights, (rows, lower), 1.0 - frac)
    np.add.at(weights, (rows, upper), frac)
    weights.setflags(write=False)
    return weights


def window_bilinear(x: Tensor, window, ratio_h: int, ratio_w: int) -> Tensor:
    """Bilinear upsampling applied independently inside each source window.

    Source window (m, n) of side M maps to target window (m, n) of side r M;
    samples never read across a window boundary.
    """
    n, h, w, c = require_feature_map(x)
    grid = WindowGrid.for_map(h, w, window)
    mh, mw = grid.window_h, grid.window_w
    th, tw = ratio_h * mh, ratio_w * mw
    rows = ops.as_tensor(bilinear_matrix(mh, th), like=x)
    cols_t = ops.as_tensor(np.ascontiguousarray(bilinear_matrix(mw, tw).T), like=x)

    tiles = x.reshape(n, grid.rows, mh, grid.cols, mw, c).transpose(0, 1, 3, 5, 2, 4)
    tiles = (rows @ tiles) @ cols_t
    tiles = tiles.transpose(0, 1, 4, 2, 5, 3)
    return tiles.reshape(n, grid.rows * th, grid.cols * tw, c)


def w_bilinear_upsample(z: Tensor, p: UpsampleParams, config: GraftConfig) -> Tensor:
    """Channel mixing, anti-aliasing weight, then per-window bilinear interpolation.

    Raises:
        ConfigurationError: If ``z`` does not have the extents the anti-aliasing
            embedding was built for, or the window does not tile ``z``
    """
    _, h, w, c = require_feature_map(z)
    if p.pos.shape != (h, w, c):
        raise ConfigurationError(
            f"anti-aliasing embedding {p.pos.shape} does not match coarse map {(h, w, c)}"
        )
    mixed = linear(ops.gelu(norm(z, p.norm)), p.mix)
    weighted = mixed * ops.sigmoid(p.pos)
    return window_bilinear(weighted, config.window, config.ratio_h, config.ratio_w)


def nearest_upsample(z: Tensor, config: GraftConfig) -> Tensor:
    """Replicate each cell into an r_h x r_w block."""
    n, h, w, c = require_feature_map(z)
    rh, rw = config.ratio_h, config.ratio_w
    ones = ops.as_tensor(np.ones((1, 1, rh, 1, rw, 1)), like=z)
    return (z.reshape(n, h, 1, w, 1, c) * ones).reshape(n, h * rh, w * rw, c)


def crossattn_upsample(z_coarse: Tensor, x_fine: Tensor, p: AttentionParams) -> Tensor:
    """Fine-level tokens query the coarse tokens; output at fine resolution."""
    n, h, w, c = require_feature_map(x_fine, "fine reference")
    out = cross_attention(_tokens(x_fine), _tokens(z_coarse), p)
    return out.reshape(n, h, w, c)


def upsample(z: Tensor, fine: Tensor, p: UpsampleParams, config: GraftConfig) -> Tensor:
    """Dispatch one right-left step to ``fine``'s resolution."""
    if p.kind == "wbilinear":
        out = w_bilinear_upsample(z, p, config)
    elif p.kind == "nearest":
        out = nearest_upsample(z, config)
    else:
        out = crossattn_upsample(z, fine, p.attn)
    if out.shape != fine.shape:
        raise ShapeError(f"upsampled {out.shape} does not match level {fine.shape}")
    return out


# Bottom-up connection


def graft_block(
    x: Tensor,
    z_bar: Optional[Tensor],
    p: LevelParams,
    window: int,
) -> Tensor:
    """x + L-MSA(LN(x)) + z_bar, with z_bar omitted at the coarsest level.

    Raises:
        ShapeError: If ``z_bar`` and ``x`` differ in shape
    """
    if z_bar is not None and z_bar.shape != x.shape:
        raise ShapeError(f"coarse feature {z_bar.shape} does not match level {x.shape}")
    out = x + l_msa(norm(x, p.norm), p.attn, window_pair(window))
    return out if z_bar is None else out + z_bar


def graft_pyramid(x0: Tensor, params: GraftParams) -> list[FeatureMap]:
    """Levels 0..B of the left-right pathway."""
    levels = [FeatureMap(x0, level=0)]
    for b, step in enumerate(params.down):
        levels.append(FeatureMap(downsample(levels[-1].tensor, step, params.config), level=b + 1))
    return levels


def graft_forward(x0: Tensor, params: GraftParams) -> Tensor:
    """Full branch; the output has ``x0``'s shape.

    Raises:
        ConfigurationError: If the graft configuration does not fit ``x0``
    """
    _, h, w, _ = require_feature_map(x0)
    config = params.config
    config.validate_for(h, w)
    levels = [fm.tensor for fm in graft_pyramid(x0, params)]

    z = graft_block(levels[config.scales], None, params.levels[-1], config.window)
    for b in range(config.scales - 1, 0, -1):
        z_bar = upsample(z, levels[b], params.up[b], config)
        z = graft_block(levels[b], z_bar, params.levels[b - 1], config.window)
    return upsample(z, levels[0], params.up[0], config)


def graft_ffn(z: Tensor, params: GraftParams) -> Tensor:
    """Branch-owned FFN residual used by the separate fusion mode."""
    if params.ffn is None:
        raise ConfigurationError("graft has no FFN of its own; build it with ffn_ratio")
    return z + feed_forward(z, params.ffn)

