"""Toy backbones with graft attachment points.

Two structures are supported: ``homogeneous`` (one stage, constant token
resolution, absolute position embeddings, unshifted windows) and
``pyramid`` (patch merging between stages, relative position bias,
alternating shifted windows).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from src.errors import ConfigurationError, ShapeError
from src.models.spec import BackboneSpec, DownKind, GraftConfig, GraftSite, UpKind
from src.nn.attention import l_msa
from src.nn.graft import GraftParams, build_graft_params, graft_ffn, graft_forward, max_scales
from src.nn.layers import feed_forward, linear, norm
from src.nn.params import (
    AttentionParams,
    FFNParams,
    LinearParams,
    NormParams,
    ParameterStore,
)
from src.tensor import Tensor, get_default_dtype
from src.tensor.feature_map import require_feature_map
from src.utils.logger import get_logger

logger = get_logger("backbone")

DEFAULT_MAX_SCALES = 3
WINDOW_CANDIDATES = (7, 4, 2, 1)


@dataclass
class BlockParams:
    """One transformer block; exactly one backbone FFN whether grafted or not."""

    norm1: NormParams
    attn: AttentionParams
    ffn: FFNParams
    window: int
    shift: int = 0
    graft: Optional[GraftParams] = None


@dataclass
class MergeParams:
    norm: NormParams
    proj: LinearParams


@dataclass
class StageParams:
    blocks: list[BlockParams]
    merge: Optional[MergeParams] = None


@dataclass
class ModelParams:
    spec: BackboneSpec
    store: ParameterStore
    patch_proj: LinearParams
    pos: Optional[Tensor]
    stages: list[StageParams] = field(default_factory=list)
    head_norm: Optional[NormParams] = None
    head: Optional[LinearParams] = None

    @property
    def num_grafts(self) -> int:
        return sum(1 for stage in self.stages for block in stage.blocks if block.graft is not None)


def stage_resolutions(spec: BackboneSpec) -> list[int]:
    """Token-grid side entering each stage."""
    return [spec.stage_resolution(s) for s in range(spec.num_stages)]


def default_window(grid: int) -> int:
    """Largest of 7, 4, 2, 1 that divides ``grid`` and is smaller than it."""
    for window in WINDOW_CANDIDATES:
        if window < grid and grid % window == 0:
            return window
    return grid


def default_graft_policy(
    spec: BackboneSpec,
    scales: Optional[int] = None,
    down: DownKind = "avgpool",
    up: UpKind = "wbilinear",
    limit: Optional[int] = None,
) -> tuple[GraftSite, ...]:
    """Graft every eligible block.

    Eligible: every block except the very first, and for pyramids no block of
    the last stage. The graft window is min(M, resolution / 2); B is
    ``scales`` capped at the largest value the window admits (3 by default).
    Blocks admitting no level are skipped. ``limit`` keeps only the first
    ``limit`` sites in depth order.
    """
    last_stage = spec.num_stages if spec.kind == "homogeneous" else spec.num_stages - 1
    sites: list[GraftSite] = []
    for stage in range(last_stage):
        res = spec.stage_resolution(stage)
        window = max(1, min(spec.stage_window(stage), res // 2))
        allowed = max_scales(res, window, 2, limit=DEFAULT_MAX_SCALES if scales is None else None)
        chosen = allowed if scales is None else min(scales, allowed)
        if chosen < 1:
            continue
        config = GraftConfig(scales=chosen, window=window, down=down, up=up)
        for depth in range(spec.depths[stage]):
            if (stage, depth) == (0, 0):
                continue
            sites.append(GraftSite(stage=stage, depth=depth, config=config))
    if limit is not None:
        sites = sites[:limit]
    return tuple(sites)


def deit_window_substitution(spec: BackboneSpec, window: Optional[int] = None) -> BackboneSpec:
    """Replace global attention in a homogeneous backbone by unshifted windows.

    ``window`` defaults to :func:`default_window` of the token grid; a window
    equal to the grid gives back global attention.

    Raises:
        ConfigurationError: For pyramid backbones
    """
    if spec.kind != "homogeneous":
        raise ConfigurationError("window substitution applies to homogeneous backbones only")
    data = spec.model_dump()
    data["window"] = window if window is not None else default_window(spec.grid)
    data["shift_windows"] = False
    return BackboneSpec.model_validate(data)


def build_model_params(spec: BackboneSpec, seed: int, dtype: Optional[type] = None) -> ModelParams:
    """Create every parameter of ``spec``.

    Values depend only on (seed, parameter name), so a grafted model and the
    same spec without grafts share identical backbone weights.
    """
    store = ParameterStore(seed, dtype or get_default_dtype())
    c0 = spec.channels[0]
    patch_dim = spec.patch_size * spec.patch_size * spec.in_channels
    patch_proj = store.linear("patch_embed.proj", patch_dim, c0)
    pos = None
    if spec.kind == "homogeneous":
        pos = store.trunc_normal("patch_embed.pos", (spec.grid, spec.grid, c0))
    model = ModelParams(spec=spec, store=store, patch_proj=patch_proj, pos=pos)

    for s in range(spec.num_stages):
        channels, heads = spec.channels[s], spec.heads[s]
        res, window = spec.stage_resolution(s), spec.stage_window(s)
        merge = None
        if s > 0:
            prev = spec.channels[s - 1]
            merge = MergeParams(
                norm=store.norm(f"stages.{s}.merge.norm", 4 * prev),
                proj=store.linear(f"stages.{s}.merge.proj", 4 * prev, channels),
            )
        blocks = []
        for d in range(spec.depths[s]):
            prefix = f"stages.{s}.blocks.{d}"
            bias_window = (window, window) if spec.uses_relative_bias else None
            block = BlockParams(
                norm1=store.norm(f"{prefix}.norm1", channels),
                attn=store.attention(f"{prefix}.attn", channels, heads, window=bias_window),
                ffn=store.ffn(f"{prefix}.ffn", channels, spec.mlp_ratio),
                window=window,
                shift=spec.block_shift(s, d),
            )
            config = spec.graft_at(s, d)
            if config is not None:
                block.graft = build_graft_params(
                    store,
                    f"grafts.{s}.{d}",
                    config,
                    channels,
                    heads,
                    res,
                    res,
                    ffn_ratio=spec.mlp_ratio if spec.ffn_mode == "separate" else None,
                )
            blocks.append(block)
        model.stages.append(StageParams(blocks=blocks, merge=merge))

    model.head_norm = store.norm("head.norm", spec.channels[-1])
    model.head = store.linear("head.proj", spec.channels[-1], spec.num_classes)
    logger.debug(
        "model_built",
        kind=spec.kind,
        tensors=len(store),
        params=store.num_elements(),
        grafts=model.num_grafts,
    )
    return model


def patch_embed(images: Tensor, model: ModelParams) -> Tensor:
    """(N, H, W, C_in) images to (N, H/p, W/p, C) tokens.

    Raises:
        ConfigurationError: If the image does not split into whole patches
    """
    spec = model.spec
    n, h, w, c = require_feature_map(images, "image batch")
    p = spec.patch_size
    if h % p or w % p:
        raise ConfigurationError(f"image {h}x{w} is not divisible by patch size {p}")
    if c != spec.in_channels:
        raise ShapeError(f"image has {c} channels, model expects {spec.in_channels}")
    patches = images.reshape(n, h // p, p, w // p, p, c).transpose(0, 1, 3, 2, 4, 5)
    tokens = linear(patches.reshape(n, h // p, w // p, p * p * c), model.patch_proj)
    return tokens + model.pos if model.pos is not None else tokens


def block_forward(
    x: Tensor,
    block: BlockParams,
    ffn_mode: str = "shared",
    graft_gain: float = 1.0,
) -> Tensor:
    """Pre-norm windowed block with optional graft fusion.

    The graft branches off the block input and is added to the attention
    residual before the shared FFN: Y = x + L-MSA(LN x) + Z, out = Y + FFN(Y).
    In ``separate`` mode the branch output gets its own FFN after the
    backbone FFN. ``graft_gain`` scales the branch contribution.
    """
    y = x + l_msa(norm(x, block.norm1), block.attn, block.window, block.shift)
    if block.graft is None:
        return y + feed_forward(y, block.ffn)

    z = graft_forward(x, block.graft)
    if ffn_mode == "separate":
        out = y + feed_forward(y, block.ffn)
        return out + graft_ffn(z, block.graft) * graft_gain
    y = y + z * graft_gain
    return y + feed_forward(y, block.ffn)


def patch_merging(x: Tensor, merge: MergeParams) -> Tensor:
    """2x2 neighbourhood concat (row-major) -> LN(4C) -> Linear(4C -> 2C).

    Raises:
        ConfigurationError: If an extent is odd
    """
    n, h, w, c = require_feature_map(x)
    if h % 2 or w % 2:
        raise ConfigurationError(f"patch merging needs even extents, got {h}x{w}")
    blocks = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 2, 4, 5)
    return linear(norm(blocks.reshape(n, h // 2, w // 2, 4 * c), merge.norm), merge.proj)


def features(images: Union[Tensor, np.ndarray], model: ModelParams, graft_gain: float = 1.0) -> Tensor:
    """Final-stage feature map before the head."""
    if not isinstance(images, Tensor):
        images = Tensor(images, dtype=model.store.dtype)
    x = patch_embed(images, model)
    for stage in model.stages:
        if stage.merge is not None:
            x = patch_merging(x, stage.merge)
        for block in stage.blocks:
            x = block_forward(x, block, model.spec.ffn_mode, graft_gain)
    return x


def model_forward(images: Union[Tensor, np.ndarray], model: ModelParams, graft_gain: float = 1.0) -> Tensor:
    """Logits (N, num_classes): features -> LN -> token mean -> linear head."""
    x = norm(features(images, model, graft_gain), model.head_norm)
    return linear(x.mean(axis=(1, 2)), model.head)
