"""Model description: graft configuration and backbone specification."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import ConfigurationError

BackboneKind = Literal["homogeneous", "pyramid"]
DownKind = Literal["avgpool", "linear_proj", "cross_attn"]
UpKind = Literal["wbilinear", "nearest", "cross_attn"]
FfnMode = Literal["shared", "separate"]


class GraftConfig(BaseModel):
    """One graft branch: number of coarse scales, ratios, window and variants."""

    model_config = ConfigDict(frozen=True)

    scales: int = Field(default=3, ge=1, description="Number of coarse levels B")
    ratio_h: int = Field(default=2, ge=2, description="Per-step height ratio r_h")
    ratio_w: int = Field(default=2, ge=2, description="Per-step width ratio r_w")
    window: int = Field(..., ge=1, description="Window side M for graft L-MSA")
    down: DownKind = Field(default="avgpool", description="Left-right downsampling variant")
    up: UpKind = Field(default="wbilinear", description="Right-left upsampling variant")

    def level_extents(self, height: int, width: int) -> list[tuple[int, int]]:
        """Extents of levels 0..B for a level-0 map of ``height`` x ``width``.

        Raises:
            ConfigurationError: If some level would have fractional extents
        """
        extents = [(height, width)]
        for level in range(1, self.scales + 1):
            h, w = extents[-1]
            if h % self.ratio_h or w % self.ratio_w:
                raise ConfigurationError(
                    f"level {level} of a {height}x{width} graft is fractional: "
                    f"{h}x{w} is not divisible by {self.ratio_h}x{self.ratio_w}"
                )
            extents.append((h // self.ratio_h, w // self.ratio_w))
        return extents

    def validate_for(self, height: int, width: int) -> list[tuple[int, int]]:
        """Check this graft fits a level-0 map and return its level extents.

        Every coarse level must tile into M x M windows and the coarsest level
        must hold at least one whole window.

        Raises:
            ConfigurationError: If the window does not fit some level
        """
        extents = self.level_extents(height, width)
        coarse_h, coarse_w = extents[-1]
        if coarse_h < self.window or coarse_w < self.window:
            raise ConfigurationError(
                f"coarsest graft level {coarse_h}x{coarse_w} is smaller than window {self.window}"
            )
        for level, (h, w) in enumerate(extents[1:], start=1):
            if h % self.window or w % self.window:
                raise ConfigurationError(
                    f"graft level {level} extents {h}x{w} are not divisible by window {self.window}"
                )
        return extents


class GraftSite(BaseModel):
    """Attachment point of a graft: (stage, depth) with its configuration."""

    model_config = ConfigDict(frozen=True)

    stage: int = Field(..., ge=0, description="Stage index (0-based)")
    depth: int = Field(..., ge=0, description="Block index within the stage (0-based)")
    config: GraftConfig


class BackboneSpec(BaseModel):
    """Full model description."""

    model_config = ConfigDict(frozen=True)

    kind: BackboneKind = Field(..., description="homogeneous (DeiT-like) or pyramid (Swin-like)")
    image_size: int = Field(default=32, ge=1, description="Square input side in pixels")
    patch_size: int = Field(default=4, ge=1, description="Patch side in pixels")
    in_channels: int = Field(default=3, ge=1, description="Image channels")
    depths: list[int] = Field(..., min_length=1, description="Blocks per stage")
    channels: list[int] = Field(..., min_length=1, description="Channel width per stage")
    heads: list[int] = Field(..., min_length=1, description="Attention heads per stage")
    window: int = Field(..., ge=1, description="Backbone window side M")
    num_classes: int = Field(..., ge=2, description="Classifier outputs")
    mlp_ratio: int = Field(default=4, ge=1, description="FFN expansion ratio")
    ffn_mode: FfnMode = Field(default="shared", description="Shared or separate FFN when grafted")
    relative_bias: Optional[bool] = Field(
        default=None, description="Backbone relative position bias (default: pyramid only)"
    )
    shift_windows: Optional[bool] = Field(
        default=None, description="Alternate shifted windows (default: pyramid only)"
    )
    grafts: tuple[GraftSite, ...] = Field(default=(), description="Graft attachment points")

    @property
    def grid(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_stages(self) -> int:
        return len(self.depths)

    @property
    def num_blocks(self) -> int:
        return sum(self.depths)

    @property
    def uses_relative_bias(self) -> bool:
        if self.relative_bias is None:
            return self.kind == "pyramid"
        return self.relative_bias

    @property
    def uses_shift(self) -> bool:
        if self.shift_windows is None:
            return self.kind == "pyramid"
        return self.shift_windows

    def stage_resolution(self, stage: int) -> int:
        """Token-grid side of ``stage``: H / (patch * 2^stage)."""
        return self.grid // (2**stage)

    def stage_window(self, stage: int) -> int:
        """Backbone window at ``stage``; a window larger than the map shrinks to it."""
        return min(self.window, self.stage_resolution(stage))

    def block_shift(self, stage: int, depth: int) -> int:
        window = self.stage_window(stage)
        if not self.uses_shift or depth % 2 == 0 or window >= self.stage_resolution(stage):
            return 0
        return window // 2

    def graft_at(self, stage: int, depth: int) -> Optional[GraftConfig]:
        for site in self.grafts:
            if site.stage == stage and site.depth == depth:
                return site.config
        return None

    def with_grafts(self, grafts) -> "BackboneSpec":
        """Same backbone with ``grafts`` attached (revalidated)."""
        data = self.model_dump()
        data["grafts"] = [g.model_dump() if isinstance(g, GraftSite) else g for g in grafts]
        return BackboneSpec.model_validate(data)

    def without_grafts(self) -> "BackboneSpec":
        return self.with_grafts(())

    def scaled_to(self, grid: int) -> "BackboneSpec":
        """Same model on a ``grid`` x ``grid`` token map (revalidated)."""
        data = self.model_dump()
        data["image_size"] = grid * self.patch_size
        return BackboneSpec.model_validate(data)

    @model_validator(mode="after")
    def _check_structure(self) -> "BackboneSpec":
        if not len(self.depths) == len(self.channels) == len(self.heads):
            raise ConfigurationError(
                f"depths/channels/heads lengths differ: "
                f"{len(self.depths)}/{len(self.channels)}/{len(self.heads)}"
            )
        if self.image_size % self.patch_size:
            raise ConfigurationError(
                f"image size {self.image_size} is not divisible by patch size {self.patch_size}"
            )
        if any(d < 1 for d in self.depths):
            raise ConfigurationError(f"every stage needs at least one block: {self.depths}")
        for stage, (c, h) in enumerate(zip(self.channels, self.heads)):
            if h < 1 or c % h:
                raise ConfigurationError(f"stage {stage}: channels {c} not divisible by heads {h}")

        if self.kind == "homogeneous":
            if self.num_stages != 1:
                raise ConfigurationError("a homogeneous backbone has exactly one stage")
            if self.shift_windows:
                raise ConfigurationError("homogeneous backbones use unshifted windows")
        else:
            if self.grid % (2 ** (self.num_stages - 1)):
                raise ConfigurationError(
                    f"token grid {self.grid} cannot halve {self.num_stages - 1} times"
                )
            for stage in range(1, self.num_stages):
                if self.channels[stage] != 2 * self.channels[stage - 1]:
                    raise ConfigurationError(
                        f"pyramid channels must double per stage: {self.channels}"
                    )

        for stage in range(self.num_stages):
            res, window = self.stage_resolution(stage), self.stage_window(stage)
            if res % window:
                raise ConfigurationError(
                    f"window size {window} does not divide stage {stage} grid {res}x{res}"
                )

        seen: set[tuple[int, int]] = set()
        for site in self.grafts:
            key = (site.stage, site.depth)
            if key in seen:
                raise ConfigurationError(f"more than one graft at stage {site.stage} block {site.depth}")
            seen.add(key)
            if site.stage >= self.num_stages or site.depth >= self.depths[site.stage]:
                raise ConfigurationError(f"graft site {key} does not exist in depths {self.depths}")
            if key == (0, 0):
                raise ConfigurationError(
                    "no graft at first layer: the first block must encode tokens first"
                )
            res = self.stage_resolution(site.stage)
            site.config.validate_for(res, res)
        return self
