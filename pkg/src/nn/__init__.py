"""Network layers: attention, graft branches, backbones and optimizers."""

from src.nn.backbone import (
    BlockParams,
    ModelParams,
    block_forward,
    build_model_params,
    deit_window_substitution,
    default_graft_policy,
    model_forward,
    patch_embed,
    patch_merging,
    stage_resolutions,
)
from src.nn.graft import GraftParams, graft_block, graft_forward, max_scales
from src.nn.params import ParameterStore

__all__ = [
    "BlockParams",
    "GraftParams",
    "ModelParams",
    "ParameterStore",
    "block_forward",
    "build_model_params",
    "deit_window_substitution",
    "default_graft_policy",
    "graft_block",
    "graft_forward",
    "max_scales",
    "model_forward",
    "patch_embed",
    "patch_merging",
    "stage_resolutions",
]
