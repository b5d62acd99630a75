"""Tests for backbone specs, graft policies and the model forward pass."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import ConfigurationError, ShapeError
from src.harness.oracles import (
    ref_gelu,
    ref_graft_forward,
    ref_layer_norm,
    ref_linear,
    ref_patch_embed,
    ref_patch_merging,
    ref_window_attention,
)
from src.models.spec import BackboneSpec, GraftConfig, GraftSite
from src.nn.attention import WindowGrid
from src.nn.backbone import (
    block_forward,
    build_model_params,
    default_graft_policy,
    default_window,
    deit_window_substitution,
    features,
    model_forward,
    patch_embed,
    patch_merging,
    stage_resolutions,
)
from src.tensor import Tensor


def homogeneous_spec(**overrides):
    values = dict(kind="homogeneous", depths=[3], channels=[16], heads=[2], window=4, num_classes=4)
    values.update(overrides)
    return BackboneSpec(**values)


def pyramid_spec(**overrides):
    values = dict(
        kind="pyramid",
        image_size=64,
        depths=[2, 2, 2],
        channels=[8, 16, 32],
        heads=[1, 2, 4],
        window=4,
        num_classes=4,
    )
    values.update(overrides)
    return BackboneSpec(**values)


def _images(n=2, size=32, seed=0):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, size, size, 3))


def _ref_block(x, block, branch=None):
    y = x + ref_window_attention(ref_layer_norm(x, block.norm1), block.attn, block.window)
    if branch is not None:
        y = y + branch
    ffn = block.ffn
    hidden = ref_gelu(ref_linear(ref_layer_norm(y, ffn.norm), ffn.fc1))
    return y + ref_linear(hidden, ffn.fc2)


class TestSpec:
    """Tests for backbone spec validation."""

    def test_stage_resolutions(self):
        """Pyramids halve the token grid per stage."""
        assert stage_resolutions(pyramid_spec()) == [16, 8, 4]
        assert stage_resolutions(homogeneous_spec()) == [8]

    def test_shift_only_on_odd_pyramid_blocks(self):
        """Pyramid odd blocks shift by half a window; homogeneous never shifts."""
        spec = pyramid_spec()

        assert spec.block_shift(0, 0) == 0
        assert spec.block_shift(0, 1) == 2
        assert spec.block_shift(2, 1) == 0  # window covers the 4x4 map
        assert homogeneous_spec().block_shift(0, 1) == 0

    def test_window_must_divide(self):
        """Test that a window not dividing a stage grid is rejected."""
        with pytest.raises(ValidationError, match="does not divide"):
            homogeneous_spec(window=3)

    def test_first_block_graft_rejected(self):
        """Test that a graft at the very first block is rejected."""
        site = GraftSite(stage=0, depth=0, config=GraftConfig(scales=1, window=4))

        with pytest.raises(ValidationError, match="first layer"):
            homogeneous_spec(grafts=(site,))

    def test_graft_must_fit_stage(self):
        """Test that a graft with too many levels is rejected."""
        site = GraftSite(stage=0, depth=1, config=GraftConfig(scales=2, window=4))

        with pytest.raises(ValidationError):
            homogeneous_spec(grafts=(site,))

    def test_pyramid_channels_double(self):
        """Test that pyramid channels must double per stage."""
        with pytest.raises(ValidationError, match="double"):
            pyramid_spec(channels=[8, 8, 32])

    def test_scaled_to_keeps_grafts(self):
        """Rescaling changes the image size only."""
        spec = homogeneous_spec().with_grafts(default_graft_policy(homogeneous_spec()))
        scaled = spec.scaled_to(16)

        assert scaled.grid == 16
        assert scaled.grafts == spec.grafts


class TestPolicies:
    """Tests for default windows and graft policies."""

    @pytest.mark.parametrize("grid,window", [(56, 7), (14, 7), (8, 4), (6, 2), (3, 1), (1, 1)])
    def test_default_window(self, grid, window):
        """The default window is the largest candidate below the grid that divides it."""
        assert default_window(grid) == window

    def test_homogeneous_policy_skips_first_block(self):
        """Every block after the first gets a graft."""
        sites = default_graft_policy(homogeneous_spec())

        assert [(s.stage, s.depth) for s in sites] == [(0, 1), (0, 2)]
        assert all(s.config.window == 4 and s.config.scales == 1 for s in sites)

    def test_pyramid_policy_skips_last_stage(self):
        """No graft in the last pyramid stage; B follows each stage's room."""
        sites = default_graft_policy(pyramid_spec())

        assert [(s.stage, s.depth) for s in sites] == [(0, 1), (1, 0), (1, 1)]
        assert sites[0].config.scales == 2
        assert sites[1].config.scales == 1

    def test_policy_limit_and_variants(self):
        """first_k keeps the earliest sites and carries the variants."""
        sites = default_graft_policy(pyramid_spec(), down="linear_proj", up="nearest", limit=1)

        assert len(sites) == 1
        assert sites[0].config.down == "linear_proj"
        assert sites[0].config.up == "nearest"

    def test_scales_capped(self):
        """A requested B larger than allowed is clipped."""
        sites = default_graft_policy(pyramid_spec(), scales=5)

        assert sites[0].config.scales == 2

    def test_window_substitution(self):
        """Homogeneous backbones get unshifted default windows."""
        spec = deit_window_substitution(homogeneous_spec(window=8))

        assert spec.window == 4
        assert not spec.uses_shift

    def test_window_substitution_pyramid(self):
        """Test that pyramids are refused."""
        with pytest.raises(ConfigurationError):
            deit_window_substitution(pyramid_spec())

    def test_twelve_block_homogeneous_gets_eleven_grafts(self):
        """Every block after the first of a 12-block homogeneous model is grafted."""
        spec = homogeneous_spec(depths=[12])
        sites = default_graft_policy(spec)
        model = build_model_params(spec.with_grafts(sites), seed=0)

        assert len(sites) == 11
        assert model.num_grafts == 11
        assert model.stages[0].blocks[0].graft is None

    def test_window_substitution_tiles_grid(self):
        """A 28x28 token grid gets 7x7 windows, sixteen of them."""
        spec = deit_window_substitution(homogeneous_spec(image_size=112, window=28))

        assert spec.window == 7
        assert WindowGrid.for_map(28, 28, spec.window).num_windows == 16

    def test_window_substitution_differs_from_global(self):
        """Windows smaller than the grid change the output of the same weights."""
        global_spec = homogeneous_spec(window=8)
        local_spec = deit_window_substitution(global_spec)
        images = _images(seed=2)

        global_logits = model_forward(images, build_model_params(global_spec, seed=1)).data
        local_logits = model_forward(images, build_model_params(local_spec, seed=1)).data

        assert local_spec.window < local_spec.grid
        assert not np.allclose(global_logits, local_logits)


class TestModelParams:
    """Tests for parameter construction."""

    def test_names(self):
        """Backbone, graft and head tensors are registered under stable names."""
        spec = pyramid_spec()
        model = build_model_params(spec.with_grafts(default_graft_policy(spec)), seed=0)
        names = set(model.store.names())

        assert {"patch_embed.proj.weight", "head.norm.gamma", "head.proj.bias"} <= names
        assert "stages.1.merge.proj.weight" in names
        assert "stages.0.blocks.1.attn.rel_bias" in names
        assert "grafts.0.1.level.2.attn.rel_bias" in names
        assert "patch_embed.pos" not in names
        assert model.num_grafts == 3

    def test_homogeneous_has_position_embedding(self):
        """Homogeneous models learn absolute positions and no relative bias."""
        names = build_model_params(homogeneous_spec(), seed=0).store.names()

        assert "patch_embed.pos" in names
        assert not any(name.endswith("rel_bias") for name in names)

    def test_grafted_model_shares_backbone_weights(self):
        """Initial backbone tensors do not depend on whether grafts exist."""
        spec = homogeneous_spec()
        plain = build_model_params(spec, seed=7).store
        grafted = build_model_params(spec.with_grafts(default_graft_policy(spec)), seed=7).store

        for name, tensor in plain.named_parameters():
            assert np.array_equal(grafted[name].data, tensor.data), name

    def test_separate_mode_adds_branch_ffn(self):
        """Separate fusion registers one FFN per graft."""
        spec = homogeneous_spec(ffn_mode="separate")
        model = build_model_params(spec.with_grafts(default_graft_policy(spec)), seed=0)

        assert "grafts.0.1.ffn.fc1.weight" in model.store.names()


class TestForward:
    """Tests for the forward pass."""

    def test_logits_shape(self):
        """Homogeneous and pyramid models return (N, K) logits."""
        for spec, size in ((homogeneous_spec(), 32), (pyramid_spec(), 64)):
            grafted = spec.with_grafts(default_graft_policy(spec))
            logits = model_forward(_images(size=size), build_model_params(grafted, seed=0))
            assert logits.shape == (2, 4)
            assert np.isfinite(logits.data).all()

    def test_pyramid_features(self):
        """The last pyramid stage is a 4x4 map of 32 channels."""
        model = build_model_params(pyramid_spec(), seed=0)

        assert features(_images(size=64), model).shape == (2, 4, 4, 32)

    @pytest.mark.parametrize("ffn_mode", ["shared", "separate"])
    def test_zero_gain_is_transparent(self, ffn_mode):
        """With the branch gain at zero a grafted model equals its plain twin bit for bit."""
        spec = homogeneous_spec(ffn_mode=ffn_mode)
        plain = build_model_params(spec, seed=3)
        grafted = build_model_params(spec.with_grafts(default_graft_policy(spec)), seed=3)
        images = _images(seed=1)

        assert np.array_equal(
            model_forward(images, grafted, graft_gain=0.0).data, model_forward(images, plain).data
        )

    def test_graft_changes_output(self):
        """At unit gain the branch contributes."""
        spec = homogeneous_spec()
        plain = build_model_params(spec, seed=3)
        grafted = build_model_params(spec.with_grafts(default_graft_policy(spec)), seed=3)
        images = _images(seed=1)

        grafted_logits = model_forward(images, grafted).data

        assert not np.allclose(grafted_logits, model_forward(images, plain).data)

    def test_deterministic(self):
        """Same seed and spec give identical logits."""
        spec = pyramid_spec()
        spec = spec.with_grafts(default_graft_policy(spec))
        images = _images(size=64)
        first = model_forward(images, build_model_params(spec, seed=11)).data
        second = model_forward(images, build_model_params(spec, seed=11)).data

        assert np.array_equal(first, second)

    def test_block_preserves_shape(self):
        """A grafted block maps (N, H, W, C) to the same shape."""
        spec = homogeneous_spec()
        model = build_model_params(spec.with_grafts(default_graft_policy(spec)), seed=0)
        x = Tensor(np.random.default_rng(2).normal(size=(2, 8, 8, 16)))

        assert block_forward(x, model.stages[0].blocks[1]).shape == x.shape

    def test_patch_embed_matches_reference(self):
        """Patch embedding agrees with the loop reference (position embedding removed)."""
        model = build_model_params(homogeneous_spec(), seed=0)
        images = _images(n=1)
        tokens = patch_embed(Tensor(images), model).data[0] - model.pos.data
        expected = ref_patch_embed(images[0], model.patch_proj, 4)

        np.testing.assert_allclose(tokens, expected, atol=1e-12)

    def test_patch_merging_matches_reference(self):
        """Patch merging agrees with the loop reference."""
        model = build_model_params(pyramid_spec(), seed=0)
        merge = model.stages[1].merge
        x = np.random.default_rng(4).normal(size=(1, 16, 16, 8))
        expected = ref_patch_merging(x[0], merge.norm, merge.proj)

        np.testing.assert_allclose(patch_merging(Tensor(x), merge).data[0], expected, atol=1e-10)

    def test_odd_merge_rejected(self):
        """Test that patch merging needs even extents."""
        model = build_model_params(pyramid_spec(), seed=0)

        with pytest.raises(ConfigurationError):
            patch_merging(Tensor(np.zeros((1, 5, 5, 8))), model.stages[1].merge)

    def test_channel_mismatch(self):
        """Test that images with the wrong channel count are rejected."""
        model = build_model_params(homogeneous_spec(), seed=0)

        with pytest.raises(ShapeError):
            model_forward(np.zeros((1, 32, 32, 1)), model)
class TestCompositionOracles:
    """Block and model forward against hand-composed loop references."""

    def test_plain_block_matches_reference(self):
        """Residual attention then residual FFN, as composed by hand."""
        model = build_model_params(homogeneous_spec(depths=[2]), seed=5)
        block = model.stages[0].blocks[1]
        x = np.random.default_rng(9).normal(size=(1, 8, 8, 16))

        out = block_forward(Tensor(x), block).data[0]

        np.testing.assert_allclose(out, _ref_block(x[0], block), atol=1e-10)

    def test_grafted_block_matches_reference(self):
        """The branch output joins the attention residual before the shared FFN."""
        spec = homogeneous_spec(depths=[2])
        model = build_model_params(spec.with_grafts(default_graft_policy(spec)), seed=5)
        block = model.stages[0].blocks[1]
        x = np.random.default_rng(10).normal(size=(1, 8, 8, 16))

        out = block_forward(Tensor(x), block).data[0]
        expected = _ref_block(x[0], block, ref_graft_forward(x[0], block.graft))

        np.testing.assert_allclose(out, expected, atol=1e-10)

    def test_two_block_model_matches_reference(self):
        """Embedding, two blocks, head norm, token mean and head, composed by hand."""
        model = build_model_params(homogeneous_spec(depths=[2]), seed=6)
        images = _images(n=1, seed=4)

        x = ref_patch_embed(images[0], model.patch_proj, 4) + model.pos.data
        for block in model.stages[0].blocks:
            x = _ref_block(x, block)
        pooled = ref_layer_norm(x, model.head_norm).mean(axis=(0, 1))
        expected = ref_linear(pooled, model.head)

        np.testing.assert_allclose(model_forward(images, model).data[0], expected, atol=1e-10)
