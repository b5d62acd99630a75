"""Verification suites: gradients, structural invariants, cost and loop oracles.

Each suite is a list of (check name, function) pairs. A check function takes
the suite context and returns one or more CheckResults.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from src.cost.counter import count_params, verify_complexity_claim, window_block_macs
from src.errors import UnknownSuiteError
from src.harness import oracles
from src.models.report import CheckResult, SuiteReport
from src.models.run import RunConfig
from src.models.spec import BackboneSpec, GraftConfig, GraftSite
from src.nn.attention import WindowGrid, global_msa, l_msa, window_partition, window_reverse
from src.nn.backbone import (
    build_model_params,
    default_graft_policy,
    features,
    model_forward,
    patch_embed,
    patch_merging,
    stage_resolutions,
)
from src.nn.graft import (
    build_graft_params,
    crossattn_upsample,
    downsample,
    graft_forward,
    max_scales,
    nearest_upsample,
    w_bilinear_upsample,
    window_bilinear,
)
from src.nn.params import ParameterStore
from src.tensor import Tensor, backward, no_grad, precision
from src.tensor import ops
from src.tensor.gradcheck import (
    finite_diff_grad,
    max_relative_error,
    parameter_fd_grad,
    sample_coords,
)
from src.utils.logger import get_logger

logger = get_logger("suites")

GRAD_TOLERANCE = 1e-5
GRAD_COORDS = 6
# Per-group relative-error floor: GRAD_FLOOR x the group's largest gradient,
# at least GRAD_NOISE_FLOOR (an absolute error bound of 1e-9 at the tolerance)
GRAD_FLOOR = 1e-3
GRAD_NOISE_FLOOR = 1e-4
ORACLE_TOLERANCE = 1e-10
GOLDEN_BLOCK_MACS = 376_320_000
DOWN_KINDS = ("avgpool", "linear_proj", "cross_attn")
UP_KINDS = ("wbilinear", "nearest", "cross_attn")

CheckOutput = Union[CheckResult, list[CheckResult]]


@dataclass
class SuiteContext:
    config: RunConfig
    rng: np.random.Generator

    def normal(self, *shape: int, scale: float = 1.0) -> np.ndarray:
        return self.rng.normal(scale=scale, size=shape)

    def seed(self) -> int:
        return int(self.rng.integers(0, 2**31 - 1))


def _check(name: str, passed: bool, value=None, threshold=None, detail: str = "") -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(passed),
        value=None if value is None else float(value),
        threshold=threshold,
        detail=detail,
    )


def _randomize(store: ParameterStore, rng: np.random.Generator, scale: float = 0.5) -> None:
    """Overwrite every parameter with N(0, scale) draws so oracles see non-trivial weights."""
    for _, tensor in store.named_parameters():
        tensor.data = rng.normal(scale=scale, size=tensor.shape).astype(tensor.dtype)


def _first_graft(spec: BackboneSpec) -> GraftConfig:
    return spec.grafts[0].config if spec.grafts else GraftConfig(window=2)


# Reference specs


def grad_check_spec(config: RunConfig) -> BackboneSpec:
    """Two-block homogeneous model with one B=2 graft, using the config's variants."""
    variant = _first_graft(config.spec)
    return BackboneSpec(
        kind="homogeneous",
        image_size=32,
        patch_size=4,
        depths=[2],
        channels=[8],
        heads=[2],
        window=2,
        num_classes=4,
        ffn_mode=config.spec.ffn_mode,
        grafts=(
            GraftSite(
                stage=0,
                depth=1,
                config=GraftConfig(scales=2, window=2, down=variant.down, up=variant.up),
            ),
        ),
    )


def swin_like_spec(grid: int = 56) -> BackboneSpec:
    return BackboneSpec(
        kind="pyramid",
        image_size=4 * grid,
        depths=[2, 2, 6, 2],
        channels=[96, 192, 384, 768],
        heads=[3, 6, 12, 24],
        window=7,
        num_classes=1000,
    )


def deit_like_spec(grid: int = 56) -> BackboneSpec:
    return BackboneSpec(
        kind="homogeneous",
        image_size=4 * grid,
        depths=[12],
        channels=[192],
        heads=[3],
        window=7,
        num_classes=1000,
    )


def accounting_specs(config: RunConfig) -> list[BackboneSpec]:
    """Config spec plus toy specs covering every structure, variant and FFN mode."""
    homogeneous = BackboneSpec(
        kind="homogeneous", depths=[3], channels=[16], heads=[2], window=4, num_classes=4
    )
    pyramid = BackboneSpec(
        kind="pyramid", depths=[2, 2, 1], channels=[8, 16, 32], heads=[2, 2, 4], window=4, num_classes=4
    )
    separate = BackboneSpec.model_validate({**pyramid.model_dump(), "ffn_mode": "separate"})
    variants = homogeneous.with_grafts(
        GraftSite(stage=0, depth=d, config=GraftConfig(scales=1, window=2, down=down, up=up))
        for d, (down, up) in zip((1, 2), (("linear_proj", "cross_attn"), ("cross_attn", "nearest")))
    )
    return [
        config.spec,
        homogeneous,
        homogeneous.with_grafts(default_graft_policy(homogeneous)),
        pyramid.with_grafts(default_graft_policy(pyramid)),
        separate.with_grafts(default_graft_policy(separate)),
        variants,
    ]


def shape_config_grid() -> list[tuple[int, int, GraftConfig]]:
    """(H, W, GraftConfig) triples over extents, windows, scales and variants."""
    variants = itertools.cycle(itertools.product(DOWN_KINDS, UP_KINDS))
    grid = []
    for height, width in ((8, 8), (16, 16), (16, 8), (24, 24), (32, 32)):
        for window in (1, 2, 4):
            limit = min(max_scales(height, window, limit=3), max_scales(width, window, limit=3))
            for scales in range(1, limit + 1):
                for _ in range(2):
                    down, up = next(variants)
                    config = GraftConfig(scales=scales, window=window, down=down, up=up)
                    grid.append((height, width, config))
    return grid


# Gradient suite


def gradient_floor(grad: np.ndarray) -> float:
    """Relative-error floor for one parameter group, from that group alone."""
    return max(GRAD_FLOOR * float(np.abs(grad).max(initial=0.0)), GRAD_NOISE_FLOOR)


def check_gradients(ctx: SuiteContext) -> list[CheckResult]:
    """Autodiff vs central differences for every parameter tensor and the input."""
    spec = grad_check_spec(ctx.config)
    worst: dict[str, float] = {}
    with precision("verify64"):
        for offset in range(ctx.config.grad_seeds):
            seed = ctx.config.seed + offset
            rng = np.random.default_rng(seed)
            model = build_model_params(spec, seed)
            images = Tensor(rng.normal(size=(2, 32, 32, 3)), requires_grad=True)
            labels = rng.integers(0, spec.num_classes, size=2)

            def loss_fn():
                return ops.cross_entropy(model_forward(images, model), labels)

            model.store.zero_grad()
            images.zero_grad()
            backward(loss_fn())
            analytic = {
                name: (t.grad if t.grad is not None else np.zeros(t.shape))
                for name, t in model.store.named_parameters()
            }
            analytic["input"] = images.grad

            for name, tensor in model.store.named_parameters():
                coords = sample_coords(tensor.size, GRAD_COORDS, rng)
                numeric = parameter_fd_grad(loss_fn, tensor, coords=coords)
                floor = gradient_floor(analytic[name])
                error = max_relative_error(analytic[name], numeric.data, coords, floor)
                worst[name] = max(worst.get(name, 0.0), error)

            coords = sample_coords(images.size, GRAD_COORDS, rng)
            numeric = finite_diff_grad(
                lambda x: ops.cross_entropy(model_forward(x, model), labels),
                images.detach(),
                coords=coords,
            )
            floor = gradient_floor(analytic["input"])
            error = max_relative_error(analytic["input"], numeric.data, coords, floor)
            worst["input"] = max(worst.get("input", 0.0), error)

    seeds = ctx.config.grad_seeds
    return [
        _check(f"grad.{name}", error <= GRAD_TOLERANCE, error, GRAD_TOLERANCE, f"max over {seeds} seeds")
        for name, error in worst.items()
    ]


# Invariants suite


def check_window_roundtrip(ctx: SuiteContext) -> CheckResult:
    x = Tensor(ctx.normal(2, 8, 8, 3))
    grid = WindowGrid.for_map(8, 8, 4)
    back = window_reverse(window_partition(x, 4), grid)
    return _check("invariants.window_roundtrip", np.array_equal(back.data, x.data))


def _attention(ctx: SuiteContext, channels: int, heads: int, window=None):
    store = ParameterStore(ctx.seed())
    params = store.attention("check", channels, heads, window=window)
    _randomize(store, ctx.rng)
    return params


def check_degenerate_global(ctx: SuiteContext) -> CheckResult:
    p = _attention(ctx, 4, 2, window=(4, 4))
    x = Tensor(ctx.normal(1, 4, 4, 4))
    same = np.array_equal(l_msa(x, p, 4).data, global_msa(x, p).data)
    return _check("invariants.degenerate_global", same, detail="l_msa(M=H) vs global_msa")


def check_window_locality(ctx: SuiteContext) -> CheckResult:
    p = _attention(ctx, 4, 2, window=(4, 4))
    x = ctx.normal(1, 8, 8, 4)
    perturbed = x.copy()
    perturbed[:, :4, :4] = 0.0
    a = l_msa(Tensor(x), p, 4).data
    b = l_msa(Tensor(perturbed), p, 4).data
    outside = np.ones((8, 8), dtype=bool)
    outside[:4, :4] = False
    return _check("invariants.window_locality", np.array_equal(a[:, outside], b[:, outside]))


def check_graft_transparency(ctx: SuiteContext) -> CheckResult:
    spec = ctx.config.spec
    seed = ctx.config.seed
    images = ctx.normal(2, spec.image_size, spec.image_size, spec.in_channels)
    with no_grad():
        grafted = model_forward(images, build_model_params(spec, seed), graft_gain=0.0)
        plain = model_forward(images, build_model_params(spec.without_grafts(), seed))
    detail = f"{len(spec.grafts)} grafts"
    return _check("invariants.graft_transparency", np.array_equal(grafted.data, plain.data), detail=detail)


def check_shape_preservation(ctx: SuiteContext) -> CheckResult:
    grid = shape_config_grid()
    failures = []
    with no_grad():
        for height, width, config in grid:
            store = ParameterStore(ctx.seed())
            params = build_graft_params(store, "check", config, 4, 2, height, width)
            x = Tensor(ctx.normal(1, height, width, 4))
            out = graft_forward(x, params)
            if out.shape != x.shape or not np.isfinite(out.data).all():
                failures.append(f"{height}x{width} B={config.scales} M={config.window}")
    detail = f"{len(grid)} configs" + (f"; failed: {failures[:3]}" if failures else "")
    return _check("invariants.shape_preservation", not failures, len(failures), 0, detail)


def check_shared_ffn(ctx: SuiteContext) -> CheckResult:
    spec = ctx.config.spec
    names = build_model_params(spec, ctx.config.seed).store.names()
    backbone_ffns = [n for n in names if n.startswith("stages.") and n.endswith(".ffn.fc1.weight")]
    graft_ffns = [n for n in names if n.startswith("grafts.") and n.endswith(".ffn.fc1.weight")]
    expected_graft = len(spec.grafts) if spec.ffn_mode == "separate" else 0
    passed = len(backbone_ffns) == spec.num_blocks and len(graft_ffns) == expected_graft
    detail = f"{len(backbone_ffns)} backbone FFNs, {len(graft_ffns)} graft FFNs ({spec.ffn_mode})"
    return _check("invariants.shared_ffn", passed, detail=detail)


def check_anti_alias(ctx: SuiteContext) -> CheckResult:
    spec = ctx.config.spec
    with precision("verify64"):
        model = build_model_params(spec, ctx.config.seed)
        embeddings = [
            step.pos
            for stage in model.stages
            for block in stage.blocks
            if block.graft is not None
            for step in block.graft.up
            if step.pos is not None
        ]
        if not embeddings:
            return _check("invariants.anti_alias", True, detail="no anti-aliasing embeddings")
        for pos in embeddings:
            pos.data = ctx.normal(*pos.shape, scale=3.0)
        images = ctx.normal(2, spec.image_size, spec.image_size, spec.in_channels)
        labels = ctx.rng.integers(0, spec.num_classes, size=2)
        backward(ops.cross_entropy(model_forward(images, model), labels))
    weights = [1.0 / (1.0 + np.exp(-pos.data)) for pos in embeddings]
    in_range = all(((w > 0) & (w < 1)).all() for w in weights)
    flows = all(pos.grad is not None and np.abs(pos.grad).max() > 0 for pos in embeddings)
    return _check(
        "invariants.anti_alias",
        in_range and flows,
        detail=f"{len(embeddings)} embeddings, range ok={in_range}, gradient flows={flows}",
    )


def check_bilinear_constant(ctx: SuiteContext) -> CheckResult:
    x = Tensor(np.full((1, 4, 4, 3), 3.0))
    out = window_bilinear(x, 2, 2, 2).data
    return _check("invariants.bilinear_constant", np.array_equal(out, np.full((1, 8, 8, 3), 3.0)))


def check_bilinear_containment(ctx: SuiteContext) -> CheckResult:
    x = ctx.normal(1, 4, 4, 3)
    perturbed = x.copy()
    perturbed[:, 2:, :2] += 1.0
    a = window_bilinear(Tensor(x), 2, 2, 2).data
    b = window_bilinear(Tensor(perturbed), 2, 2, 2).data
    outside = np.ones((8, 8), dtype=bool)
    outside[4:, :4] = False
    return _check("invariants.bilinear_containment", np.array_equal(a[:, outside], b[:, outside]))


def check_head_permutation(ctx: SuiteContext) -> CheckResult:
    spec = ctx.config.spec
    model = build_model_params(spec, ctx.config.seed)
    _randomize(model.store, np.random.default_rng(ctx.seed()), scale=0.2)
    images = ctx.normal(2, spec.image_size, spec.image_size, spec.in_channels)
    perm = ctx.rng.permutation(spec.num_classes)
    with no_grad():
        logits = model_forward(images, model).data
        model.head.weight.data = model.head.weight.data[:, perm]
        model.head.bias.data = model.head.bias.data[perm]
        permuted = model_forward(images, model).data
    same = np.allclose(permuted, logits[:, perm], rtol=1e-12, atol=1e-12)
    argmax = np.array_equal(perm[permuted.argmax(axis=1)], logits.argmax(axis=1))
    return _check("invariants.head_permutation", same and argmax)


def check_resolution_bookkeeping(ctx: SuiteContext) -> CheckResult:
    spec = ctx.config.spec
    model = build_model_params(spec, ctx.config.seed)
    images = Tensor(ctx.normal(1, spec.image_size, spec.image_size, spec.in_channels))
    expected = [spec.image_size // (spec.patch_size * 2**s) for s in range(spec.num_stages)]
    with no_grad():
        final = features(images, model)
    passed = stage_resolutions(spec) == expected and final.shape[1:3] == (expected[-1], expected[-1])
    return _check("invariants.resolution_bookkeeping", passed, detail=f"stage sides {expected}")


def check_determinism(ctx: SuiteContext) -> CheckResult:
    spec = ctx.config.spec
    images = ctx.normal(2, spec.image_size, spec.image_size, spec.in_channels)
    with precision("verify64"), no_grad():
        first = model_forward(images, build_model_params(spec, ctx.config.seed)).data
        second = model_forward(images, build_model_params(spec, ctx.config.seed)).data
    return _check("invariants.determinism", np.array_equal(first, second))


# Cost suite


def check_golden_macs(ctx: SuiteContext) -> list[CheckResult]:
    golden = window_block_macs(56, 56, 96, 7)
    unit = window_block_macs(1, 1, 1, 1)
    return [
        _check("cost.golden_block_macs", golden == GOLDEN_BLOCK_MACS, golden, GOLDEN_BLOCK_MACS),
        _check("cost.unit_block_macs", unit == 14, unit, 14),
    ]


def check_param_accounting(ctx: SuiteContext) -> list[CheckResult]:
    results = []
    for index, spec in enumerate(accounting_specs(ctx.config)):
        report = count_params(spec)
        store = build_model_params(spec, ctx.config.seed).store
        mismatched = [r.name for r in report.records if store.num_elements(r.name) != r.params]
        passed = report.params == store.num_elements() and not mismatched
        detail = f"{spec.kind}, {len(spec.grafts)} grafts, {spec.ffn_mode}"
        if mismatched:
            detail += f"; mismatched {mismatched[:3]}"
        results.append(
            _check(f"cost.param_accounting.{index}", passed, report.params, store.num_elements(), detail)
        )
    return results


def check_shared_ffn_params(ctx: SuiteContext) -> CheckResult:
    spec = ctx.config.spec
    grafted = count_params(spec).group_totals()["backbone"]["params"]
    plain = count_params(spec.without_grafts()).group_totals()["backbone"]["params"]
    return _check("cost.backbone_params_unchanged", grafted == plain, grafted - plain, 0)


def _complexity_results(name: str, spec: BackboneSpec, resolutions: Iterable[int]) -> list[CheckResult]:
    report = verify_complexity_claim(spec, resolutions)
    ratios = ", ".join(f"{r:.4f}" for r in report.ratios)
    return [
        _check(f"{name}.bounded", report.bounded, max(report.ratios), report.bound, ratios),
        _check(f"{name}.non_increasing", report.non_increasing, report.limiting_ratio, detail=ratios),
    ]


def check_complexity(ctx: SuiteContext) -> list[CheckResult]:
    resolutions = (56, 112, 224, 448)
    swin = swin_like_spec()
    deit = deit_like_spec()
    results = []
    for name, base in (("pyramid", swin), ("homogeneous", deit)):
        grafted = base.with_grafts(default_graft_policy(base))
        results += _complexity_results(f"cost.complexity.{name}", grafted, resolutions)

    spec = ctx.config.spec
    results += _complexity_results("cost.complexity.config", spec, [spec.grid * k for k in (1, 2, 4, 8)])

    empty = verify_complexity_claim(swin, resolutions)
    unit = all(r == 1.0 for r in empty.ratios)
    results.append(_check("cost.complexity.empty_policy", unit, empty.limiting_ratio, 1.0))

    single = verify_complexity_claim(swin.with_grafts(default_graft_policy(swin, scales=1)), resolutions)
    strictly = all(1.0 < r < 2.0 for r in single.ratios)
    results.append(_check("cost.complexity.single_scale", strictly, single.limiting_ratio, 2.0))
    return results


# Oracle suite


def _max_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


def _oracle_l_msa(ctx: SuiteContext, index: int) -> float:
    p = _attention(ctx, 4, 2, window=(2, 2))
    x = ctx.normal(1, 4, 4, 4)
    return _max_error(l_msa(Tensor(x), p, 2).data[0], oracles.ref_window_attention(x[0], p, 2))


def _oracle_global_msa(ctx: SuiteContext, index: int) -> float:
    p = _attention(ctx, 4, 2, window=(7, 7))
    x = ctx.normal(1, 7, 7, 4)
    return _max_error(global_msa(Tensor(x), p).data[0], oracles.ref_full_attention(x[0], p))


def _oracle_cross_attention(ctx: SuiteContext, index: int) -> float:
    p = _attention(ctx, 4, 2)
    fine, coarse = ctx.normal(1, 4, 4, 4), ctx.normal(1, 2, 2, 4)
    out = crossattn_upsample(Tensor(coarse), Tensor(fine), p).data[0]
    return _max_error(out, oracles.ref_cross_attention(fine[0], coarse[0], p))


def _check_graft(ctx: SuiteContext, config: GraftConfig, channels: int, height: int):
    store = ParameterStore(ctx.seed())
    params = build_graft_params(store, "check", config, channels, 2, height, height)
    _randomize(store, ctx.rng)
    return params


def _oracle_downsample(ctx: SuiteContext, index: int) -> float:
    config = GraftConfig(scales=1, window=2, down="avgpool")
    params = _check_graft(ctx, config, 4, 8)
    x = ctx.normal(1, 8, 8, 4)
    out = downsample(Tensor(x), params.down[0], config).data[0]
    return _max_error(out, oracles.ref_avgpool_downsample(x[0], params.down[0].norm, 2, 2))


def _oracle_w_bilinear(ctx: SuiteContext, index: int) -> float:
    config = GraftConfig(scales=1, window=2)
    params = _check_graft(ctx, config, 4, 8)
    z = ctx.normal(1, 4, 4, 4)
    out = w_bilinear_upsample(Tensor(z), params.up[0], config).data[0]
    return _max_error(out, oracles.ref_w_bilinear_upsample(z[0], params.up[0], 2, 2, 2))


def _oracle_nearest(ctx: SuiteContext, index: int) -> float:
    config = GraftConfig(scales=1, window=1)
    z = ctx.normal(1, 3, 3, 2)
    return _max_error(nearest_upsample(Tensor(z), config).data[0], oracles.ref_nearest_upsample(z[0], 2, 2))


def _oracle_graft_forward(ctx: SuiteContext, index: int) -> float:
    scales, window = ((1, 4), (2, 2), (3, 2))[index % 3]
    down, up = list(itertools.product(DOWN_KINDS, UP_KINDS))[index % 9]
    config = GraftConfig(scales=scales, window=window, down=down, up=up)
    params = _check_graft(ctx, config, 8, 16)
    x = ctx.normal(1, 16, 16, 8)
    return _max_error(graft_forward(Tensor(x), params).data[0], oracles.ref_graft_forward(x[0], params))


def _merge_check_spec() -> BackboneSpec:
    return BackboneSpec(
        kind="pyramid",
        image_size=8,
        patch_size=2,
        depths=[1, 1],
        channels=[4, 8],
        heads=[1, 2],
        window=2,
        num_classes=2,
    )


def _oracle_patch_embed(ctx: SuiteContext, index: int) -> float:
    model = build_model_params(_merge_check_spec(), ctx.seed())
    _randomize(model.store, ctx.rng)
    image = ctx.normal(1, 8, 8, 3)
    out = patch_embed(Tensor(image), model).data[0]
    return _max_error(out, oracles.ref_patch_embed(image[0], model.patch_proj, 2))


def _oracle_patch_merging(ctx: SuiteContext, index: int) -> float:
    model = build_model_params(_merge_check_spec(), ctx.seed())
    _randomize(model.store, ctx.rng)
    merge = model.stages[1].merge
    x = ctx.normal(1, 4, 4, 4)
    out = patch_merging(Tensor(x), merge).data[0]
    return _max_error(out, oracles.ref_patch_merging(x[0], merge.norm, merge.proj))


ORACLES: list[tuple[str, Callable[[SuiteContext, int], float]]] = [
    ("l_msa", _oracle_l_msa),
    ("global_msa", _oracle_global_msa),
    ("cross_attention", _oracle_cross_attention),
    ("downsample_avgpool", _oracle_downsample),
    ("w_bilinear_upsample", _oracle_w_bilinear),
    ("nearest_upsample", _oracle_nearest),
    ("graft_forward", _oracle_graft_forward),
    ("patch_embed", _oracle_patch_embed),
    ("patch_merging", _oracle_patch_merging),
]


def check_oracles(ctx: SuiteContext) -> list[CheckResult]:
    instances = ctx.config.oracle_instances
    results = []
    with precision("verify64"), no_grad():
        for name, oracle in ORACLES:
            error = max(oracle(ctx, i) for i in range(instances))
            results.append(
                _check(
                    f"oracle.{name}",
                    error <= ORACLE_TOLERANCE,
                    error,
                    ORACLE_TOLERANCE,
                    f"{instances} instances",
                )
            )
    return results


SUITES: dict[str, list[tuple[str, Callable[[SuiteContext], CheckOutput]]]] = {
    "grad": [("gradients", check_gradients)],
    "invariants": [
        ("window_roundtrip", check_window_roundtrip),
        ("degenerate_global", check_degenerate_global),
        ("window_locality", check_window_locality),
        ("graft_transparency", check_graft_transparency),
        ("shape_preservation", check_shape_preservation),
        ("shared_ffn", check_shared_ffn),
        ("anti_alias", check_anti_alias),
        ("bilinear_constant", check_bilinear_constant),
        ("bilinear_containment", check_bilinear_containment),
        ("head_permutation", check_head_permutation),
        ("resolution_bookkeeping", check_resolution_bookkeeping),
        ("determinism", check_determinism),
    ],
    "cost": [
        ("golden_macs", check_golden_macs),
        ("param_accounting", check_param_accounting),
        ("shared_ffn_params", check_shared_ffn_params),
        ("complexity", check_complexity),
    ],
    "oracle": [("oracles", check_oracles)],
}


def run_suite(name: str, config: RunConfig) -> SuiteReport:
    """Run every check of suite ``name`` against ``config``.

    Raises:
        UnknownSuiteError: If ``name`` is not a suite
    """
    if name not in SUITES:
        raise UnknownSuiteError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    ctx = SuiteContext(config=config, rng=np.random.default_rng(config.seed))
    started = time.perf_counter()
    checks: list[CheckResult] = []
    with precision("verify64"):
        for check_name, check in SUITES[name]:
            output = check(ctx)
            batch = output if isinstance(output, list) else [output]
            for result in batch:
                if not result.passed:
                    logger.warning(
                        "suite_check_failed",
                        suite=name,
                        check=result.name,
                        value=result.value,
                        detail=result.detail,
                    )
            checks.extend(batch)
            logger.debug("suite_check_done", suite=name, check=check_name, results=len(batch))
    report = SuiteReport(suite=name, checks=checks, duration_s=time.perf_counter() - started)
    logger.info(
        "suite_finished",
        suite=name,
        checks=len(checks),
        failures=len(report.failures),
        passed=report.passed,
    )
    return report
