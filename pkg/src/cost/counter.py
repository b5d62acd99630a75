"""Closed-form parameter and operation counts.

Contractions are counted in multiply-accumulates (MACs). Layer norm, GELU,
sigmoid, softmax, pooling, interpolation and residual additions cost one
unit per element and are reported separately as ``elementwise``. Counts are
for batch size 1 and depend only on the BackboneSpec.
"""

from __future__ import annotations

from typing import Iterable, Optional

from src.models.cost import BlockCost, ComplexityPoint, ComplexityReport, CostReport
from src.models.spec import BackboneSpec, GraftConfig
from src.utils.logger import get_logger

logger = get_logger("cost")

COMPLEXITY_BOUND = 2.0
DEFAULT_RESOLUTIONS = (56, 112, 224, 448)


def linear_params(fan_in: int, fan_out: int, bias: bool = True) -> int:
    return fan_in * fan_out + (fan_out if bias else 0)


def norm_params(channels: int) -> int:
    return 2 * channels


def attention_params(channels: int, heads: int, window: Optional[int] = None) -> int:
    table = (2 * window - 1) ** 2 * heads if window is not None else 0
    return 4 * linear_params(channels, channels) + table


def ffn_params(channels: int, ratio: int) -> int:
    hidden = ratio * channels
    return norm_params(channels) + linear_params(channels, hidden) + linear_params(hidden, channels)


def window_block_macs(height: int, width: int, channels: int, window: int, mlp_ratio: int = 4) -> int:
    """MACs of one windowed pre-norm block: (4 + 2r) HWC^2 + 2 M^2 HWC.

    4 HWC^2 for the query, key, value and output projections, 2 r HWC^2 for the
    FFN and 2 M^2 HWC for the logits and the weighted sum inside windows.
    """
    tokens = height * width
    return (4 + 2 * mlp_ratio) * tokens * channels**2 + 2 * window * window * tokens * channels


def _window_block_elementwise(
    tokens: int, channels: int, window_tokens: int, heads: int, mlp_ratio: int
) -> int:
    norms = 2 * tokens * channels
    residuals = 2 * tokens * channels
    return norms + residuals + mlp_ratio * tokens * channels + tokens * window_tokens * heads


def _cross_attention_cost(queries: int, keys: int, channels: int, heads: int) -> tuple[int, int]:
    macs = 2 * queries * channels**2 + 2 * keys * channels**2 + 2 * queries * keys * channels
    return macs, queries * keys * heads


def graft_records(
    prefix: str,
    config: GraftConfig,
    height: int,
    width: int,
    channels: int,
    heads: int,
    ffn_ratio: Optional[int] = None,
) -> list[BlockCost]:
    """One record per downsampling step, level attention, upsampling step and FFN."""
    extents = config.validate_for(height, width)
    rh, rw, m, c = config.ratio_h, config.ratio_w, config.window, channels
    records: list[BlockCost] = []

    for b in range(config.scales):
        (h, w), (oh, ow) = extents[b], extents[b + 1]
        fine, coarse = h * w, oh * ow
        if config.down == "avgpool":
            params, macs, elementwise = norm_params(c), 0, 3 * fine * c
        elif config.down == "linear_proj":
            params = linear_params(rh * rw * c, c)
            macs, elementwise = coarse * rh * rw * c * c, 0
        else:
            params = attention_params(c, heads)
            macs, softmax = _cross_attention_cost(coarse, fine, c, heads)
            elementwise = fine * c + softmax
        records.append(
            BlockCost(
                name=f"{prefix}.down.{b}",
                group="graft",
                params=params,
                macs=macs,
                elementwise=elementwise,
                resolution=f"{h}x{w}->{oh}x{ow}",
            )
        )

    for b in range(1, config.scales + 1):
        h, w = extents[b]
        tokens = h * w
        merge_add = tokens * c if b < config.scales else 0
        records.append(
            BlockCost(
                name=f"{prefix}.level.{b}",
                group="graft",
                params=norm_params(c) + attention_params(c, heads, m),
                macs=4 * tokens * c * c + 2 * m * m * tokens * c,
                elementwise=2 * tokens * c + tokens * m * m * heads + merge_add,
                resolution=f"{h}x{w}",
            )
        )

    for b in range(config.scales):
        (h, w), (ch, cw) = extents[b], extents[b + 1]
        fine, coarse = h * w, ch * cw
        fusion = fine * c if b == 0 else 0
        if config.up == "wbilinear":
            params = norm_params(c) + linear_params(c, c) + coarse * c
            macs = coarse * c * c
            elementwise = 4 * coarse * c + fine * c
        elif config.up == "nearest":
            params, macs, elementwise = 0, 0, fine * c
        else:
            params = attention_params(c, heads)
            macs, elementwise = _cross_attention_cost(fine, coarse, c, heads)
        records.append(
            BlockCost(
                name=f"{prefix}.up.{b}",
                group="graft",
                params=params,
                macs=macs,
                elementwise=elementwise + fusion,
                resolution=f"{ch}x{cw}->{h}x{w}",
            )
        )

    if ffn_ratio is not None:
        tokens = height * width
        records.append(
            BlockCost(
                name=f"{prefix}.ffn",
                group="graft",
                params=ffn_params(c, ffn_ratio),
                macs=2 * ffn_ratio * tokens * c * c,
                elementwise=tokens * c * (3 + ffn_ratio),
                resolution=f"{height}x{width}",
            )
        )
    return records


def _build_report(spec: BackboneSpec) -> CostReport:
    g, c0 = spec.grid, spec.channels[0]
    patch_dim = spec.patch_size**2 * spec.in_channels
    homogeneous = spec.kind == "homogeneous"
    records = [
        BlockCost(
            name="patch_embed",
            group="backbone",
            params=linear_params(patch_dim, c0) + (g * g * c0 if homogeneous else 0),
            macs=g * g * patch_dim * c0,
            elementwise=g * g * c0 if homogeneous else 0,
            resolution=f"{g}x{g}",
        )
    ]

    for s in range(spec.num_stages):
        c, heads = spec.channels[s], spec.heads[s]
        res, window = spec.stage_resolution(s), spec.stage_window(s)
        tokens = res * res
        if s > 0:
            prev = spec.channels[s - 1]
            records.append(
                BlockCost(
                    name=f"stages.{s}.merge",
                    group="backbone",
                    params=norm_params(4 * prev) + linear_params(4 * prev, c),
                    macs=tokens * 4 * prev * c,
                    elementwise=tokens * 4 * prev,
                    resolution=f"{2 * res}x{2 * res}->{res}x{res}",
                )
            )
        for d in range(spec.depths[s]):
            bias_window = window if spec.uses_relative_bias else None
            records.append(
                BlockCost(
                    name=f"stages.{s}.blocks.{d}",
                    group="backbone",
                    params=norm_params(c)
                    + attention_params(c, heads, bias_window)
                    + ffn_params(c, spec.mlp_ratio),
                    macs=window_block_macs(res, res, c, window, spec.mlp_ratio),
                    elementwise=_window_block_elementwise(
                        tokens, c, window * window, heads, spec.mlp_ratio
                    ),
                    resolution=f"{res}x{res}",
                )
            )
            config = spec.graft_at(s, d)
            if config is not None:
                records.extend(
                    graft_records(
                        f"grafts.{s}.{d}",
                        config,
                        res,
                        res,
                        c,
                        heads,
                        spec.mlp_ratio if spec.ffn_mode == "separate" else None,
                    )
                )

    last = spec.num_stages - 1
    res, c = spec.stage_resolution(last), spec.channels[last]
    records.append(
        BlockCost(
            name="head",
            group="head",
            params=norm_params(c) + linear_params(c, spec.num_classes),
            macs=c * spec.num_classes,
            elementwise=2 * res * res * c,
            resolution=f"{res}x{res}",
        )
    )
    return CostReport(records=records)


def count_params(spec: BackboneSpec) -> CostReport:
    """Per-block parameter counts (the report also carries the MAC columns)."""
    report = _build_report(spec)
    logger.debug("params_counted", blocks=len(report.records), params=report.params)
    return report


def count_flops(spec: BackboneSpec) -> CostReport:
    """Per-block MAC and elementwise counts (the report also carries parameters)."""
    report = _build_report(spec)
    logger.debug("flops_counted", blocks=len(report.records), macs=report.macs)
    return report


def body_ops(report: CostReport) -> int:
    """Total operations of the backbone and graft groups; the head is excluded."""
    return sum(r.total_ops for r in report.records if r.group != "head")


def verify_complexity_claim(
    spec: BackboneSpec,
    resolutions: Iterable[int] = DEFAULT_RESOLUTIONS,
    bound: float = COMPLEXITY_BOUND,
) -> ComplexityReport:
    """Grafted / plain operation ratio of ``spec`` rescaled to each token-grid side.

    Graft configurations and windows stay fixed while the resolution grows.
    The report only measures; callers decide what to assert.
    """
    points = []
    for resolution in resolutions:
        grafted = spec.scaled_to(resolution)
        plain = grafted.without_grafts()
        points.append(
            ComplexityPoint(
                resolution=resolution,
                grafted_ops=body_ops(count_flops(grafted)),
                plain_ops=body_ops(count_flops(plain)),
            )
        )
    report = ComplexityReport(points=points, bound=bound)
    logger.info(
        "complexity_verified",
        ratios=[round(r, 6) for r in report.ratios],
        limiting_ratio=report.limiting_ratio,
        bounded=report.bounded,
    )
    return report


def cost_report_rows(report: CostReport) -> list[dict[str, object]]:
    """Flat rows (one per record plus one total per group) for tabulation."""
    rows: list[dict[str, object]] = [
        {
            "name": r.name,
            "group": r.group,
            "resolution": r.resolution,
            "params": r.params,
            "macs": r.macs,
            "elementwise": r.elementwise,
        }
        for r in report.records
    ]
    for group, totals in report.group_totals().items():
        rows.append({"name": f"total.{group}", "group": group, "resolution": "", **totals})
    rows.append(
        {
            "name": "total",
            "group": "",
            "resolution": "",
            "params": report.params,
            "macs": report.macs,
            "elementwise": sum(r.elementwise for r in report.records),
        }
    )
    return rows
