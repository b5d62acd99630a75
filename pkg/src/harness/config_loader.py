"""Run config files: flat ``key = value`` text validated into a RunConfig.

Example::

    # toy homogeneous model
    seed = 0
    model.kind = homogeneous
    model.channels = 32
    graft_policy = all
    graft.0.1 = B:1,M:4,down:avgpool,up:wbilinear

Lines are UTF-8, ``#`` starts a comment, list values are comma separated.
Graft sites are 0-based ``graft.<stage>.<depth>``.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Any, Union

from pydantic import ValidationError

from src.errors import ConfigParseError, ConfigValidationError, ConfigurationError
from src.models.run import RunConfig
from src.models.spec import BackboneSpec, GraftConfig, GraftSite
from src.nn.backbone import default_graft_policy, default_window
from src.nn.graft import max_scales
from src.utils.logger import get_logger

logger = get_logger("config_loader")

TOP_LEVEL_KEYS = {
    "seed",
    "precision",
    "output_dir",
    "eval_interval",
    "grad_seeds",
    "oracle_instances",
    "graft_policy",
    "graft_scales",
    "graft_down",
    "graft_up",
}
MODEL_KEYS = {
    "kind",
    "image_size",
    "patch_size",
    "in_channels",
    "depths",
    "channels",
    "heads",
    "window",
    "num_classes",
    "mlp_ratio",
    "ffn_mode",
    "relative_bias",
    "shift_windows",
}
LIST_KEYS = {"depths", "channels", "heads"}
TASK_KEYS = {"num_classes", "train_size", "test_size", "noise", "signal"}
OPTIMIZER_KEYS = {
    "kind",
    "lr",
    "steps",
    "batch_size",
    "weight_decay",
    "beta1",
    "beta2",
    "eps",
    "momentum",
}
SECTIONS = {"model": MODEL_KEYS, "task": TASK_KEYS, "optimizer": OPTIMIZER_KEYS}

MODEL_DEFAULTS = {
    "homogeneous": {"depths": ["2"], "channels": ["32"], "heads": ["2"]},
    "pyramid": {"depths": ["2", "2", "2"], "channels": ["32", "64", "128"], "heads": ["2", "4", "8"]},
}

GRAFT_SITE = re.compile(r"^graft\.(\d+)\.(\d+)$")
SITE_FIELDS = {"b": "scales", "m": "window", "down": "down", "up": "up", "rh": "ratio_h", "rw": "ratio_w"}
POLICY = re.compile(r"^(all|none|explicit|first_k:(\d+))$")
RUN_KEYS = ("seed", "precision", "output_dir", "eval_interval", "grad_seeds", "oracle_instances")


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse config text into nested string values.

    Returns a dict with ``top``, ``model``, ``task``, ``optimizer`` sections and
    ``sites``, a mapping (stage, depth) -> (line, raw value).

    Raises:
        ConfigParseError: On malformed lines, unknown or duplicate keys
    """
    parsed: dict[str, Any] = {"top": {}, "model": {}, "task": {}, "optimizer": {}, "sites": {}}
    seen: dict[str, int] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigParseError(f"empty key or value in {raw.strip()!r}", number)
        if key in seen:
            raise ConfigParseError(f"duplicate key {key!r} (first set on line {seen[key]})", number)
        seen[key] = number

        site = GRAFT_SITE.match(key)
        if site:
            parsed["sites"][(int(site.group(1)), int(site.group(2)))] = (number, value)
            continue
        if key in TOP_LEVEL_KEYS:
            parsed["top"][key] = value
            continue
        section, _, name = key.partition(".")
        if section not in SECTIONS or name not in SECTIONS[section]:
            raise ConfigParseError(f"unknown key {key!r}", number)
        if section == "model" and name in LIST_KEYS:
            items = [item.strip() for item in value.split(",")]
            if any(not item for item in items):
                raise ConfigParseError(f"empty entry in list {key!r}", number)
            parsed[section][name] = items
        else:
            parsed[section][name] = value
    return parsed


def _parse_site(value: str, line: int) -> dict[str, str]:
    fields: dict[str, str] = {}
    for part in value.split(","):
        name, sep, setting = part.partition(":")
        name = name.strip().lower()
        if not sep or name not in SITE_FIELDS or not setting.strip():
            raise ConfigParseError(
                f"bad graft entry {part.strip()!r}; expected B:<n>,M:<m>,down:<kind>,up:<kind>",
                line,
            )
        fields[SITE_FIELDS[name]] = setting.strip()
    return fields


def _site_config(
    spec: BackboneSpec, stage: int, fields: dict[str, str], defaults: dict[str, str]
) -> GraftConfig:
    """Fill unset graft fields: M = min(stage window, res / 2), B = largest allowed (<= 3)."""
    if stage >= spec.num_stages:
        raise ConfigurationError(f"graft stage {stage} does not exist in depths {spec.depths}")
    res = spec.stage_resolution(stage)
    merged = {**defaults, **fields}
    window = int(merged.get("window", max(1, min(spec.stage_window(stage), res // 2))))
    if "scales" not in merged:
        ratio = int(merged.get("ratio_h", 2))
        merged["scales"] = str(max(1, max_scales(res, window, ratio, limit=3)))
    merged["window"] = str(window)
    return GraftConfig.model_validate(merged)


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error["loc"])
        message = error["msg"].removeprefix("Value error, ")
        parts.append(f"{location}: {message}" if location else message)
    return "; ".join(parts)


def build_run_config(parsed: dict[str, Any]) -> RunConfig:
    """Validate parsed sections into a RunConfig, applying defaults and the graft policy.

    Raises:
        ConfigParseError: On malformed graft entries or policies
        ConfigValidationError: Naming the violated rule
    """
    top, sites = parsed["top"], parsed["sites"]
    policy = top.get("graft_policy", "all")
    match = POLICY.match(policy)
    if not match:
        raise ConfigParseError(f"unknown graft_policy {policy!r}; expected all|none|first_k:<k>|explicit")
    if policy == "none" and sites:
        raise ConfigValidationError("graft_policy = none but graft.<stage>.<depth> entries are set")

    site_fields = {key: (line, _parse_site(value, line)) for key, (line, value) in sites.items()}
    defaults = {
        field: top[key]
        for key, field in (("graft_down", "down"), ("graft_up", "up"))
        if key in top
    }

    try:
        task = dict(parsed["task"])
        model = dict(parsed["model"])
        kind = model.setdefault("kind", "homogeneous")
        for name, default in MODEL_DEFAULTS.get(kind, {}).items():
            model.setdefault(name, default)
        model.setdefault("num_classes", task.get("num_classes", "4"))
        if "window" not in model:
            image = int(model.get("image_size", 32))
            patch = int(model.get("patch_size", 4))
            model["window"] = str(default_window(max(1, image // patch)))
        spec = BackboneSpec.model_validate(model)

        grafts: dict[tuple[int, int], GraftSite] = {}
        if policy == "all" or match.group(2) is not None:
            limit = int(match.group(2)) if match.group(2) is not None else None
            scales = int(top["graft_scales"]) if "graft_scales" in top else None
            for site in default_graft_policy(
                spec,
                scales=scales,
                down=defaults.get("down", "avgpool"),
                up=defaults.get("up", "wbilinear"),
                limit=limit,
            ):
                grafts[(site.stage, site.depth)] = site
        for (stage, depth), (_, fields) in site_fields.items():
            config = _site_config(spec, stage, fields, defaults)
            grafts[(stage, depth)] = GraftSite(stage=stage, depth=depth, config=config)
        spec = spec.with_grafts(sorted(grafts.values(), key=lambda s: (s.stage, s.depth)))

        run = {key: top[key] for key in RUN_KEYS if key in top}
        return RunConfig.model_validate(
            {**run, "spec": spec, "task": task, "optimizer": dict(parsed["optimizer"])}
        )
    except ValidationError as exc:
        raise ConfigValidationError(_describe(exc)) from exc
    except (ConfigurationError, ValueError) as exc:
        raise ConfigValidationError(str(exc)) from exc


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read, parse and validate a run config file.

    Args:
        path: Config file path

    Raises:
        ConfigParseError: If the file is unreadable or malformed
        ConfigValidationError: If the values violate a model rule
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    config = build_run_config(parse_config_text(text))
    logger.info(
        "config_loaded",
        path=str(path),
        kind=config.spec.kind,
        grafts=len(config.spec.grafts),
        precision=config.precision,
    )
    return config
