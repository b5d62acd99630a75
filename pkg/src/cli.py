"""Command-line entry point: train, check, cost and dataset verbs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from src.config import Settings, resolve_seed
from src.cost import count_flops, verify_complexity_claim
from src.cost.counter import DEFAULT_RESOLUTIONS
from src.errors import (
    ConfigParseError,
    ConfigurationError,
    ConfigValidationError,
    GraftError,
    UnknownSuiteError,
    UsageError,
)
from src.formatters import ReportFormatter
from src.harness import emit_dataset, generate_dataset, load_config, oracle_accuracy, run_suite
from src.harness.suites import SUITES
from src.harness.trainer import Trainer, loss_reduction, paired_train, trend_summary
from src.models.run import RunConfig
from src.utils.logger import bind_run_context, get_logger, init_logger

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3

CONFIG_ERRORS = (
    ConfigParseError,
    ConfigValidationError,
    ConfigurationError,
    UnknownSuiteError,
    UsageError,
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="graft-toy", description="Grafted multi-scale pyramids for toy vision transformers"
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-json", action="store_true", help="Render log events as JSON")
    verbs = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    train = verbs.add_parser("train", help="Train the toy model of a config")
    train.add_argument("config", type=Path)
    train.add_argument("--seed", type=int, default=None, help="Overrides GRAFT_SEED and the config")
    train.add_argument(
        "--paired", action="store_true", help="Also train without grafts and pair the traces"
    )
    train.add_argument("--seeds", type=int, default=1, help="Consecutive seeds for a paired run")
    train.add_argument("--output", type=Path, default=None, help="Output directory")

    check = verbs.add_parser("check", help="Run a verification suite")
    check.add_argument("suite", help=f"One of: {', '.join(SUITES)}")
    check.add_argument("config", type=Path)
    check.add_argument("--seed", type=int, default=None)
    check.add_argument("--format", choices=["text", "csv", "json"], default="text")

    cost = verbs.add_parser("cost", help="Per-block parameter and FLOP accounting")
    cost.add_argument("config", type=Path)
    cost.add_argument("--format", choices=["text", "csv", "json"], default="text")
    cost.add_argument(
        "--resolutions",
        type=lambda text: [int(v) for v in text.split(",") if v.strip()],
        default=list(DEFAULT_RESOLUTIONS),
        help="Comma-separated token-grid sides for the complexity table",
    )

    dataset = verbs.add_parser("dataset", help="Write the synthetic train/test split")
    dataset.add_argument("config", type=Path)
    dataset.add_argument("--emit", type=Path, required=True, help="Target directory")
    dataset.add_argument("--seed", type=int, default=None)
    return parser


def _load(path: Path, cli_seed: Optional[int], settings: Settings) -> RunConfig:
    config = load_config(path)
    update = {"seed": resolve_seed(config.seed, cli_seed, settings)}
    if settings.precision is not None:
        update["precision"] = settings.precision
    # Configs without output_dir write under GRAFT_OUTPUT_DIR/<config stem>
    if "output_dir" not in config.model_fields_set:
        update["output_dir"] = str(Path(settings.output_dir) / path.stem)
    config = config.model_copy(update=update)
    bind_run_context(config=str(path), seed=config.seed, precision=config.precision)
    return config


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    config = _load(args.config, args.seed, settings)
    if args.output is not None:
        config = config.model_copy(update={"output_dir": str(args.output)})
    if args.seeds < 1:
        raise UsageError(f"--seeds must be >= 1, got {args.seeds}")

    if args.paired:
        rows = paired_train(config, range(config.seed, config.seed + args.seeds))
        summary = trend_summary(rows)
        print(
            f"seeds={int(summary['seeds'])} grafted_test_acc={summary['grafted_mean']:.4f} "
            f"plain_test_acc={summary['plain_mean']:.4f} gap={summary['gap']:+.4f}"
        )
        print(f"paired metrics: {Path(config.output_dir) / 'paired.csv'}")
        return EXIT_OK

    trainer = Trainer(config)
    rows = trainer.train()
    last = rows[-1]
    print(
        f"step={last.step} loss={last.loss:.6f} train_acc={last.train_acc:.4f} "
        f"test_acc={last.test_acc:.4f} loss_reduction={loss_reduction(rows):.2%}"
    )
    print(f"metrics: {trainer.metrics_path}")
    print(f"checkpoint: {trainer.checkpoint_path}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace, settings: Settings) -> int:
    if args.suite not in SUITES:
        expected = ", ".join(SUITES)
        raise UnknownSuiteError(f"unknown suite {args.suite!r}; expected one of {expected}")
    config = _load(args.config, args.seed, settings)
    report = run_suite(args.suite, config)
    sys.stdout.write(ReportFormatter().format_suite(report, args.format))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_cost(args: argparse.Namespace, settings: Settings) -> int:
    config = _load(args.config, None, settings)
    formatter = ReportFormatter()
    sys.stdout.write(formatter.format_cost(count_flops(config.spec), args.format))
    if args.resolutions:
        complexity = verify_complexity_claim(config.spec, args.resolutions)
        if args.format == "text":
            sys.stdout.write("\n")
        sys.stdout.write(formatter.format_complexity(complexity, args.format))
    return EXIT_OK


def cmd_dataset(args: argparse.Namespace, settings: Settings) -> int:
    config = _load(args.config, args.seed, settings)
    spec = config.spec
    train, test = generate_dataset(config.task, spec.image_size, config.seed, spec.in_channels)
    for path in emit_dataset(train, test, args.emit):
        print(path)
    print(f"oracle accuracy: train={oracle_accuracy(train):.4f} test={oracle_accuracy(test):.4f}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "check": cmd_check,
    "cost": cmd_cost,
    "dataset": cmd_dataset,
}


def _fail(code: int, exc: BaseException) -> int:
    reason = exc.code if isinstance(exc, GraftError) else "runtime_error"
    message = " ".join(str(exc).split()) or exc.__class__.__name__
    print(f"{reason}: {message}", file=sys.stderr)
    return code


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run one verb and return its exit code."""
    try:
        settings = Settings()
        args = build_parser().parse_args(argv)
        init_logger(
            level=args.log_level or settings.log_level,
            json_format=args.log_json or settings.log_format.lower() == "json",
        )
        return COMMANDS[args.verb](args, settings)
    except CONFIG_ERRORS as exc:
        return _fail(EXIT_CONFIG_ERROR, exc)
    except ValidationError as exc:
        return _fail(EXIT_CONFIG_ERROR, ConfigValidationError(str(exc)))
    except GraftError as exc:
        return _fail(EXIT_RUNTIME_ERROR, exc)
    except KeyboardInterrupt:
        print("runtime_error: interrupted", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    except Exception as exc:
        get_logger("cli").debug("command_failed", error=str(exc), exc_info=True)
        return _fail(EXIT_RUNTIME_ERROR, exc)


def main() -> None:
    """Console-script entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
