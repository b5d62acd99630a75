"""Structured logging configuration using structlog."""

import logging
import sys
from typing import Any, Optional

import structlog
from structlog.types import Processor


def _stderr_logger(*args: Any) -> structlog.PrintLogger:
    # sys.stderr is looked up per logger so redirected streams are honoured
    return structlog.PrintLogger(file=sys.stderr)


def setup_logging(
    level: str = "INFO",
    json_format: bool = False,
) -> structlog.BoundLogger:
    """Configure structured logging for the library and the CLI.

    Logs go to stderr so that report tables printed on stdout stay parseable.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR)
        json_format: If True, render one JSON object per event

    Returns:
        Configured logger instance
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    shared_processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.UnicodeDecoder(),
    ]

    if json_format:
        processors: list[Processor] = [
            *shared_processors,
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(sort_keys=True),
        ]
    else:
        processors = [
            *shared_processors,
            structlog.dev.ConsoleRenderer(
                colors=sys.stderr.isatty(),
                exception_formatter=structlog.dev.plain_traceback,
            ),
        ]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        context_class=dict,
        logger_factory=_stderr_logger,
        cache_logger_on_first_use=False,
    )

    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=numeric_level)

    return structlog.get_logger()


# Global logger instance
_logger: Optional[structlog.BoundLogger] = None


def get_logger(name: Optional[str] = None) -> structlog.BoundLogger:
    """Get a logger, optionally bound to a module name.

    Args:
        name: Optional logger name (typically module name)

    Returns:
        Bound logger instance
    """
    global _logger
    if _logger is None:
        _logger = setup_logging()

    if name:
        # Lazy proxy: resolves the current structlog config on every call
        return structlog.get_logger(module=name)
    return _logger


def init_logger(
    level: str = "INFO",
    json_format: bool = False,
) -> structlog.BoundLogger:
    """Initialize the global logger with custom settings.

    Args:
        level: Log level
        json_format: Use JSON rendering

    Returns:
        Configured logger instance
    """
    global _logger
    _logger = setup_logging(level, json_format)
    return _logger


def bind_run_context(**values: Any) -> None:
    """Attach run-wide context (seed, precision, config path) to every later event."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(**values)


class LoggerMixin:
    """Mixin class to add logging capability to any class."""

    @property
    def log(self) -> structlog.BoundLogger:
        """Get logger bound with class name."""
        return get_logger(self.__class__.__name__)
