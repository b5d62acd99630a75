"""Logging utilities."""

from src.utils.logger import LoggerMixin, bind_run_context, get_logger, init_logger

__all__ = ["LoggerMixin", "bind_run_context", "get_logger", "init_logger"]
