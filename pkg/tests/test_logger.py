"""Tests for logging utilities."""

import json
import logging

import structlog

from src.utils.logger import LoggerMixin, bind_run_context, get_logger, init_logger


class TestLogger:
    """Tests for logger setup and usage."""

    def test_get_logger_binds_module(self, capsys):
        """Events carry the module name."""
        init_logger(level="INFO", json_format=True)
        get_logger("dataset").info("dataset_generated", seed=3)

        event = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert event["module"] == "dataset"
        assert event["event"] == "dataset_generated"
        assert event["seed"] == 3

    def test_logs_go_to_stderr(self, capsys):
        """stdout stays free for report tables."""
        init_logger(level="INFO", json_format=False)
        get_logger("cli").info("hello")

        captured = capsys.readouterr()
        assert captured.out == ""
        assert "hello" in captured.err

    def test_level_filters(self, capsys):
        """Events below the configured level are dropped."""
        init_logger(level="WARNING", json_format=True)
        get_logger("suites").info("suite_finished")

        assert capsys.readouterr().err == ""

    def test_no_file_handlers(self):
        """Setup writes to stderr only; the stdlib root gets no file handler."""
        init_logger(level="DEBUG", json_format=True)

        assert not any(isinstance(h, logging.FileHandler) for h in logging.getLogger().handlers)


class TestRunContext:
    """Tests for run-wide context binding."""

    def test_context_attached(self, capsys):
        """Seed and precision appear on every later event."""
        init_logger(level="INFO", json_format=True)
        bind_run_context(seed=4, precision="verify64")
        try:
            get_logger("trainer").info("train_started")
        finally:
            structlog.contextvars.clear_contextvars()

        event = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert event["seed"] == 4
        assert event["precision"] == "verify64"

    def test_rebinding_replaces_context(self, capsys):
        """A new run context drops the previous one."""
        init_logger(level="INFO", json_format=True)
        bind_run_context(seed=1, config="a.conf")
        bind_run_context(seed=2)
        try:
            get_logger().info("event")
        finally:
            structlog.contextvars.clear_contextvars()

        event = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert event["seed"] == 2
        assert "config" not in event


class TestLoggerMixin:
    """Tests for LoggerMixin class."""

    def test_mixin_binds_class_name(self, capsys):
        """The mixin logger is bound to the class name."""

        class Sampler(LoggerMixin):
            def run(self):
                self.log.info("sampling")
                return True

        init_logger(level="INFO", json_format=True)

        assert Sampler().run() is True
        event = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert event["module"] == "Sampler"
