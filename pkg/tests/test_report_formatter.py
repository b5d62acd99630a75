"""Tests for text, CSV and JSON rendering of reports."""

import json

from src.cost import count_flops, verify_complexity_claim
from src.formatters import ReportFormatter
from src.models.report import CheckResult, SuiteReport


def _suite_report():
    return SuiteReport(
        suite="invariants",
        checks=[
            CheckResult(name="invariants.window_roundtrip", passed=True),
            CheckResult(name="invariants.locality", passed=False, value=0.5, threshold=0.0),
        ],
        duration_s=0.25,
    )


class TestCostFormat:
    """Tests for the cost table."""

    def test_text_table(self, tiny_config):
        """Records come before the divider, totals after."""
        text = ReportFormatter().format_cost(count_flops(tiny_config.spec))
        lines = text.splitlines()

        assert lines[0].split()[:3] == ["block", "group", "resolution"]
        dividers = [i for i, line in enumerate(lines) if set(line) == {"-"}]
        assert len(dividers) == 2
        assert lines[dividers[1] + 1].startswith("total")
        assert lines[-1].startswith("total ")
        assert any(line.startswith("grafts.0.1.level.1") for line in lines)

    def test_csv(self, tiny_config):
        """CSV has one row per record plus totals."""
        text = ReportFormatter().format_cost(count_flops(tiny_config.spec), "csv")

        assert text.splitlines()[0].startswith("name,")
        assert text.splitlines()[-1].startswith("total,")

    def test_json(self, tiny_config):
        """JSON wraps the rows under 'records'."""
        report = count_flops(tiny_config.spec)
        payload = json.loads(ReportFormatter().format_cost(report, "json"))

        assert payload["records"][-1]["macs"] == report.macs


class TestComplexityFormat:
    """Tests for the complexity table."""

    def test_text_verdict(self, tiny_config):
        """The last line states the limiting ratio and both verdicts."""
        report = verify_complexity_claim(tiny_config.spec, (4, 8))
        text = ReportFormatter().format_complexity(report)

        assert "bounded" in text.splitlines()[-1]
        assert "non-increasing" in text.splitlines()[-1]

    def test_json(self, tiny_config):
        """JSON carries the ratios and verdicts."""
        report = verify_complexity_claim(tiny_config.spec, (4, 8))
        payload = json.loads(ReportFormatter().format_complexity(report, "json"))

        assert payload["ratios"] == report.ratios
        assert payload["bounded"] is True


class TestSuiteFormat:
    """Tests for suite reports."""

    def test_text(self):
        """The header counts passes and each check gets a PASS/FAIL line."""
        text = ReportFormatter().format_suite(_suite_report())

        assert text.startswith("suite invariants: FAIL (1/2 checks, 0.25s)")
        assert "PASS  invariants.window_roundtrip" in text
        assert "FAIL  invariants.locality" in text
        assert "5.000e-01 <= 0.000e+00" in text

    def test_csv(self):
        """One CSV row per check."""
        text = ReportFormatter().format_suite(_suite_report(), "csv")

        assert len(text.splitlines()) == 3

    def test_json(self):
        """JSON includes the overall verdict."""
        payload = json.loads(ReportFormatter().format_suite(_suite_report(), "json"))

        assert payload["passed"] is False
        assert len(payload["checks"]) == 2
