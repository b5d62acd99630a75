"""Render cost reports, complexity reports and suite results."""

import csv
import io
import json
from typing import Literal

from jinja2 import Environment

from src.cost.counter import cost_report_rows
from src.models.cost import ComplexityReport, CostReport
from src.models.report import SuiteReport

OutputFormat = Literal["text", "csv", "json"]

COST_COLUMNS = ["name", "group", "resolution", "params", "macs", "elementwise"]
SUITE_COLUMNS = ["name", "passed", "value", "threshold", "detail"]


class ReportFormatter:
    """Formats report records as aligned text, CSV or JSON."""

    DIVIDER = "-" * 88

    COST_TEMPLATE = """{{ "%-34s %-8s %-14s %12s %16s %14s"|format("block", "group", "resolution", "params", "macs", "elementwise") }}
{{ divider }}
{% for row in records %}{{ "%-34s %-8s %-14s %12d %16d %14d"|format(row.name, row.group, row.resolution, row.params, row.macs, row.elementwise) }}
{% endfor %}{{ divider }}
{% for row in totals %}{{ "%-34s %-8s %-14s %12d %16d %14d"|format(row.name, row.group, row.resolution, row.params, row.macs, row.elementwise) }}
{% endfor %}"""

    COMPLEXITY_TEMPLATE = """{{ "%10s %18s %18s %10s"|format("grid", "grafted_ops", "plain_ops", "ratio") }}
{% for point in points %}{{ "%10d %18d %18d %10.6f"|format(point.resolution, point.grafted_ops, point.plain_ops, point.ratio) }}
{% endfor %}limiting ratio {{ "%.6f"|format(limiting) }} (bound {{ bound }}): {{ "bounded" if bounded else "EXCEEDED" }}, {{ "non-increasing" if non_increasing else "INCREASING" }}
"""

    SUITE_TEMPLATE = """suite {{ suite }}: {{ "PASS" if passed else "FAIL" }} ({{ checks|length - failures }}/{{ checks|length }} checks, {{ "%.2f"|format(duration) }}s)
{{ divider }}
{% for check in checks %}{{ "PASS" if check.passed else "FAIL" }}  {{ "%-52s"|format(check.name) }} {% if check.value is not none %}{{ "%.3e"|format(check.value) }}{% endif %}{% if check.threshold is not none %} <= {{ "%.3e"|format(check.threshold) }}{% endif %}{% if check.detail %}  [{{ check.detail }}]{% endif %}
{% endfor %}"""

    def __init__(self):
        self.env = Environment(trim_blocks=False, lstrip_blocks=False, keep_trailing_newline=True)

    def _render(self, template: str, **context) -> str:
        return self.env.from_string(template).render(divider=self.DIVIDER, **context)

    @staticmethod
    def _csv(columns: list[str], rows: list[dict]) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
        return buffer.getvalue()

    def format_cost(self, report: CostReport, fmt: OutputFormat = "text") -> str:
        rows = cost_report_rows(report)
        if fmt == "csv":
            return self._csv(COST_COLUMNS, rows)
        if fmt == "json":
            return json.dumps({"records": rows}, indent=2) + "\n"
        records = [r for r in rows if not str(r["name"]).startswith("total")]
        totals = rows[len(records) :]
        return self._render(self.COST_TEMPLATE, records=records, totals=totals)

    def format_complexity(self, report: ComplexityReport, fmt: OutputFormat = "text") -> str:
        if fmt == "csv":
            rows = [
                {"resolution": p.resolution, "grafted_ops": p.grafted_ops, "plain_ops": p.plain_ops, "ratio": repr(p.ratio)}
                for p in report.points
            ]
            return self._csv(["resolution", "grafted_ops", "plain_ops", "ratio"], rows)
        if fmt == "json":
            payload = report.model_dump()
            payload.update(ratios=report.ratios, bounded=report.bounded, non_increasing=report.non_increasing)
            return json.dumps(payload, indent=2) + "\n"
        return self._render(
            self.COMPLEXITY_TEMPLATE,
            points=report.points,
            limiting=report.limiting_ratio,
            bound=report.bound,
            bounded=report.bounded,
            non_increasing=report.non_increasing,
        )

    def format_suite(self, report: SuiteReport, fmt: OutputFormat = "text") -> str:
        if fmt == "csv":
            return self._csv(SUITE_COLUMNS, [c.model_dump() for c in report.checks])
        if fmt == "json":
            payload = report.model_dump()
            payload["passed"] = report.passed
            return json.dumps(payload, indent=2) + "\n"
        return self._render(
            self.SUITE_TEMPLATE,
            suite=report.suite,
            passed=report.passed,
            checks=report.checks,
            failures=len(report.failures),
            duration=report.duration_s,
        )
