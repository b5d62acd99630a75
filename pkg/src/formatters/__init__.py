"""Formatters for cost and verification reports."""

from src.formatters.report_formatter import ReportFormatter

__all__ = ["ReportFormatter"]
