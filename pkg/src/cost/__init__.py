"""Parameter and MAC accounting."""

from src.cost.counter import (
    count_flops,
    count_params,
    cost_report_rows,
    verify_complexity_claim,
    window_block_macs,
)

__all__ = [
    "count_flops",
    "count_params",
    "cost_report_rows",
    "verify_complexity_claim",
    "window_block_macs",
]
