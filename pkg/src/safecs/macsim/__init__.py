from .audit import (
    SimMetrics,
    collision_audit,
    compute_metrics,
    concurrent_intervals,
    format_event_log,
    format_metrics_records,
    parse_event_log,
    run_simulation,
)
from .config import DOT11B_LONG_PREAMBLE, MacTiming, SimConfig, paper_setup
from .engine import SimResult, simulate

__all__ = [
    "DOT11B_LONG_PREAMBLE",
    "MacTiming",
    "SimConfig",
    "SimMetrics",
    "SimResult",
    "collision_audit",
    "compute_metrics",
    "concurrent_intervals",
    "format_event_log",
    "format_metrics_records",
    "paper_setup",
    "parse_event_log",
    "run_simulation",
    "simulate",
]
