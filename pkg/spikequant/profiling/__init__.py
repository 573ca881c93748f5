#!/usr/bin/env python3

from .detection import detect_llmint8, detect_llmint8_report, detect_order_of_magnitude, detect_sigma, detect_threshold
from .report import (
    CURVE_HEADER,
    DEFINITIONS,
    REPORT_SCHEMA_VERSION,
    SpikeReport,
    collect_stats,
    curves_to_csv,
    export_curves,
    load_report,
    save_report,
    write_curves,
)
from .stats import SiteStats, StatsCollector

__all__ = [
    "CURVE_HEADER",
    "DEFINITIONS",
    "REPORT_SCHEMA_VERSION",
    "SiteStats",
    "SpikeReport",
    "StatsCollector",
    "collect_stats",
    "curves_to_csv",
    "detect_llmint8",
    "detect_llmint8_report",
    "detect_order_of_magnitude",
    "detect_sigma",
    "detect_threshold",
    "export_curves",
    "load_report",
    "save_report",
    "write_curves",
]
