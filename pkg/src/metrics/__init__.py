"""
Measurements and report export
"""
from src.metrics.export import export_csv, write_csv
from src.metrics.histogram import LatencyHistogram
from src.metrics.ledger import DataflowLedger, EventRecord, EventState
from src.metrics.metric_set import FlowStats, MetricSet

__all__ = [
    "export_csv", "write_csv", "LatencyHistogram", "DataflowLedger", "EventRecord",
    "EventState", "FlowStats", "MetricSet",
]
