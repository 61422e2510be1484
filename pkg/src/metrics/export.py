"""
Deterministic CSV reports

Every report has a fixed column set, rows in a fixed order and fixed-point
number formatting, so identical runs produce byte-identical files. Files are
written to a temporary name and renamed, so a failed export leaves no partial
file behind.
"""
import csv
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from src.metrics.ledger import DataflowLedger
from src.metrics.metric_set import MetricSet
from src.utils.error_handler import ExportError
from src.utils.logger import get_logger

logger = get_logger(__name__)

FLOW_COLUMNS = ("flow_id", "src", "dst", "sent", "delivered", "dropped_switch", "dropped_host")
LATENCY_COLUMNS = ("flow_id", "bin_start_ns", "count")
SERIES_COLUMNS = ("flow_id", "window_start_ns", "bytes")
EVENT_COLUMNS = ("event_id", "state", "t_lvl1", "t_decision", "t_built", "t_cleared")
COUNTER_COLUMNS = ("name", "value")
PROBE_COLUMNS = ("pattern", "mode", "count", "flooded", "learned_count", "table_entries")


def format_value(value) -> str:
    """Fixed-point text: integers as is, floats with 6 decimals, None as empty"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """
    Atomically write one report

    Raises:
        ExportError: If the directory or file cannot be written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    except OSError as e:
        raise ExportError(f"Cannot write {path}: {e}", path=str(path), original_error=e) from e
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
        os.replace(tmp, path)
    except OSError as e:
        Path(tmp).unlink(missing_ok=True)
        raise ExportError(f"Cannot write {path}: {e}", path=str(path), original_error=e) from e
    return path


def flow_rows(metrics: MetricSet) -> List[tuple]:
    return [
        (s.flow_id, s.src, s.dst, s.sent, s.delivered, s.dropped_switch, s.dropped_host)
        for s in sorted(metrics.flows.values(), key=lambda s: s.flow_id)
    ]


def latency_rows(metrics: MetricSet) -> List[tuple]:
    rows = []
    for flow_id in sorted(metrics.histograms):
        rows.extend((flow_id, start, n) for start, n in metrics.histograms[flow_id].bins())
    return rows


def series_rows(metrics: MetricSet) -> List[tuple]:
    rows = []
    for flow_id in sorted(metrics.flows):
        rows.extend((flow_id, start, n) for start, n in metrics.series(flow_id))
    return rows


def export_csv(
    metrics: MetricSet,
    out_dir: Path,
    ledger: Optional[DataflowLedger] = None,
    counters: Optional[Dict[str, int]] = None,
) -> Dict[str, Path]:
    """
    Write flows, latency, series, events and counters reports

    Args:
        metrics: Closed MetricSet of a finished run
        out_dir: Output directory (created if missing)
        ledger: Event ledger; events.csv is header-only without one
        counters: Extra named counters merged with metrics.counters

    Returns:
        Report name -> written path
    """
    out_dir = Path(out_dir)
    merged = {k: int(v) for k, v in metrics.counters.items()}
    merged.update(counters or {})
    written = {
        "flows": write_csv(out_dir / "flows.csv", FLOW_COLUMNS, flow_rows(metrics)),
        "latency": write_csv(out_dir / "latency.csv", LATENCY_COLUMNS, latency_rows(metrics)),
        "series": write_csv(out_dir / "series.csv", SERIES_COLUMNS, series_rows(metrics)),
        "events": write_csv(out_dir / "events.csv", EVENT_COLUMNS, ledger.rows() if ledger else []),
        "counters": write_csv(out_dir / "counters.csv", COUNTER_COLUMNS, sorted(merged.items())),
    }
    logger.debug(f"Wrote reports to {out_dir}", extra_fields={"reports": sorted(written)})
    return written
