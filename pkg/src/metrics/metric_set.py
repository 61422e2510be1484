"""
Run-wide measurements: per-flow counters, latency histograms, throughput series
and named counters
"""
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from src.ether.frame import FRAMING_OVERHEAD_BYTES, Frame
from src.metrics.histogram import DEFAULT_BIN_NS, LatencyHistogram
from src.sim_core.engine import US, SimTime
from src.utils.error_handler import ConfigurationError

DEFAULT_WINDOW_NS = 100 * US


@dataclass
class FlowStats:
    """Counters of one measured flow (flow_id > 0)"""
    flow_id: int
    src: str = ""
    dst: str = ""
    sent: int = 0
    delivered: int = 0
    dropped_switch: int = 0
    dropped_host: int = 0
    bytes_delivered: int = 0
    reorders: int = 0
    # delivered after warm-up, counted on the wire (frame + preamble + gap)
    window_wire_bytes: int = 0
    max_seq: int = -1
    # multicast flows are delivered once per receiver
    multicast: bool = False

    @property
    def dropped(self) -> int:
        return self.dropped_switch + self.dropped_host

    @property
    def in_flight(self) -> int:
        return self.sent - self.delivered - self.dropped


class MetricSet:
    """All measurements of one simulation instance"""

    def __init__(
        self,
        warmup_ns: SimTime = 0,
        window_ns: SimTime = DEFAULT_WINDOW_NS,
        bin_ns: int = DEFAULT_BIN_NS,
    ):
        self.warmup_ns = warmup_ns
        self.window_ns = window_ns
        self.bin_ns = bin_ns
        self.flows: Dict[int, FlowStats] = {}
        self.histograms: Dict[int, LatencyHistogram] = {}
        self._series: Dict[int, Counter] = {}
        self.counters: Counter = Counter()
        self.end_ns: SimTime = 0

    # ----------------------------------------------------------------- flows

    def register_flow(self, flow_id: int, src: str, dst: str) -> FlowStats:
        stats = self.flows.get(flow_id)
        if stats is None:
            stats = FlowStats(flow_id, src, dst)
            self.flows[flow_id] = stats
            self.histograms[flow_id] = LatencyHistogram(self.bin_ns)
            self._series[flow_id] = Counter()
        return stats

    def _flow(self, frame: Frame) -> Optional[FlowStats]:
        if not frame.flow_id:
            return None
        return self.flows.get(frame.flow_id) or self.register_flow(frame.flow_id, "", "")

    def on_sent(self, frame: Frame) -> None:
        stats = self._flow(frame)
        if stats is not None:
            stats.sent += 1
            stats.multicast = stats.multicast or frame.dst.is_multicast

    def on_delivered(self, frame: Frame, now: SimTime) -> None:
        """Count a delivery and record its latency per packet"""
        stats = self._flow(frame)
        if stats is None:
            return
        stats.delivered += 1
        stats.bytes_delivered += frame.size_bytes
        if frame.seq < stats.max_seq:
            stats.reorders += 1
        else:
            stats.max_seq = frame.seq
        self.histograms[frame.flow_id].record(now - frame.injected_at)
        self._series[frame.flow_id][now // self.window_ns] += frame.size_bytes
        if now >= self.warmup_ns:
            stats.window_wire_bytes += frame.size_bytes + FRAMING_OVERHEAD_BYTES

    def on_dropped_switch(self, frame: Frame) -> None:
        stats = self._flow(frame)
        if stats is not None:
            stats.dropped_switch += 1

    def on_dropped_host(self, frame: Frame) -> None:
        stats = self._flow(frame)
        if stats is not None:
            stats.dropped_host += 1

    # -------------------------------------------------------------- counters

    def count(self, name: str, n: int = 1) -> None:
        self.counters[name] += n

    def set_counter(self, name: str, value: int) -> None:
        self.counters[name] = int(value)

    # --------------------------------------------------------------- queries

    def loss_rate(self, flow_id: int) -> Optional[float]:
        """(dropped_switch + dropped_host) / sent, None when nothing was sent"""
        stats = self.flows.get(flow_id)
        if stats is None or stats.sent == 0:
            return None
        return stats.dropped / stats.sent

    def throughput(self, flow_id: int, window_ns: Optional[SimTime] = None) -> List[Tuple[SimTime, float]]:
        """
        Delivered bytes/s per window, warm-up excluded

        Args:
            flow_id: Flow to report
            window_ns: Window length; must be a multiple of the recording window

        Returns:
            List of (window_start_ns, bytes_per_second)
        """
        window_ns = window_ns or self.window_ns
        if window_ns <= 0 or window_ns % self.window_ns:
            raise ConfigurationError(f"window must be a positive multiple of {self.window_ns} ns")
        factor = window_ns // self.window_ns
        merged: Counter = Counter()
        for index, nbytes in self._series.get(flow_id, Counter()).items():
            merged[index // factor] += nbytes
        first = -(-self.warmup_ns // window_ns)
        last = self.end_ns // window_ns
        return [
            (i * window_ns, merged.get(i, 0) * 1e9 / window_ns)
            for i in range(first, last)
        ]

    def series(self, flow_id: int) -> List[Tuple[SimTime, int]]:
        """(window_start_ns, bytes) for complete windows after warm-up"""
        recorded = self._series.get(flow_id, Counter())
        first = -(-self.warmup_ns // self.window_ns)
        last = self.end_ns // self.window_ns
        return [(i * self.window_ns, recorded.get(i, 0)) for i in range(first, last)]

    def line_share(self, flow_id: int, speed_bps: int) -> float:
        """Steady-state goodput of a flow as a fraction of a line rate (wire bytes)"""
        stats = self.flows.get(flow_id)
        span = self.end_ns - self.warmup_ns
        if stats is None or span <= 0:
            return 0.0
        return stats.window_wire_bytes * 8 * 1e9 / (speed_bps * span)

    def mean_latency(self, flow_id: int) -> Optional[float]:
        histogram = self.histograms.get(flow_id)
        return histogram.mean() if histogram else None

    def total(self, attribute: str) -> int:
        return sum(getattr(s, attribute) for s in self.flows.values())

    def merged_histogram(self, flow_ids=None) -> LatencyHistogram:
        """Histogram over several flows (all when flow_ids is None)"""
        merged = LatencyHistogram(self.bin_ns)
        for flow_id, histogram in self.histograms.items():
            if flow_ids is not None and flow_id not in flow_ids:
                continue
            merged.merge(histogram)
        return merged

    def close(self, end_ns: SimTime) -> None:
        self.end_ns = end_ns
