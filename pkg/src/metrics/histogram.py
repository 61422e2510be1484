"""
Per-packet latency histogram with fixed-width bins
"""
from collections import Counter
from typing import List, Optional, Tuple

from src.utils.error_handler import ModelError

DEFAULT_BIN_NS = 300


class LatencyHistogram:
    """Counts of latencies in ``bin_ns``-wide bins; keeps the exact sum for the mean"""

    def __init__(self, bin_ns: int = DEFAULT_BIN_NS):
        self.bin_ns = bin_ns
        self._bins: Counter = Counter()
        self.count = 0
        self.total_ns = 0
        self.max_ns = 0

    def record(self, latency_ns: int) -> int:
        """
        Count one packet

        Returns:
            Bin index

        Raises:
            ModelError: On a negative latency
        """
        if latency_ns < 0:
            raise ModelError(f"Negative latency {latency_ns} ns")
        index = latency_ns // self.bin_ns
        self._bins[index] += 1
        self.count += 1
        self.total_ns += latency_ns
        if latency_ns > self.max_ns:
            self.max_ns = latency_ns
        return index

    def merge(self, other: "LatencyHistogram") -> None:
        self._bins.update(other._bins)
        self.count += other.count
        self.total_ns += other.total_ns
        self.max_ns = max(self.max_ns, other.max_ns)

    def mean(self) -> Optional[float]:
        if not self.count:
            return None
        return self.total_ns / self.count

    def binned_mean(self) -> Optional[float]:
        """Mean computed from bin midpoints"""
        if not self.count:
            return None
        return sum((i + 0.5) * self.bin_ns * n for i, n in self._bins.items()) / self.count

    def bins(self) -> List[Tuple[int, int]]:
        """(bin_start_ns, count) ascending, zero-filled between first and last occupied bin"""
        if not self._bins:
            return []
        lo, hi = min(self._bins), max(self._bins)
        return [(i * self.bin_ns, self._bins.get(i, 0)) for i in range(lo, hi + 1)]

    def percentile(self, q: float) -> Optional[int]:
        """Lower edge of the bin holding the q-quantile (0 < q <= 1)"""
        if not self.count:
            return None
        target = q * self.count
        seen = 0
        for index in sorted(self._bins):
            seen += self._bins[index]
            if seen >= target:
                return index * self.bin_ns
        return max(self._bins) * self.bin_ns
