"""
Synthetic traffic sources

CBR departures are computed from the start of the current burst so rounding
never drifts; Poisson sources add a negative-exponential gap to the frame time
so the long-run rate equals ``offered_load`` of the line.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from src.dataflow.host import Host, SendResult
from src.ether.frame import FRAMING_OVERHEAD_BYTES, Frame, MacAddress, VlanTag, serialization_delay
from src.sim_core.engine import SimEngine, SimTime
from src.utils.error_handler import ConfigurationError


class Pattern(str, Enum):
    CBR = "cbr"
    POISSON = "poisson"


class DestinationOrder(str, Enum):
    INTERLEAVED = "interleaved"
    RANDOM = "random"


@dataclass
class Destination:
    mac: MacAddress
    weight: float = 1.0
    flow_id: int = 0
    name: str = ""


@dataclass
class SourceConfig:
    name: str
    pattern: Pattern = Pattern.CBR
    offered_load: float = 1.0
    frame_size_bytes: int = 1518
    destinations: List[Destination] = field(default_factory=list)
    tag: Optional[VlanTag] = None
    start: SimTime = 0
    stop: Optional[SimTime] = None
    order: DestinationOrder = DestinationOrder.INTERLEAVED
    # fixed frames/s instead of a fraction of the line rate
    frame_rate_hz: Optional[float] = None

    def __post_init__(self):
        self.pattern = Pattern(self.pattern)
        self.order = DestinationOrder(self.order)
        if not 0 < self.offered_load <= 1:
            raise ConfigurationError(
                f"{self.name}: offered_load must be in (0, 1], got {self.offered_load}"
            )
        if not self.destinations:
            raise ConfigurationError(f"{self.name}: at least one destination is required")
        if any(d.weight <= 0 for d in self.destinations):
            raise ConfigurationError(f"{self.name}: destination weights must be positive")
        if self.frame_rate_hz is not None and self.frame_rate_hz <= 0:
            raise ConfigurationError(f"{self.name}: frame_rate_hz must be positive")
        total = sum(d.weight for d in self.destinations)
        for d in self.destinations:
            d.weight = d.weight / total


class TrafficSource:
    """Frame generator attached to a host"""

    def __init__(self, engine: SimEngine, host: Host, config: SourceConfig, line_rate_bps: int):
        self.engine = engine
        self.host = host
        self.config = config
        self.name = config.name
        self.rng = engine.rng(f"source.{config.name}")
        self.frame_time = serialization_delay(config.frame_size_bytes, line_rate_bps)
        if config.frame_rate_hz is not None:
            self.period = 1e9 / config.frame_rate_hz
            if self.period < self.frame_time:
                raise ConfigurationError(f"{self.name}: frame rate exceeds the line rate")
        else:
            self.period = self.frame_time / config.offered_load
        self.sent = 0
        self.blocked = 0
        self._seq = [0] * len(config.destinations)
        self._swrr = [0.0] * len(config.destinations)
        self._origin: SimTime = config.start
        self._k = 0
        self._poisson_t = float(config.start)
        self._pending: Optional[int] = None

    def start(self) -> None:
        self.engine.schedule(self.config.start, self.name, self._emit)

    def next_departure(self, now: SimTime) -> SimTime:
        """
        Time of the next frame after one left at ``now``

        Returns:
            Absolute virtual time (ns)
        """
        if self.config.pattern is Pattern.CBR:
            self._k += 1
            return max(now, self._origin + round(self._k * self.period))
        mean_gap = self.period - self.frame_time
        self._poisson_t = max(self._poisson_t, float(now))
        self._poisson_t += self.frame_time + self.rng.exponential(mean_gap)
        return max(now, int(self._poisson_t))

    def _pick(self) -> int:
        dests = self.config.destinations
        if len(dests) == 1:
            return 0
        if self.config.order is DestinationOrder.RANDOM:
            return self.rng.choice_index([d.weight for d in dests])
        # smooth weighted round robin
        best = 0
        for i, d in enumerate(dests):
            self._swrr[i] += d.weight
            if self._swrr[i] > self._swrr[best]:
                best = i
        self._swrr[best] -= 1.0
        return best

    def _emit(self) -> None:
        now = self.engine.now()
        if self.config.stop is not None and now >= self.config.stop:
            return
        index = self._pending if self._pending is not None else self._pick()
        dest = self.config.destinations[index]
        frame = Frame(
            src=self.host.mac,
            dst=dest.mac,
            size_bytes=self.config.frame_size_bytes,
            tag=self.config.tag,
            flow_id=dest.flow_id,
            injected_at=now,
            seq=self._seq[index],
        )
        if self.host.send(frame) is SendResult.RETRY_LATER:
            self._pending = index
            self.blocked += 1
            self.engine.schedule_in(self.host.config.send_retry_backoff, self.name, self._emit)
            return
        if self._pending is not None:
            # blocked sender restarts its schedule instead of bursting to catch up
            self._origin, self._k = now, 0
            self._poisson_t = float(now)
            self._pending = None
        self._seq[index] += 1
        self.sent += 1
        self.engine.schedule(self.next_departure(now), self.name, self._emit)


def offered_rate_bps(config: SourceConfig, line_rate_bps: int) -> float:
    """Offered frame bits/s of a source, framing overhead excluded"""
    if config.frame_rate_hz is not None:
        return config.frame_rate_hz * config.frame_size_bytes * 8
    size = config.frame_size_bytes
    return config.offered_load * line_rate_bps * size / (size + FRAMING_OVERHEAD_BYTES)
