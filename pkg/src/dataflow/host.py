"""
Host network stack

Send side: a byte-bounded NIC queue; a full queue makes ``send`` return
RETRY_LATER and the caller sleeps ``send_retry_backoff`` before trying again.

Receive side: frames land in the NIC receive ring, which drains into sockets at
``rx_rate_bps`` (or instantly). The ring asserts PAUSE at XOFF. Sockets drop
silently when their buffer is full; nothing is signalled upstream.
"""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Deque, Dict, Hashable, List, Optional, Tuple

from src.ether.frame import BROADCAST, FRAMING_OVERHEAD_BYTES, Frame, MacAddress
from src.ether.link import Link, LinkDirection
from src.metrics.metric_set import MetricSet
from src.sim_core.engine import US, SimEngine, SimTime
from src.utils.error_handler import ConfigurationError

DEFAULT_SOCKET = "default"


class Emulation(str, Enum):
    NORMAL = "normal"
    DEAD = "dead"
    SLOWED = "slowed"


class SendResult(Enum):
    SENT = "sent"
    RETRY_LATER = "retry_later"


@dataclass
class HostConfig:
    name: str
    mac: MacAddress
    nic_queue_bytes: int = 64 * 1024
    send_retry_backoff: SimTime = 10 * US
    rx_ring_bytes: int = 64 * 1024
    rx_rate_bps: Optional[int] = None
    socket_buffer_bytes: int = 256 * 1024
    emulation: Emulation = Emulation.NORMAL
    service_time: SimTime = 0
    promiscuous: bool = False
    xoff_fraction: float = 0.8
    xon_fraction: float = 0.5
    multicast_groups: List[MacAddress] = field(default_factory=list)

    def __post_init__(self):
        self.emulation = Emulation(self.emulation)
        if self.nic_queue_bytes < 1518 or self.rx_ring_bytes < 1518:
            raise ConfigurationError(f"{self.name}: NIC queues must hold one maximum frame")
        if self.emulation is Emulation.SLOWED and self.service_time <= 0:
            raise ConfigurationError(f"{self.name}: slowed emulation needs a positive service_time")
        if self.send_retry_backoff <= 0:
            raise ConfigurationError(f"{self.name}: send_retry_backoff must be positive")


class Socket:
    """Receive buffer of one application endpoint"""

    def __init__(
        self,
        host: "Host",
        name: str,
        buffer_bytes: int,
        handler: Optional[Callable[[Frame], None]] = None,
        service_time: SimTime = 0,
        lazy: bool = False,
    ):
        self.host = host
        self.name = name
        self.buffer_bytes = buffer_bytes
        self.handler = handler
        self.service_time = service_time
        self.lazy = lazy
        self.used_bytes = 0
        self.delivered = 0
        self.dropped = 0
        self._backlog: Deque[Frame] = deque()
        self._busy = False

    def deliver(self, frame: Frame) -> bool:
        """
        host_deliver: accept into the buffer or drop silently

        Returns:
            True when delivered
        """
        engine = self.host.engine
        if self.used_bytes + frame.size_bytes > self.buffer_bytes:
            self.dropped += 1
            self.host.metrics.on_dropped_host(frame)
            self.host.counters["socket_drops"] += 1
            return False
        self.used_bytes += frame.size_bytes
        self.delivered += 1
        # promiscuous copies of frames for other stations are not deliveries of their flow
        if frame.dst == self.host.mac or frame.dst.is_multicast:
            self.host.metrics.on_delivered(frame, engine.now())
        if self.lazy:
            return True
        self._backlog.append(frame)
        if not self._busy:
            self._consume_next()
        return True

    def _consume_next(self) -> None:
        if not self._backlog:
            self._busy = False
            return
        self._busy = True
        if self.service_time > 0:
            self.host.engine.schedule_in(self.service_time, self.host.name, self._consume)
        else:
            self._consume()

    def _consume(self) -> None:
        frame = self._backlog.popleft()
        self.used_bytes -= frame.size_bytes
        if self.handler is not None:
            self.handler(frame)
        self._consume_next()


class Host:
    """End node with one NIC"""

    def __init__(self, engine: SimEngine, config: HostConfig, metrics: Optional[MetricSet] = None):
        self.engine = engine
        self.config = config
        self.name = config.name
        self.mac = config.mac
        self.metrics = metrics or MetricSet()
        self.link: Optional[Link] = None
        self.tx: Optional[LinkDirection] = None
        self.rx: Optional[LinkDirection] = None
        self.counters: Dict[str, int] = {
            "sent": 0, "retry_later": 0, "received": 0, "not_for_me": 0,
            "rx_ring_drops": 0, "socket_drops": 0,
        }
        self.sockets: Dict[str, Socket] = {}
        self._groups = {g.value for g in config.multicast_groups}
        self._nic: Deque[Frame] = deque()
        self._nic_bytes = 0
        self._ring: Deque[Frame] = deque()
        self._ring_bytes = 0
        self._draining = False
        self._fc_asserted = False

    def attach(self, link: Link) -> None:
        self.link = link
        self.tx = link.outgoing(self)
        self.rx = link.incoming(self)

    def bind(
        self,
        name: str = DEFAULT_SOCKET,
        handler: Optional[Callable[[Frame], None]] = None,
        buffer_bytes: Optional[int] = None,
        service_time: SimTime = 0,
        lazy: bool = False,
    ) -> Socket:
        socket = Socket(
            self, name, buffer_bytes or self.config.socket_buffer_bytes, handler, service_time, lazy
        )
        self.sockets[name] = socket
        return socket

    def join_group(self, group: MacAddress) -> None:
        self._groups.add(group.value)

    # ------------------------------------------------------------------- send

    def send(self, frame: Frame) -> SendResult:
        """host_send: enqueue to the NIC or ask the caller to retry later"""
        if self._nic_bytes + frame.size_bytes > self.config.nic_queue_bytes:
            self.counters["retry_later"] += 1
            return SendResult.RETRY_LATER
        self._nic.append(frame)
        self._nic_bytes += frame.size_bytes
        self.counters["sent"] += 1
        self.metrics.on_sent(frame)
        self._pump()
        return SendResult.SENT

    @property
    def nic_queue_bytes(self) -> int:
        return self._nic_bytes

    def _pump(self) -> None:
        if self.tx is None or not self._nic or not self.tx.can_send():
            return
        frame = self._nic.popleft()
        self._nic_bytes -= frame.size_bytes
        self.tx.transmit(frame)

    def on_tx_ready(self, direction: LinkDirection) -> None:
        self._pump()

    def announce(self) -> None:
        """Broadcast one frame so switches learn this address"""
        self.send(Frame(src=self.mac, dst=BROADCAST, size_bytes=64, injected_at=self.engine.now()))

    # ---------------------------------------------------------------- receive

    def accepts(self, frame: Frame) -> bool:
        dst = frame.dst
        return (
            self.config.promiscuous
            or dst == self.mac
            or dst.is_broadcast
            or (dst.is_multicast and dst.value in self._groups)
        )

    def receive(self, frame: Frame, direction: LinkDirection) -> None:
        if not self.accepts(frame):
            self.counters["not_for_me"] += 1
            return
        self.counters["received"] += 1
        if self._ring_bytes + frame.size_bytes > self.config.rx_ring_bytes:
            self.counters["rx_ring_drops"] += 1
            self.metrics.on_dropped_host(frame)
            return
        self._ring.append(frame)
        self._ring_bytes += frame.size_bytes
        if not self._fc_asserted and self._ring_bytes >= self.config.xoff_fraction * self.config.rx_ring_bytes:
            self._fc_asserted = True
            self.rx.request_pause()
        if not self._draining:
            self._drain()

    def _drain_time(self, frame: Frame) -> SimTime:
        wire = 0
        if self.config.rx_rate_bps:
            wire = round((frame.size_bytes + FRAMING_OVERHEAD_BYTES) * 8e9 / self.config.rx_rate_bps)
        if self.config.emulation is Emulation.SLOWED:
            return max(wire, self.config.service_time)
        return wire

    def _drain(self) -> None:
        if self.config.emulation is Emulation.DEAD:
            return
        while self._ring:
            frame = self._ring[0]
            delay = self._drain_time(frame)
            if delay > 0 and not self._draining:
                self._draining = True
                self.engine.schedule_in(delay, self.name, self._drain_one)
                return
            if delay > 0:
                return
            self._pop_ring()
        self._draining = False

    def _drain_one(self) -> None:
        self._draining = False
        self._pop_ring()
        self._drain()

    def _pop_ring(self) -> None:
        frame = self._ring.popleft()
        self._ring_bytes -= frame.size_bytes
        if self._fc_asserted and self._ring_bytes <= self.config.xon_fraction * self.config.rx_ring_bytes:
            self._fc_asserted = False
            self.rx.request_resume()
        self.socket_for(frame).deliver(frame)

    def socket_for(self, frame: Frame) -> Socket:
        name = getattr(frame.payload, "socket", DEFAULT_SOCKET)
        socket = self.sockets.get(name)
        if socket is None:
            socket = self.sockets.get(DEFAULT_SOCKET) or self.bind(DEFAULT_SOCKET)
        return socket

    @property
    def rx_ring_bytes(self) -> int:
        return self._ring_bytes


class CreditGate:
    """Bounds outstanding requests; None means unlimited"""

    def __init__(self, max_outstanding: Optional[int] = None):
        if max_outstanding is not None and max_outstanding < 1:
            raise ConfigurationError(f"max_outstanding must be >= 1, got {max_outstanding}")
        self.max_outstanding = max_outstanding
        self.outstanding = 0
        self.max_observed = 0
        self._waiting: Deque[Tuple[Hashable, Callable[[], Any]]] = deque()

    def has_credit(self) -> bool:
        return self.max_outstanding is None or self.outstanding < self.max_outstanding

    def submit(self, issue: Callable[[], Any], key: Hashable = None) -> None:
        """Run ``issue`` now if a credit is free, otherwise when one is released"""
        if self.has_credit():
            self._take()
            issue()
        else:
            self._waiting.append((key, issue))

    def withdraw(self, key: Hashable) -> int:
        """Drop waiting requests submitted under ``key``; returns how many"""
        kept = deque(w for w in self._waiting if w[0] != key)
        dropped = len(self._waiting) - len(kept)
        self._waiting = kept
        return dropped

    def _take(self) -> None:
        self.outstanding += 1
        if self.outstanding > self.max_observed:
            self.max_observed = self.outstanding

    def release(self) -> None:
        if self.outstanding <= 0:
            raise ConfigurationError("CreditGate released more credits than taken")
        self.outstanding -= 1
        if self._waiting and self.has_credit():
            self._take()
            _, issue = self._waiting.popleft()
            issue()

    @property
    def waiting(self) -> int:
        return len(self._waiting)
