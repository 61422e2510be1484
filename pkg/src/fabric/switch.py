"""
Store-and-forward Ethernet switch

A frame arriving on a port goes through the VLAN ingress filter, MAC learning
and lookup, a constant forwarding latency, the optional multicast rate cap, the
fabric admission token bucket and finally an egress queue. When an egress queue
crosses its XOFF threshold and ``fc_propagation`` is on, every ingress port that
fed it since it was last empty is paused until the queue falls below XON.
"""
import math
from collections import Counter, OrderedDict, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, Hashable, List, Optional, Tuple

from src.ether.frame import FRAMING_OVERHEAD_BYTES, MAX_FRAME_BYTES, Frame
from src.ether.link import Link, LinkDirection
from src.fabric.mac_table import MacTable, MacTableConfig
from src.fabric.scheduler import (
    EgressQueues,
    QueuedFrame,
    SchedulerKind,
    make_scheduler,
    queue_count,
)
from src.fabric.trunk import TrunkGroup
from src.fabric.vlan import VlanMap
from src.metrics.metric_set import MetricSet
from src.sim_core.engine import S, US, SimEngine, SimTime
from src.utils.error_handler import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger(__name__)

INGRESS_REASON = "ingress"
# distinct broadcasts remembered for loop detection
BROADCAST_MEMORY = 4096


class IngressMode(str, Enum):
    VOQ = "voq"
    SHARED_FIFO = "shared_fifo"


@dataclass
class SwitchConfig:
    name: str = "sw"
    ingress_mode: IngressMode = IngressMode.VOQ
    fc_propagation: bool = True
    fabric_capacity_fraction: float = 1.0
    forwarding_latency: SimTime = 5 * US
    # uniform extra latency per frame; frames of one ingress port keep their order
    forwarding_jitter: SimTime = 0
    egress_buffer_bytes: int = 128 * 1024
    ingress_buffer_bytes: int = 128 * 1024
    xoff_fraction: float = 0.8
    xon_fraction: float = 0.5
    scheduler: SchedulerKind = SchedulerKind.FIFO
    wrr_weights: Dict[int, float] = field(default_factory=dict)
    # frames/s for flooded and multicast frames, None = unlimited
    multicast_rate_cap: Optional[float] = None
    multicast_queue_frames: int = 64
    storm_threshold: int = 10_000
    mac_table: MacTableConfig = field(default_factory=MacTableConfig)

    def __post_init__(self):
        self.ingress_mode = IngressMode(self.ingress_mode)
        self.scheduler = SchedulerKind(self.scheduler)
        if not 0 < self.fabric_capacity_fraction <= 1:
            raise ConfigurationError(
                f"{self.name}: fabric_capacity_fraction must be in (0, 1], "
                f"got {self.fabric_capacity_fraction}"
            )
        if not 0 < self.xon_fraction < self.xoff_fraction <= 1:
            raise ConfigurationError(f"{self.name}: need 0 < xon < xoff <= 1")
        if self.forwarding_latency < 0:
            raise ConfigurationError(f"{self.name}: forwarding_latency must be >= 0")
        if self.forwarding_jitter < 0:
            raise ConfigurationError(f"{self.name}: forwarding_jitter must be >= 0")
        if self.ingress_buffer_bytes < MAX_FRAME_BYTES:
            raise ConfigurationError(f"{self.name}: ingress buffer must hold one frame")
        if self.multicast_rate_cap is not None and self.multicast_rate_cap <= 0:
            raise ConfigurationError(f"{self.name}: multicast_rate_cap must be positive")


class SwitchPort:
    """Physical port: link endpoint with egress queues and ingress state"""

    def __init__(self, switch: "Switch", index: int, port_name: str):
        self.switch = switch
        self.index = index
        self.port_name = port_name
        self.name = f"{switch.name}.{port_name}"
        self.logical: Hashable = port_name
        self.link: Optional[Link] = None
        self.tx: Optional[LinkDirection] = None
        self.rx: Optional[LinkDirection] = None
        config = switch.config
        n_queues = queue_count(config.scheduler)
        self.queues = EgressQueues(n_queues, config.egress_buffer_bytes // n_queues)
        self.scheduler = make_scheduler(config.scheduler, config.wrr_weights)
        # egress side
        self.xoff_active = False
        self.feeders: Dict[int, None] = {}
        self.blocked: Dict[int, None] = {}
        self.tx_frames = 0
        self.tx_bytes = 0
        # ingress side
        self.ingress_bytes = 0
        self.forward_after: SimTime = 0
        self.pause_reasons: set = set()
        self.held: Dict[int, Deque[QueuedFrame]] = {}
        self.fifo: Deque[QueuedFrame] = deque()
        self.fabric_queue: Deque[QueuedFrame] = deque()

    def attach(self, link: Link) -> None:
        self.link = link
        self.tx = link.outgoing(self)
        self.rx = link.incoming(self)

    def receive(self, frame: Frame, direction: LinkDirection) -> None:
        self.switch._on_arrival(self, frame)

    def on_tx_ready(self, direction: LinkDirection) -> None:
        self.switch._kick(self)

    @property
    def held_frames(self) -> int:
        return sum(len(q) for q in self.held.values()) + len(self.fifo)


class Switch:
    """Ethernet switch model"""

    def __init__(self, engine: SimEngine, config: SwitchConfig, metrics: Optional[MetricSet] = None):
        self.engine = engine
        self.config = config
        self.name = config.name
        self.metrics = metrics or MetricSet()
        self.counters: Counter = Counter()
        self.vlans = VlanMap()
        self.mac_table = MacTable(config.mac_table, on_evict=self._on_address_aged)
        self.ports: List[SwitchPort] = []
        self._by_name: Dict[str, SwitchPort] = {}
        self.trunks: Dict[str, TrunkGroup] = {}
        self._storm_reported = False
        self._broadcasts: "OrderedDict[tuple, None]" = OrderedDict()
        self._jitter_rng = engine.rng(f"{self.name}.forwarding") if config.forwarding_jitter else None
        # fabric token bucket
        self._fabric_rr: Dict[int, None] = {}
        self._fabric_tokens = 0.0
        self._fabric_last: SimTime = 0
        self._fabric_kick_pending = False
        # multicast rate cap
        self._mcast_queue: Deque[Tuple[List[QueuedFrame], SimTime]] = deque()
        self._mcast_next: SimTime = 0
        self._mcast_pending = False
        self._in_pipeline = 0

    # ----------------------------------------------------------- construction

    def add_port(self, port_name: str) -> SwitchPort:
        if port_name in self._by_name:
            raise ConfigurationError(f"{self.name}: duplicate port {port_name}")
        port = SwitchPort(self, len(self.ports), port_name)
        self.ports.append(port)
        self._by_name[port_name] = port
        self.vlans.configure_port(port_name)
        return port

    def port(self, port_name: str) -> SwitchPort:
        try:
            return self._by_name[port_name]
        except KeyError:
            raise ConfigurationError(f"{self.name}: no port {port_name}") from None

    def add_trunk(self, trunk_name: str, member_names: List[str]) -> TrunkGroup:
        members = [self.port(n) for n in member_names]
        trunk = TrunkGroup(
            trunk_name,
            [m.index for m in members],
            self.engine.rng(f"{self.name}.trunk.{trunk_name}"),
        )
        removed = [self.vlans.remove_port(m.port_name) for m in members]
        for member in members:
            member.logical = trunk_name
        # the trunk inherits the VLAN membership of its first member
        first = removed[0]
        if first is None:
            self.vlans.configure_port(trunk_name)
        else:
            self.vlans.configure_port(trunk_name, first.pvid, first.tagged, first.untagged)
        self.trunks[trunk_name] = trunk
        return trunk

    def set_port_up(self, port_name: str, up: bool) -> None:
        port = self.port(port_name)
        trunk = self.trunks.get(port.logical)
        if trunk is None:
            raise ConfigurationError(f"{self.name}: {port_name} is not a trunk member")
        trunk.set_member_up(port.index, up)

    def start(self) -> None:
        """Arm periodic MAC aging and size the fabric bucket"""
        self._fabric_tokens = self._fabric_burst()
        self._fabric_last = self.engine.now()
        period = min(S, self.config.mac_table.aging_time)
        self.engine.schedule_in(period, self.name, self._aging_tick, period)

    def _aging_tick(self, period: SimTime) -> None:
        evicted = self.mac_table.age_scan(self.engine.now())
        if evicted:
            self.counters["mac_aged"] += evicted
        self.engine.schedule_in(period, self.name, self._aging_tick, period)

    def _on_address_aged(self, addr) -> None:
        for trunk in self.trunks.values():
            trunk.forget(addr)

    # ---------------------------------------------------------------- ingress

    def _on_arrival(self, port: SwitchPort, frame: Frame) -> None:
        config = self.config
        now = self.engine.now()
        self.counters["frames_in"] += 1
        if port.ingress_bytes + frame.size_bytes > config.ingress_buffer_bytes:
            self.counters["dropped_ingress_full"] += 1
            self.metrics.on_dropped_switch(frame)
            return
        vlan = self.vlans.admit(frame, port.logical)
        if vlan is None:
            self.counters["vlan_rejects"] += 1
            return
        self.mac_table.learn(frame.src, vlan, port.logical, now)
        targets = self.lookup(frame, vlan, port.logical, now)
        if not targets:
            self.counters["filtered"] += 1
            return

        copies: List[QueuedFrame] = []
        for i, logical in enumerate(targets):
            egress = self._resolve(logical, frame)
            if egress is None:
                self.counters["dropped_trunk_down"] += 1
                if i == 0:
                    self.metrics.on_dropped_switch(frame)
                continue
            copies.append(QueuedFrame(frame, vlan, port.index, egress.index, now, primary=(i == 0)))
        if not copies:
            return
        self.counters["copies_admitted"] += len(copies)
        self._charge(port, frame.size_bytes * len(copies))
        self._in_pipeline += len(copies)
        flooded = len(targets) > 1 or frame.dst.is_multicast
        fire_at = now + config.forwarding_latency
        if self._jitter_rng is not None:
            fire_at += self._jitter_rng.integers(config.forwarding_jitter + 1)
        fire_at = max(fire_at, port.forward_after)
        port.forward_after = fire_at
        self.engine.schedule(fire_at, self.name, self._after_lookup, copies, flooded)

    def lookup(self, frame: Frame, vlan: int, in_port: Hashable, now: SimTime) -> List[Hashable]:
        """
        Forwarding set of a frame admitted to ``vlan``

        Returns:
            Logical egress ports; empty when the destination sits behind the ingress port
        """
        if frame.dst.is_multicast:
            targets = [p for p in self.vlans.members(vlan) if p != in_port]
            self.counters["multicast_frames"] += 1
            if frame.dst.is_broadcast:
                self._count_broadcast(frame, len(targets))
            return targets
        out = self.mac_table.lookup(frame.dst, vlan, now)
        if out is None:
            self.counters["floods"] += 1
            if now >= self.metrics.warmup_ns:
                self.counters["floods_measured"] += 1
            return [p for p in self.vlans.members(vlan) if p != in_port]
        if out == in_port:
            return []
        return [out]

    def _count_broadcast(self, frame: Frame, copies: int) -> None:
        """A broadcast seen here before came back around a loop; its copies are replicas"""
        self.counters["broadcast_copies"] += copies
        key = (frame.src, frame.flow_id, frame.seq, frame.injected_at)
        if key not in self._broadcasts:
            self._broadcasts[key] = None
            if len(self._broadcasts) > BROADCAST_MEMORY:
                self._broadcasts.popitem(last=False)
            return
        self._broadcasts.move_to_end(key)
        self.counters["broadcast_replicas"] += copies
        if not self._storm_reported and self.counters["broadcast_replicas"] > self.config.storm_threshold:
            self._storm_reported = True
            self.counters["storm_detected"] = 1
            logger.warning(
                f"Broadcast storm on {self.name}",
                extra_fields={"switch": self.name, "sim_time_ns": self.engine.now(),
                              "broadcast_replicas": self.counters["broadcast_replicas"]},
            )

    def _resolve(self, logical: Hashable, frame: Frame) -> Optional[SwitchPort]:
        trunk = self.trunks.get(logical)
        if trunk is None:
            return self._by_name.get(logical)
        member = trunk.select(frame.src, frame.dst)
        return None if member is None else self.ports[member]

    def _after_lookup(self, copies: List[QueuedFrame], flooded: bool) -> None:
        self._in_pipeline -= len(copies)
        if flooded and self.config.multicast_rate_cap is not None:
            self._mcast_offer(copies)
        else:
            self._fabric_offer(copies)

    # ----------------------------------------------------- multicast rate cap

    def _mcast_offer(self, copies: List[QueuedFrame]) -> None:
        if len(self._mcast_queue) >= self.config.multicast_queue_frames:
            self.counters["dropped_multicast_cap"] += 1
            for item in copies:
                self._drop(item, None)
            return
        self._mcast_queue.append((copies, self.engine.now()))
        if not self._mcast_pending:
            self._mcast_serve()

    def _mcast_serve(self) -> None:
        self._mcast_pending = False
        now = self.engine.now()
        interval = int(round(1e9 / self.config.multicast_rate_cap))
        while self._mcast_queue and now >= self._mcast_next:
            copies, queued_at = self._mcast_queue.popleft()
            self.counters["multicast_delay_ns"] += now - queued_at
            self._mcast_next = now + interval
            self._fabric_offer(copies)
        if self._mcast_queue:
            self._mcast_pending = True
            self.engine.schedule(self._mcast_next, self.name, self._mcast_serve)

    # ------------------------------------------------------------------ fabric

    def _fabric_rate(self) -> float:
        """Fabric capacity in bytes/ns"""
        total_bps = sum(p.link.speed_bps for p in self.ports if p.link is not None)
        return self.config.fabric_capacity_fraction * total_bps / 8e9

    def _fabric_burst(self) -> float:
        return float(len(self.ports) * MAX_FRAME_BYTES * 2)

    def _fabric_offer(self, copies: List[QueuedFrame]) -> None:
        if self.config.fabric_capacity_fraction >= 1.0:
            for item in copies:
                self._to_egress(item)
            return
        for item in copies:
            ingress = self.ports[item.ingress]
            ingress.fabric_queue.append(item)
            self._fabric_rr.setdefault(ingress.index, None)
        self._fabric_kick()

    def _fabric_timer(self) -> None:
        self._fabric_kick_pending = False
        self._fabric_kick()

    def _fabric_kick(self) -> None:
        now = self.engine.now()
        rate = self._fabric_rate()
        if rate <= 0:
            return
        self._fabric_tokens = min(
            self._fabric_burst(), self._fabric_tokens + (now - self._fabric_last) * rate
        )
        self._fabric_last = now
        while self._fabric_rr:
            index = next(iter(self._fabric_rr))
            ingress = self.ports[index]
            item = ingress.fabric_queue[0]
            need = item.size + FRAMING_OVERHEAD_BYTES
            if self._fabric_tokens < need:
                if not self._fabric_kick_pending:
                    self._fabric_kick_pending = True
                    wait = max(1, math.ceil((need - self._fabric_tokens) / rate))
                    self.engine.schedule_in(wait, self.name, self._fabric_timer)
                return
            self._fabric_tokens -= need
            ingress.fabric_queue.popleft()
            del self._fabric_rr[index]
            if ingress.fabric_queue:
                self._fabric_rr[index] = None
            self._to_egress(item)

    # ------------------------------------------------------------------ egress

    def _to_egress(self, item: QueuedFrame) -> None:
        ingress = self.ports[item.ingress]
        egress = self.ports[item.egress]
        if self.config.ingress_mode is IngressMode.SHARED_FIFO:
            ingress.fifo.append(item)
            self._drain_fifo(ingress)
            return
        held = ingress.held.get(egress.index)
        if held:
            held.append(item)
            return
        if self._enqueue(egress, item):
            return
        if self.config.fc_propagation:
            ingress.held.setdefault(egress.index, deque()).append(item)
            egress.blocked[ingress.index] = None
            self._congest(egress, ingress)
            return
        self.counters["dropped_egress_full"] += 1
        self._drop(item, ingress)

    def _drain_fifo(self, ingress: SwitchPort) -> bool:
        """Move head-of-line frames out of a shared ingress FIFO; False when blocked"""
        while ingress.fifo:
            item = ingress.fifo[0]
            egress = self.ports[item.egress]
            if not self._enqueue(egress, item):
                egress.blocked[ingress.index] = None
                if self.config.fc_propagation:
                    self._congest(egress, ingress)
                return False
            ingress.fifo.popleft()
        return True

    def _enqueue(self, egress: SwitchPort, item: QueuedFrame) -> bool:
        cls = egress.queues.class_of(item.frame.priority)
        if not egress.queues.push(cls, item):
            return False
        ingress = self.ports[item.ingress]
        self._release(ingress, item.size)
        if ingress.index not in egress.feeders:
            egress.feeders[ingress.index] = None
            if egress.xoff_active:
                self._add_reason(ingress, egress.index)
        if (
            self.config.fc_propagation
            and not egress.xoff_active
            and egress.queues.max_occupancy() >= self.config.xoff_fraction
        ):
            self._congest(egress, None)
        self._kick(egress)
        return True

    def _congest(self, egress: SwitchPort, ingress: Optional[SwitchPort]) -> None:
        if ingress is not None and ingress.index not in egress.feeders:
            egress.feeders[ingress.index] = None
            if egress.xoff_active:
                self._add_reason(ingress, egress.index)
        if egress.xoff_active:
            return
        egress.xoff_active = True
        self.counters["xoff_events"] += 1
        for index in egress.feeders:
            self._add_reason(self.ports[index], egress.index)

    def _kick(self, egress: SwitchPort) -> None:
        if egress.tx is None or not egress.tx.can_send():
            return
        cls = egress.scheduler.select(egress.queues)
        if cls is None:
            return
        item = egress.queues.pop(cls)
        frame = self.vlans.egress_frame(item.frame, egress.logical, item.vlan)
        egress.tx.transmit(frame)
        egress.tx_frames += 1
        egress.tx_bytes += frame.size_bytes
        self.counters["copies_transmitted"] += 1
        self._on_dequeue(egress)

    def _on_dequeue(self, egress: SwitchPort) -> None:
        self._serve_held(egress)
        if egress.xoff_active and egress.queues.max_occupancy() <= self.config.xon_fraction:
            egress.xoff_active = False
            for index in egress.feeders:
                self._remove_reason(self.ports[index], egress.index)
        if not egress.xoff_active and egress.queues.is_empty() and not egress.blocked:
            egress.feeders.clear()

    def _serve_held(self, egress: SwitchPort) -> None:
        progress = True
        while progress and egress.blocked:
            progress = False
            for index in list(egress.blocked):
                if index not in egress.blocked:
                    continue
                ingress = self.ports[index]
                del egress.blocked[index]
                if self.config.ingress_mode is IngressMode.SHARED_FIFO:
                    before = len(ingress.fifo)
                    self._drain_fifo(ingress)
                    progress = progress or len(ingress.fifo) < before
                    continue
                held = ingress.held.get(egress.index)
                if not held:
                    continue
                item = held[0]
                if not egress.queues.fits(egress.queues.class_of(item.frame.priority), item.size):
                    egress.blocked[index] = None
                    continue
                held.popleft()
                self._enqueue(egress, item)
                progress = True
                if held:
                    egress.blocked[index] = None
                else:
                    del ingress.held[egress.index]

    # ----------------------------------------------------------- flow control

    def _charge(self, port: SwitchPort, nbytes: int) -> None:
        port.ingress_bytes += nbytes
        if port.ingress_bytes >= self.config.xoff_fraction * self.config.ingress_buffer_bytes:
            self._add_reason(port, INGRESS_REASON)

    def _release(self, port: SwitchPort, nbytes: int) -> None:
        port.ingress_bytes -= nbytes
        if (
            INGRESS_REASON in port.pause_reasons
            and port.ingress_bytes <= self.config.xon_fraction * self.config.ingress_buffer_bytes
        ):
            self._remove_reason(port, INGRESS_REASON)

    def _add_reason(self, port: SwitchPort, reason) -> None:
        if reason in port.pause_reasons:
            return
        port.pause_reasons.add(reason)
        if len(port.pause_reasons) == 1 and port.rx is not None:
            port.rx.request_pause()

    def _remove_reason(self, port: SwitchPort, reason) -> None:
        if reason not in port.pause_reasons:
            return
        port.pause_reasons.discard(reason)
        if not port.pause_reasons and port.rx is not None:
            port.rx.request_resume()

    def _drop(self, item: QueuedFrame, ingress: Optional[SwitchPort]) -> None:
        self.counters["copies_dropped"] += 1
        if ingress is None:
            ingress = self.ports[item.ingress]
        self._release(ingress, item.size)
        if item.primary:
            self.metrics.on_dropped_switch(item.frame)

    # ----------------------------------------------------------------- census

    def queued_copies(self) -> int:
        """Frame copies inside the switch: pipeline, rate cap, fabric, held and egress queues"""
        total = self._in_pipeline
        total += sum(len(copies) for copies, _ in self._mcast_queue)
        for port in self.ports:
            total += len(port.fabric_queue) + port.held_frames + port.queues.total_frames
        return total

    def conservation_holds(self) -> bool:
        """admitted = transmitted + dropped + still queued"""
        c = self.counters
        return c["copies_admitted"] == (
            c["copies_transmitted"] + c["copies_dropped"] + self.queued_copies()
        )

    def counter_snapshot(self) -> Dict[str, int]:
        """Named counters for export, prefixed by the switch name"""
        snapshot = {f"switch.{self.name}.{k}": int(v) for k, v in self.counters.items()}
        stats = self.mac_table.stats
        prefix = f"switch.{self.name}.mac"
        snapshot.update({
            f"{prefix}.learned": stats.learned,
            f"{prefix}.refused": stats.refused,
            f"{prefix}.moves": stats.moves,
            f"{prefix}.aged_out": stats.aged_out,
            f"{prefix}.entries": len(self.mac_table),
            f"switch.{self.name}.vlan_ingress_rejects": self.vlans.rejects,
        })
        for name, trunk in self.trunks.items():
            snapshot[f"switch.{self.name}.trunk.{name}.dropped_all_down"] = trunk.dropped_all_down
            for member, n in trunk.connection_census().items():
                snapshot[f"switch.{self.name}.trunk.{name}.{self.ports[member].port_name}"] = n
        return snapshot
