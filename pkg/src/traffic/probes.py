"""
MAC address table probe

One requester sends requests to ``count`` different destination addresses. A
promiscuous server answers each request using the request's destination as its
own source address, which teaches the switch every probed address. A second
promiscuous port only listens. After the learning phase the same requests are
repeated; the listener now sees only the requests the switch still floods, so
the table holds ``count - N`` of the addresses.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from src.dataflow.host import Host, HostConfig, SendResult
from src.ether.frame import GE_BPS, MIN_FRAME_BYTES, Frame, MacAddress
from src.ether.link import Link
from src.fabric.switch import Switch, SwitchConfig
from src.metrics.metric_set import MetricSet
from src.sim_core.engine import MS, US, SimEngine, SimTime
from src.sim_core.rng import RngStream
from src.traffic.sinks import Listener, Responder
from src.utils.error_handler import ConfigurationError

# fixed octets of the probed addresses
XX, YY, ZZ = 0x12, 0x34, 0x56


class AddressPattern(str, Enum):
    """Probe address layouts; a = linearly increasing, b = random"""
    LOW_LINEAR = "low_linear"            # 00:xx:yy:zz:aa:aa
    MID_LINEAR = "mid_linear"            # 00:xx:yy:aa:aa:zz
    HIGH_LINEAR = "high_linear"          # 00:xx:aa:aa:yy:zz
    LOW_RANDOM = "low_random"            # 00:xx:yy:bb:bb:bb
    MIXED = "mixed"                      # LOW_RANDOM and LOW_LINEAR interleaved


def _linear(i: int, position: int) -> MacAddress:
    octets = [0x00, XX, YY, ZZ, 0x00, 0x00]
    if position == 4:
        octets = [0x00, XX, YY, ZZ, (i >> 8) & 0xFF, i & 0xFF]
    elif position == 3:
        octets = [0x00, XX, YY, (i >> 8) & 0xFF, i & 0xFF, ZZ]
    elif position == 2:
        octets = [0x00, XX, (i >> 8) & 0xFF, i & 0xFF, YY, ZZ]
    return MacAddress.from_octets(octets)


def _random_low(count: int, rng: RngStream, taken: set) -> List[MacAddress]:
    addresses = []
    while len(addresses) < count:
        low = rng.bytes(3)
        addr = MacAddress.from_octets([0x00, XX, YY, low[0], low[1], low[2]])
        if addr.value in taken:
            continue
        taken.add(addr.value)
        addresses.append(addr)
    return addresses


def address_pattern(pattern: AddressPattern, count: int = 4096, seed: int = 1) -> List[MacAddress]:
    """
    Generate distinct probe addresses

    Args:
        pattern: Address layout
        count: Number of addresses (at most 65536 for linear layouts)
        seed: Seed for the random layouts

    Returns:
        List of unicast addresses
    """
    pattern = AddressPattern(pattern)
    if not 0 < count <= 65536:
        raise ConfigurationError(f"Probe count must be in 1..65536, got {count}")
    rng = RngStream.for_name(seed, f"probe.{pattern.value}")
    if pattern is AddressPattern.LOW_LINEAR:
        return [_linear(i, 4) for i in range(count)]
    if pattern is AddressPattern.MID_LINEAR:
        return [_linear(i, 3) for i in range(count)]
    if pattern is AddressPattern.HIGH_LINEAR:
        return [_linear(i, 2) for i in range(count)]
    if pattern is AddressPattern.LOW_RANDOM:
        return _random_low(count, rng, set())
    linear = [_linear(i, 4) for i in range(count - count // 2)]
    randoms = _random_low(count // 2, rng, {a.value for a in linear})
    mixed: List[MacAddress] = []
    for i in range(count):
        source = linear if i % 2 == 0 else randoms
        if i // 2 < len(source):
            mixed.append(source[i // 2])
    return mixed


class ProbeRequester:
    """Sends one request to each address at a fixed interval"""

    def __init__(self, engine: SimEngine, host: Host, interval: SimTime):
        self.engine = engine
        self.host = host
        self.interval = interval
        self.sent = 0
        self._targets: List[MacAddress] = []
        self._next = 0

    def run(self, targets: List[MacAddress], at: SimTime) -> None:
        self._targets = list(targets)
        self._next = 0
        self.engine.schedule(at, self.host.name, self._send)

    def _send(self) -> None:
        if self._next >= len(self._targets):
            return
        frame = Frame(
            src=self.host.mac,
            dst=self._targets[self._next],
            size_bytes=MIN_FRAME_BYTES,
            injected_at=self.engine.now(),
        )
        if self.host.send(frame) is SendResult.RETRY_LATER:
            self.engine.schedule_in(self.host.config.send_retry_backoff, self.host.name, self._send)
            return
        self._next += 1
        self.sent += 1
        self.engine.schedule_in(self.interval, self.host.name, self._send)


@dataclass
class ProbeResult:
    pattern: AddressPattern
    count: int
    flooded: int
    learned_count: int
    table_entries: int


def mac_probe(
    switch_config: Optional[SwitchConfig] = None,
    pattern: AddressPattern = AddressPattern.LOW_LINEAR,
    count: int = 4096,
    seed: int = 1,
    interval: SimTime = 2 * US,
) -> ProbeResult:
    """
    Measure how many of ``count`` addresses a switch can hold

    Args:
        switch_config: Switch under test (table cleared at start)
        pattern: Address layout of the probed destinations
        count: Number of probed addresses
        seed: Run seed
        interval: Gap between requests

    Returns:
        ProbeResult with learned_count = count - frames seen by the listener
    """
    engine = SimEngine(seed)
    metrics = MetricSet()
    switch = Switch(engine, switch_config or SwitchConfig(name="dut"), metrics)
    hosts = {}
    for i, role in enumerate(("requester", "server", "listener")):
        host = Host(engine, HostConfig(
            name=role,
            mac=MacAddress.from_octets([0x02, 0, 0, 0, 0, i + 1]),
            promiscuous=role != "requester",
        ), metrics)
        port = switch.add_port(role)
        link = Link(engine, f"l.{role}", port, host, GE_BPS)
        port.attach(link)
        host.attach(link)
        hosts[role] = host
    switch.start()
    switch.mac_table.clear()
    # requester is a management-entered station so it never competes for table space
    switch.mac_table.add_static(hosts["requester"].mac, 1, "requester")

    requester = ProbeRequester(engine, hosts["requester"], interval)
    hosts["requester"].bind()
    Responder(engine, hosts["server"], mirror_destination=True)
    listener = Listener(hosts["listener"])

    targets = address_pattern(pattern, count, seed)
    phase = count * interval + 1 * MS
    requester.run(targets, 0)
    engine.run_until(phase)
    listener.reset()
    requester.run(targets, engine.now())
    engine.run_until(2 * phase)

    return ProbeResult(
        pattern=AddressPattern(pattern),
        count=count,
        flooded=listener.frames,
        learned_count=count - listener.frames,
        table_entries=len(switch.mac_table),
    )
