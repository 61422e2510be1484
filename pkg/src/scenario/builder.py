"""
Build a runnable simulation from a validated ScenarioDoc
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from src.dataflow.host import Host, HostConfig
from src.dataflow.messages import FLOW_IDS
from src.dataflow.system import DataflowConfig, DataflowSystem
from src.ether.frame import MacAddress, VlanTag
from src.ether.link import Link
from src.fabric.mac_table import MacTableConfig
from src.fabric.switch import Switch, SwitchConfig, SwitchPort
from src.metrics.metric_set import MetricSet
from src.scenario.document import NodeDoc, ScenarioDoc, SwitchDoc
from src.scenario.parser import port_memberships, split_endpoint
from src.sim_core.engine import RunSummary, SimEngine
from src.traffic.sinks import Listener, Responder, SinkConfig
from src.traffic.sources import Destination, SourceConfig, TrafficSource
from src.utils.error_handler import ConfigurationError

# roles whose actors need other actors to exist first
_ROLE_ORDER = {"host": 0, "rob": 1, "prob": 2, "l2pu": 3, "sfi": 4, "l2sv": 5, "dfm": 6}


def switch_config(doc: SwitchDoc) -> SwitchConfig:
    table = doc.mac_table
    return SwitchConfig(
        name=doc.name,
        ingress_mode=doc.ingress_mode,
        fc_propagation=doc.fc_propagation,
        fabric_capacity_fraction=doc.fabric_capacity_fraction,
        forwarding_latency=doc.forwarding_latency,
        forwarding_jitter=doc.forwarding_jitter,
        egress_buffer_bytes=doc.egress_buffer_bytes,
        ingress_buffer_bytes=doc.ingress_buffer_bytes,
        xoff_fraction=doc.xoff_fraction,
        xon_fraction=doc.xon_fraction,
        scheduler=doc.scheduler,
        wrr_weights=dict(doc.wrr_weights),
        multicast_rate_cap=doc.multicast_rate_cap,
        storm_threshold=doc.storm_threshold,
        mac_table=MacTableConfig(
            mode=table.mode,
            capacity=table.capacity,
            key_octets=tuple(table.key_octets),
            bucket_count=table.bucket_count,
            bucket_depth=table.bucket_depth,
            aging_time=table.aging_time,
        ),
    )


def host_config(doc: NodeDoc, mac: MacAddress) -> HostConfig:
    sink = SinkConfig(promiscuous=doc.promiscuous, emulation=doc.emulation, service_time=doc.service_time)
    return HostConfig(
        name=doc.name,
        mac=mac,
        nic_queue_bytes=doc.nic_queue_bytes,
        send_retry_backoff=doc.send_retry_backoff,
        rx_ring_bytes=doc.rx_ring_bytes,
        rx_rate_bps=doc.rx_rate_bps,
        socket_buffer_bytes=doc.socket_buffer_bytes,
        emulation=sink.emulation,
        service_time=sink.service_time,
        promiscuous=sink.promiscuous,
    )


def node_mac(index: int) -> MacAddress:
    """Locally administered address of the index-th node"""
    return MacAddress.from_octets([0x02, 0x00, 0x00, (index >> 16) & 0xFF, (index >> 8) & 0xFF, index & 0xFF])


@dataclass
class Simulation:
    """Everything one scenario run owns"""
    doc: ScenarioDoc
    engine: SimEngine
    metrics: MetricSet
    switches: Dict[str, Switch] = field(default_factory=dict)
    hosts: Dict[str, Host] = field(default_factory=dict)
    links: List[Link] = field(default_factory=list)
    sources: List[TrafficSource] = field(default_factory=list)
    listeners: Dict[str, Listener] = field(default_factory=dict)
    responders: Dict[str, Responder] = field(default_factory=dict)
    dataflow: Optional[DataflowSystem] = None
    flow_names: Dict[int, str] = field(default_factory=dict)
    # (source name, destination name) -> flow id
    flows: Dict[Tuple[str, str], int] = field(default_factory=dict)
    summary: Optional[RunSummary] = None

    def run(self) -> RunSummary:
        """Start every actor and run to the document's run length"""
        run_length = self.doc.run_length
        for node in self.doc.nodes:
            if node.announce:
                host = self.hosts[node.name]
                self.engine.schedule_in(0, host.name, host.announce)
        for switch in self.switches.values():
            switch.start()
        for source in self.sources:
            source.start()
        if self.dataflow is not None:
            self.dataflow.start(run_length)
        self.summary = self.engine.run_until(run_length)
        self.metrics.close(run_length)
        return self.summary

    def flow_of(self, source_name: str, dst_name: str) -> int:
        return self.flows[(source_name, dst_name)]

    def link_speed(self, node: str) -> int:
        return self.hosts[node].link.speed_bps

    def counters(self) -> Dict[str, int]:
        """Named counters of every component"""
        snapshot: Dict[str, int] = {}
        for switch in self.switches.values():
            snapshot.update(switch.counter_snapshot())
        for link in self.links:
            for direction in link.directions():
                prefix = f"link.{direction.name}"
                stats = direction.stats
                snapshot[f"{prefix}.frames_sent"] = stats.frames_sent
                snapshot[f"{prefix}.pause_frames"] = stats.pause_frames
                snapshot[f"{prefix}.paused_ns"] = direction.paused_time()
                snapshot[f"{prefix}.fc_ignored"] = stats.fc_ignored
        for host in self.hosts.values():
            for name, value in host.counters.items():
                snapshot[f"host.{host.name}.{name}"] = value
        for name, listener in self.listeners.items():
            snapshot[f"listener.{name}.frames"] = listener.frames
        if self.dataflow is not None:
            snapshot.update(self.dataflow.counter_snapshot())
        snapshot["engine.events_processed"] = self.engine.counters.processed
        snapshot["engine.events_cancelled"] = self.engine.counters.cancelled
        return snapshot

    def conservation_holds(self) -> bool:
        """Per-flow delivered + dropped + in flight = sent, and every switch census"""
        in_flight_ok = all(s.in_flight >= 0 for s in self.metrics.flows.values() if not s.multicast)
        return in_flight_ok and all(sw.conservation_holds() for sw in self.switches.values())


def build(doc: ScenarioDoc, seed: Optional[int] = None) -> Simulation:
    """
    Instantiate switches, hosts, links, trunks, VLANs, sources and DataFlow actors

    Args:
        doc: Validated document
        seed: Overrides doc.seed when given

    Returns:
        Simulation ready to run
    """
    engine = SimEngine(doc.run_seed(seed))
    metrics = MetricSet(warmup_ns=doc.warmup_ns, window_ns=doc.window)
    sim = Simulation(doc, engine, metrics)

    for sw_doc in doc.switches:
        sim.switches[sw_doc.name] = Switch(engine, switch_config(sw_doc), metrics)

    for index, node in enumerate(doc.nodes):
        mac = MacAddress.parse(node.mac) if node.mac else node_mac(index + 1)
        sim.hosts[node.name] = Host(engine, host_config(node, mac), metrics)

    for i, link_doc in enumerate(doc.links):
        ends = [_endpoint(sim, e) for e in (link_doc.a, link_doc.b)]
        name = link_doc.name or f"l{i}"
        link = Link(engine, name, ends[0], ends[1], link_doc.speed, link_doc.propagation, link_doc.fc)
        for end in ends:
            end.attach(link)
        sim.links.append(link)

    for trunk in doc.trunks:
        switch = sim.switches[trunk.switch]
        switch.add_trunk(trunk.name, trunk.ports)
        for port in trunk.down:
            switch.set_port_up(port, False)

    for (switch_name, port), entry in sorted(port_memberships(doc).items()):
        sim.switches[switch_name].vlans.configure_port(port, entry["pvid"], entry["tagged"], entry["untagged"])

    _build_sources(sim)
    _build_apps(sim)
    return sim


def _endpoint(sim: Simulation, endpoint: str):
    switch_name, name = split_endpoint(endpoint)
    if switch_name is None:
        return sim.hosts[name]
    switch = sim.switches[switch_name]
    try:
        return switch.port(name)
    except ConfigurationError:
        return switch.add_port(name)


def _build_sources(sim: Simulation) -> None:
    doc = sim.doc
    next_flow = 1 + max((d.flow_id or 0 for s in doc.sources for d in s.destinations), default=0)
    for source_doc in doc.sources:
        host = sim.hosts[source_doc.node]
        destinations = []
        for dest in source_doc.destinations:
            flow_id = dest.flow_id
            if flow_id is None:
                flow_id, next_flow = next_flow, next_flow + 1
            if dest.node is not None:
                mac, dst_name = sim.hosts[dest.node].mac, dest.node
            else:
                mac, dst_name = MacAddress.parse(dest.mac), dest.mac
            sim.metrics.register_flow(flow_id, source_doc.node, dst_name)
            sim.flow_names[flow_id] = f"{source_doc.name}>{dst_name}"
            sim.flows[(source_doc.name, dst_name)] = flow_id
            destinations.append(Destination(mac, dest.weight, flow_id, dst_name))
        tag = None
        if source_doc.vlan is not None or source_doc.priority:
            tag = VlanTag(source_doc.vlan or 1, source_doc.priority)
        config = SourceConfig(
            name=source_doc.name,
            pattern=source_doc.pattern,
            offered_load=source_doc.offered_load,
            frame_size_bytes=source_doc.frame_size,
            destinations=destinations,
            tag=tag,
            start=source_doc.start,
            stop=source_doc.stop,
            order=source_doc.order,
            frame_rate_hz=source_doc.frame_rate_hz,
        )
        sim.sources.append(TrafficSource(sim.engine, host, config, host.link.speed_bps))


def _build_apps(sim: Simulation) -> None:
    doc = sim.doc
    if doc.dataflow is not None:
        sim.dataflow = DataflowSystem(sim.engine, DataflowConfig(**doc.dataflow.model_dump()))
        for kind, flow_id in FLOW_IDS.items():
            sim.metrics.register_flow(flow_id, f"dataflow.{kind.value}", "")
    ordered = sorted(doc.nodes, key=lambda n: _ROLE_ORDER[n.role])
    for node in ordered:
        host = sim.hosts[node.name]
        if node.role != "host":
            getattr(sim.dataflow, f"add_{node.role}")(node.name, host)
        elif node.lazy:
            host.bind(lazy=True)
        elif node.app == "listener":
            sim.listeners[node.name] = Listener(host)
        elif node.app in ("responder", "mirror_responder"):
            sim.responders[node.name] = Responder(
                sim.engine, host, mirror_destination=node.app == "mirror_responder"
            )


def switch_port(sim: Simulation, endpoint: str) -> SwitchPort:
    switch_name, name = split_endpoint(endpoint)
    return sim.switches[switch_name].port(name)
