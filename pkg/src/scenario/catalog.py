"""
Canned scenarios

Each entry builds a ScenarioDoc from a few knobs (``alpha``, ``scheduler``, ...)
and names what it measures and its golden report. Knobs are given
with ``--param knob=value``; any other ``--param`` is a dotted-path override of
the built document.
"""
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import yaml

from src.fabric.mac_table import MacTableMode
from src.metrics.export import PROBE_COLUMNS, write_csv
from src.scenario.builder import switch_config
from src.scenario.document import ScenarioDoc
from src.scenario.parser import from_raw
from src.scenario.runner import EXIT_FATAL, EXIT_OK, Procedure, RunOutcome, output_dir_for, run_scenario
from src.traffic.probes import AddressPattern, mac_probe
from src.utils.error_handler import ExportError, UnknownScenarioError
from src.utils.logger import get_logger

logger = get_logger(__name__)

GOLDEN_DIR = Path("data") / "golden"
# data frames start after the stations' announce broadcasts are learned
TRAFFIC_START = "50us"
# about one maximum-size frame time at GE
CONGESTION_JITTER = "12us"


# --------------------------------------------------------------- topology kit

def _node(name: str, **options) -> Dict[str, Any]:
    return {"name": name, **options}


def _star(switch: str, nodes: Sequence[Dict[str, Any]], speed: Any = "GE", fc: bool = True) -> List[Dict[str, Any]]:
    """One link per node to a same-named port of ``switch``"""
    return [{"a": n["name"], "b": f"{switch}:{n['name']}", "speed": speed, "fc": fc} for n in nodes]


def _cbr(name: str, node: str, load: float, destinations: List[Dict[str, Any]], **options) -> Dict[str, Any]:
    return {
        "name": name,
        "node": node,
        "pattern": "cbr",
        "offered_load": load,
        "destinations": destinations,
        "start": TRAFFIC_START,
        **options,
    }


# ------------------------------------------------------------------- builders

def build_congestion(
    alpha: float = 1.0,
    fc: bool = True,
    sink_a: str = "normal",
    ingress_mode: str = "voq",
    run_length: str = "50ms",
) -> Dict[str, Any]:
    """
    Six stations on one switch: X sends all of its traffic to A, Y splits 30/70
    between A and B, Z splits 50/50 between A and C. A is oversubscribed 1.8x
    at alpha = 1.

    The switch adds up to one frame time of forwarding jitter, so the order in
    which the senders reach A's full queue varies and tail drop is shared by
    every A-bound flow.
    """
    nodes = [_node(n) for n in ("X", "Y", "Z", "B", "C")]
    nodes.append(_node("A", emulation="dead" if sink_a == "dead" else "normal"))
    return {
        "name": "fc_congestion",
        "description": f"alpha={alpha} fc={fc} sink_a={sink_a} ingress={ingress_mode}",
        "run_length": run_length,
        "switches": [{
            "name": "sw",
            "fc_propagation": fc,
            "ingress_mode": ingress_mode,
            "forwarding_jitter": CONGESTION_JITTER,
        }],
        "nodes": nodes,
        "links": _star("sw", nodes, fc=fc),
        "sources": [
            _cbr("X", "X", alpha, [{"node": "A", "flow_id": 1}]),
            _cbr("Y", "Y", alpha, [{"node": "A", "weight": 0.3, "flow_id": 2},
                                   {"node": "B", "weight": 0.7, "flow_id": 3}]),
            _cbr("Z", "Z", alpha, [{"node": "A", "weight": 0.5, "flow_id": 4},
                                   {"node": "C", "weight": 0.5, "flow_id": 5}]),
        ],
    }


def build_saturation(
    load: float = 0.5,
    fabric: float = 0.66,
    hosts: int = 8,
    pattern: str = "poisson",
    ingress_buffer: int = 48 * 1024,
    run_length: str = "20ms",
) -> Dict[str, Any]:
    """
    All-to-all traffic through a fabric of limited capacity, without flow control

    Ingress buffers are small enough that a sustained overload of the fabric
    overflows them within the run.
    """
    nodes = [_node(f"h{i}") for i in range(hosts)]
    sources = []
    for node in nodes:
        others = [{"node": n["name"]} for n in nodes if n is not node]
        sources.append({
            "name": node["name"],
            "node": node["name"],
            "pattern": pattern,
            "offered_load": load,
            "order": "random",
            "destinations": others,
            "start": TRAFFIC_START,
        })
    return {
        "name": "saturation_sweep",
        "description": f"load={load} fabric={fabric}",
        "run_length": run_length,
        "switches": [{
            "name": "sw",
            "fabric_capacity_fraction": fabric,
            "fc_propagation": False,
            "ingress_buffer_bytes": ingress_buffer,
        }],
        "nodes": nodes,
        "links": _star("sw", nodes, fc=False),
        "sources": sources,
    }


def build_qos(
    scheduler: str = "wrr",
    load: float = 0.5,
    classes: int = 4,
    weights: Sequence[float] = (10, 20, 30, 40),
    loads: Optional[Sequence[float]] = None,
    run_length: str = "50ms",
) -> Dict[str, Any]:
    """
    One sender per class, class i on priority i + 1, all to a single receiver

    ``loads`` gives each class its own offered load and overrides ``load`` and
    ``classes``.
    """
    loads = list(loads) if loads else [load] * classes
    classes = len(loads)
    senders = [_node(f"c{i + 1}") for i in range(classes)]
    nodes = senders + [_node("rx")]
    switch: Dict[str, Any] = {"name": "sw", "scheduler": scheduler, "fc_propagation": False}
    if scheduler == "wrr":
        switch["wrr_weights"] = {i + 1: float(weights[i]) for i in range(min(classes, len(weights)))}
    return {
        "name": f"qos_{scheduler}",
        "description": f"{classes} classes offering {loads}",
        "run_length": run_length,
        "switches": [switch],
        "nodes": nodes,
        "links": _star("sw", nodes, fc=False),
        "sources": [
            _cbr(s["name"], s["name"], loads[i], [{"node": "rx", "flow_id": i + 1}], priority=i + 1)
            for i, s in enumerate(senders)
        ],
    }


def build_mac_probe(
    mode: str = "hash_bucket",
    capacity: int = 16384,
    bucket_depth: int = 70,
    count: int = 4096,
    patterns: Any = "all",
) -> Dict[str, Any]:
    """Switch under test with its requester, mirroring server and listener"""
    nodes = [
        _node("requester", announce=False),
        _node("server", app="mirror_responder", promiscuous=True, announce=False),
        _node("listener", promiscuous=True, announce=False),
    ]
    return {
        "name": "mac_probe",
        "description": f"{mode} table, {count} addresses",
        "run_length": "1ms",
        "switches": [{
            "name": "dut",
            "mac_table": {"mode": mode, "capacity": capacity, "bucket_depth": bucket_depth},
        }],
        "nodes": nodes,
        "links": _star("dut", nodes),
    }


def build_aging(aging_time: str = "300s", rate_hz: float = 30.0, run_length: str = "1s") -> Dict[str, Any]:
    """Low-rate requester against a responder; floods after warm-up mean the entry aged out"""
    nodes = [_node("requester"), _node("server", app="responder"), _node("observer", promiscuous=True)]
    return {
        "name": "mac_aging",
        "description": f"aging_time={aging_time} requests at {rate_hz} Hz",
        "run_length": run_length,
        "switches": [{"name": "sw", "mac_table": {"aging_time": aging_time}}],
        "nodes": nodes,
        "links": _star("sw", nodes),
        "sources": [{
            "name": "requester",
            "node": "requester",
            "frame_rate_hz": rate_hz,
            "frame_size": 64,
            "destinations": [{"node": "server", "flow_id": 1}],
            "start": TRAFFIC_START,
        }],
    }


def build_vlan_suite(
    layout: str = "disjoint",
    load: float = 0.3,
    vlan2_load: float = 0.5,
    frame_size: int = 1518,
    run_length: str = "20ms",
) -> Dict[str, Any]:
    """
    Two senders, one per VLAN, each sending half to a known station and half to
    an unknown address that is flooded. Receivers listen promiscuously so any
    frame crossing a VLAN boundary is counted.

    Layouts: ``single`` (everything in VLAN 1), ``disjoint`` (VLANs 10 and 20),
    ``overlapping`` (a shared station untagged in VLAN 10 and tagged in VLAN 20).
    """
    nodes = [
        _node("tx10"), _node("r10a"), _node("r10b", promiscuous=True),
        _node("tx20"), _node("r20a"), _node("r20b", promiscuous=True),
    ]
    if layout == "overlapping":
        nodes.append(_node("shared", promiscuous=True))
    vlans: List[Dict[str, Any]] = []
    if layout in ("disjoint", "overlapping"):
        vlans = [
            {"id": 10, "switch": "sw", "untagged": ["tx10", "r10a", "r10b"]},
            {"id": 20, "switch": "sw", "untagged": ["tx20", "r20a", "r20b"]},
        ]
        if layout == "overlapping":
            vlans[0]["untagged"].append("shared")
            vlans[1]["tagged"] = ["shared"]
    return {
        "name": "vlan_suite",
        "description": f"layout={layout} vlan2_load={vlan2_load}",
        "run_length": run_length,
        "switches": [{"name": "sw"}],
        "nodes": nodes,
        "links": _star("sw", nodes),
        "vlans": vlans,
        "sources": [
            _cbr("tx10", "tx10", load, [{"node": "r10a", "flow_id": 1},
                                        {"mac": "02:ee:00:00:00:10", "flow_id": 2}],
                 frame_size=frame_size),
            _cbr("tx20", "tx20", vlan2_load, [{"node": "r20a", "flow_id": 3},
                                              {"mac": "02:ee:00:00:00:20", "flow_id": 4}],
                 frame_size=frame_size),
        ],
    }


def build_vlan_loop(separated: bool = False, storm_threshold: int = 1000, run_length: str = "20ms") -> Dict[str, Any]:
    """
    Two switches joined by two parallel links and one injected broadcast. Without
    VLAN separation the broadcast circulates until the run ends.
    """
    nodes = [_node("h1", announce=False), _node("h2", announce=False)]
    switches = [{"name": s, "storm_threshold": storm_threshold} for s in ("s1", "s2")]
    links = [
        {"a": "h1", "b": "s1:h1"},
        {"a": "h2", "b": "s2:h2"},
        {"a": "s1:p1", "b": "s2:p1"},
        {"a": "s1:p2", "b": "s2:p2"},
    ]
    vlans: List[Dict[str, Any]] = []
    if separated:
        vlans = [
            {"id": 10, "switch": "s1", "untagged": ["h1", "p1"]},
            {"id": 10, "switch": "s2", "untagged": ["h2", "p1"]},
            {"id": 20, "switch": "s1", "untagged": ["p2"]},
            {"id": 20, "switch": "s2", "untagged": ["p2"]},
        ]
    return {
        "name": "vlan_loop",
        "description": f"separated={separated}",
        "run_length": run_length,
        "switches": switches,
        "nodes": nodes,
        "links": links,
        "vlans": vlans,
        "sources": [{
            "name": "broadcast",
            "node": "h1",
            "frame_rate_hz": 1000.0,
            "frame_size": 64,
            "destinations": [{"mac": "ff:ff:ff:ff:ff:ff", "flow_id": 1}],
            "stop": "1us",
        }],
    }


def build_trunk(
    senders: int = 8,
    receivers: int = 8,
    load: float = 0.1,
    links: int = 2,
    run_length: str = "20ms",
) -> Dict[str, Any]:
    """Senders on one switch, receivers on another, joined by a trunk"""
    left = [_node(f"s{i}") for i in range(senders)]
    right = [_node(f"r{i}") for i in range(receivers)]
    members = [f"t{i}" for i in range(links)]
    flow_id = 0
    sources = []
    for sender in left:
        destinations = []
        for receiver in right:
            flow_id += 1
            destinations.append({"node": receiver["name"], "flow_id": flow_id})
        sources.append(_cbr(sender["name"], sender["name"], load, destinations))
    return {
        "name": "trunk_balance",
        "description": f"{senders * receivers} connections over {links} links",
        "run_length": run_length,
        "switches": [{"name": "left"}, {"name": "right"}],
        "nodes": left + right,
        "links": _star("left", left) + _star("right", right) + [
            {"a": f"left:{m}", "b": f"right:{m}"} for m in members
        ],
        "trunks": [
            {"switch": "left", "name": "trunk", "ports": members},
            {"switch": "right", "name": "trunk", "ports": members},
        ],
        "sources": sources,
    }


def _dataflow_nodes(robs: int, l2pus: int, sfis: int) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    """(ROB nodes, central nodes)"""
    rob_nodes = [_node(f"rob{i:03d}", role="rob") for i in range(robs)]
    central = [_node("prob", role="prob"), _node("l2sv", role="l2sv"), _node("dfm", role="dfm")]
    central += [_node(f"l2pu{i}", role="l2pu") for i in range(l2pus)]
    central += [_node(f"sfi{i}", role="sfi") for i in range(sfis)]
    return rob_nodes, central


def build_dataflow(
    robs: int = 160,
    l2pus: int = 8,
    sfis: int = 4,
    lvl1_rate_hz: float = 1000.0,
    accept_fraction: float = 2 / 75,
    sfi_credit: Optional[int] = 4,
    fc: bool = True,
    run_length: str = "500ms",
) -> Dict[str, Any]:
    """Full DataFlow population on one central GE switch"""
    rob_nodes, central = _dataflow_nodes(robs, l2pus, sfis)
    nodes = rob_nodes + central
    return {
        "name": "dataflow_e2e",
        "description": f"{robs} ROBs, {l2pus} L2PUs, {sfis} SFIs at {lvl1_rate_hz} Hz",
        "run_length": run_length,
        "switches": [{"name": "central", "fc_propagation": fc}],
        "nodes": nodes,
        "links": _star("central", nodes, fc=fc),
        "dataflow": {
            "lvl1_rate_hz": lvl1_rate_hz,
            "accept_fraction": accept_fraction,
            "sfi_credit": sfi_credit,
        },
    }


def build_eb_shaping(
    credit: Optional[int] = 4,
    fc: bool = False,
    robs: int = 32,
    fragment_bytes: int = 4096,
    egress_buffer_bytes: int = 32 * 1024,
    lvl1_rate_hz: float = 500.0,
    run_length: str = "200ms",
) -> Dict[str, Any]:
    """
    Event building into one SFI behind a small switch buffer. Without a credit
    limit every ROB answers at once and the SFI port overflows; with credit 4
    the SFI never has more fragments in flight than the buffer holds.
    """
    rob_nodes, central = _dataflow_nodes(robs, 1, 1)
    nodes = rob_nodes + central
    return {
        "name": "eb_shaping",
        "description": f"sfi_credit={credit} fc={fc}",
        "run_length": run_length,
        "switches": [{
            "name": "eb",
            "fc_propagation": fc,
            "egress_buffer_bytes": egress_buffer_bytes,
        }],
        "nodes": nodes,
        "links": _star("eb", nodes, fc=fc),
        "dataflow": {
            "lvl1_rate_hz": lvl1_rate_hz,
            "accept_fraction": 1.0,
            "roi_min_robs": 1,
            "roi_max_robs": 2,
            "fragment_bytes": fragment_bytes,
            "sfi_credit": credit,
            "request_timeout": "5ms",
            "drain_window": "50ms",
        },
    }


def build_two_stage(
    robs: int = 160,
    robs_per_concentrator: int = 16,
    l2pus: int = 8,
    sfis: int = 4,
    lvl1_rate_hz: float = 1000.0,
    run_length: str = "500ms",
) -> Dict[str, Any]:
    """
    Two-stage network: ROBs on FE into concentrator switches with GE uplinks to
    a central switch that carries LVL2 and event-building traffic
    """
    rob_nodes, central = _dataflow_nodes(robs, l2pus, sfis)
    switches = [{"name": "central"}]
    links = _star("central", central)
    for c in range(-(-robs // robs_per_concentrator)):
        name = f"conc{c}"
        switches.append({"name": name})
        group = rob_nodes[c * robs_per_concentrator:(c + 1) * robs_per_concentrator]
        links += _star(name, group, speed="FE")
        links.append({"a": f"{name}:up", "b": f"central:{name}", "speed": "GE"})
    return {
        "name": "fig1_scaled",
        "description": f"{robs} ROBs behind {len(switches) - 1} concentrators",
        "run_length": run_length,
        "switches": switches,
        "nodes": rob_nodes + central,
        "links": links,
        "dataflow": {"lvl1_rate_hz": lvl1_rate_hz},
    }


# ----------------------------------------------------------------- procedures

def run_probe_table(
    doc: ScenarioDoc,
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    knobs: Optional[Dict[str, Any]] = None,
) -> RunOutcome:
    """Run the address probe for each pattern against the document's switch and write probe.csv"""
    knobs = knobs or {}
    seed = doc.run_seed(seed)
    target = output_dir_for(doc, out_dir)
    config = switch_config(doc.switches[0])
    count = int(knobs.get("count", 4096))
    wanted = knobs.get("patterns", "all")
    patterns = list(AddressPattern) if wanted == "all" else [AddressPattern(p) for p in wanted]

    rows, counters = [], {}
    for pattern in patterns:
        result = mac_probe(config, pattern, count, seed)
        rows.append((pattern.value, MacTableMode(config.mac_table.mode).value, count,
                     result.flooded, result.learned_count, result.table_entries))
        counters[f"probe.{pattern.value}.learned_count"] = result.learned_count
        logger.info(
            f"Probe {pattern.value}: learned {result.learned_count} of {count}",
            extra_fields={"pattern": pattern.value, "learned_count": result.learned_count},
        )
    try:
        path = write_csv(target / "probe.csv", PROBE_COLUMNS, rows)
    except ExportError as e:
        return RunOutcome(doc.name, seed, EXIT_FATAL, target, counters=counters, error=str(e))
    return RunOutcome(doc.name, seed, EXIT_OK, target, {"probe": path}, counters)


# -------------------------------------------------------------------- catalog

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    measures: str
    description: str
    build: Callable[..., Dict[str, Any]]
    defaults: Dict[str, Any] = field(default_factory=dict)
    report: str = "flows.csv"
    procedure: Optional[Callable[..., RunOutcome]] = None

    @property
    def golden(self) -> Path:
        return GOLDEN_DIR / self.name / self.report

    def split_params(self, params: Optional[Dict[str, Any]] = None) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        """(builder knobs with defaults filled in, dotted-path overrides)"""
        knobs = dict(self.defaults)
        overrides = {}
        for key, value in (params or {}).items():
            if key in self.defaults:
                knobs[key] = yaml.safe_load(value) if isinstance(value, str) else value
            else:
                overrides[key] = value
        return knobs, overrides

    def scenario(self, params: Optional[Dict[str, Any]] = None) -> ScenarioDoc:
        knobs, overrides = self.split_params(params)
        raw = self.build(**knobs)
        raw["name"] = self.name
        return from_raw(raw, overrides)

    def runner(self, params: Optional[Dict[str, Any]] = None) -> Procedure:
        if self.procedure is None:
            return run_scenario
        knobs, _ = self.split_params(params)
        return partial(self.procedure, knobs=knobs)


def _entry(name: str, measures: str, description: str, build: Callable[..., Dict[str, Any]], **defaults) -> CatalogEntry:
    return CatalogEntry(name, measures, description, build, defaults)


CATALOG: Dict[str, CatalogEntry] = {
    entry.name: entry for entry in (
        _entry("saturation_sweep", "loss and latency versus load",
               "All-to-all Poisson traffic through a fabric limited to 66% of the port sum",
               build_saturation, load=0.5, fabric=0.66, hosts=8, pattern="poisson",
               ingress_buffer=48 * 1024, run_length="20ms"),
        CatalogEntry(
            "mac_probe", "address table capacity",
            "Addresses a switch can hold for each probe address pattern", build_mac_probe,
            dict(mode="hash_bucket", capacity=16384, bucket_depth=70, count=4096, patterns="all"),
            report="probe.csv", procedure=run_probe_table,
        ),
        _entry("qos_strict", "strict priority shares",
               "Four classes at 30% each into one port, highest priority first",
               partial(build_qos, "strict"), load=0.3, classes=4, loads=None, run_length="50ms"),
        _entry("qos_wrr", "weighted round robin shares",
               "Four saturating classes with weights 10/20/30/40",
               partial(build_qos, "wrr"), load=0.5, classes=4, weights=[10, 20, 30, 40], loads=None,
               run_length="50ms"),
        _entry("fc_congestion", "congestion spreading",
               "Oversubscribed port with and without flow control",
               build_congestion, alpha=1.0, fc=True, sink_a="normal", ingress_mode="voq", run_length="50ms"),
        _entry("dead_node", "blocking by a dead receiver",
               "A receiver that never drains but keeps flow control asserted",
               build_congestion, alpha=1.0, fc=True, sink_a="dead", ingress_mode="voq", run_length="50ms"),
        _entry("hol_blocking", "head-of-line blocking",
               "The congestion setup with shared ingress FIFOs instead of virtual output queues",
               build_congestion, alpha=1.0, fc=False, sink_a="normal", ingress_mode="shared_fifo",
               run_length="50ms"),
        _entry("vlan_suite", "VLAN containment and partitioning",
               "Flooding senders in two VLANs with promiscuous listeners",
               build_vlan_suite, layout="disjoint", load=0.3, vlan2_load=0.5, frame_size=1518,
               run_length="20ms"),
        _entry("vlan_loop", "broadcast storms",
               "Looped two-switch topology with and without VLAN separation",
               build_vlan_loop, separated=False, storm_threshold=1000, run_length="20ms"),
        _entry("trunk_balance", "trunk connection balance",
               "Connections spread over a two-link trunk",
               build_trunk, senders=8, receivers=8, load=0.1, links=2, run_length="20ms"),
        _entry("mac_aging", "address aging",
               "Floods seen by a 30 Hz requester as the aging time varies",
               build_aging, aging_time="300s", rate_hz=30.0, run_length="1s"),
        _entry("dataflow_e2e", "LVL2 and event building",
               "160 ROBs, 8 L2PUs and 4 SFIs at a 1 kHz LVL1 rate",
               build_dataflow, robs=160, l2pus=8, sfis=4, lvl1_rate_hz=1000.0,
               accept_fraction=2 / 75, sfi_credit=4, fc=True, run_length="500ms"),
        _entry("eb_shaping", "event building traffic shaping",
               "Event building into one SFI with and without a credit limit",
               build_eb_shaping, credit=4, fc=False, robs=32, fragment_bytes=4096,
               egress_buffer_bytes=32 * 1024, lvl1_rate_hz=500.0, run_length="200ms"),
        _entry("fig1_scaled", "two-stage network",
               "ROBs on FE concentrators with GE uplinks to a central switch",
               build_two_stage, robs=160, robs_per_concentrator=16, l2pus=8, sfis=4,
               lvl1_rate_hz=1000.0, run_length="500ms"),
    )
}


def list_scenarios() -> List[CatalogEntry]:
    return list(CATALOG.values())


def get_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownScenarioError(name, sorted(CATALOG)) from None


def get_scenario(name: str, params: Optional[Dict[str, Any]] = None) -> ScenarioDoc:
    """
    Build a canned scenario

    Raises:
        UnknownScenarioError: If the name is not in the catalog
        ValidationError: If a knob or override produces an invalid document
    """
    return get_entry(name).scenario(params)
