"""
Experiment procedures built on the canned scenarios

Each procedure runs one or more simulations and reduces them to the numbers a
measurement reports: per-receiver goodput, loss onset, per-class shares, VLAN
violations, trunk census and so on. Shares are fractions of a line rate counted
in wire bytes (frame + preamble + inter-frame gap) after warm-up.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.ether.frame import MacAddress
from src.fabric.trunk import TrunkGroup
from src.scenario.builder import Simulation
from src.scenario.catalog import get_scenario
from src.scenario.runner import execute
from src.sim_core.rng import RngStream
from src.utils.error_handler import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger(__name__)

CONGESTION_RECEIVERS = ("A", "B", "C")
CONGESTION_SOURCES = ("X", "Y", "Z")


def _run(name: str, seed: Optional[int] = None, **params) -> Simulation:
    return execute(get_scenario(name, params), seed)


# ----------------------------------------------------------------- congestion

@dataclass
class CongestionResult:
    alpha: float
    fc: bool
    sink_a: str
    # receiver -> steady-state goodput as a fraction of its line
    goodput: Dict[str, float]
    # source -> lost / sent
    loss: Dict[str, float]
    # (source, receiver) -> goodput fraction
    flow_share: Dict[Tuple[str, str], float]
    # (source, receiver) -> lost / sent
    flow_loss: Dict[Tuple[str, str], float]
    switch_drops: int
    conservation: bool


def congestion_result(sim: Simulation, alpha: float, fc: bool, sink_a: str) -> CongestionResult:
    metrics = sim.metrics
    goodput = {r: 0.0 for r in CONGESTION_RECEIVERS}
    flow_share = {}
    flow_loss = {}
    for (source, receiver), flow_id in sim.flows.items():
        share = metrics.line_share(flow_id, sim.link_speed(receiver))
        flow_share[(source, receiver)] = share
        flow_loss[(source, receiver)] = metrics.loss_rate(flow_id) or 0.0
        goodput[receiver] += share
    loss = {}
    for source in CONGESTION_SOURCES:
        flows = [metrics.flows[f] for (s, _), f in sim.flows.items() if s == source]
        sent = sum(f.sent for f in flows)
        loss[source] = sum(f.dropped for f in flows) / sent if sent else 0.0
    return CongestionResult(
        alpha=alpha,
        fc=fc,
        sink_a=sink_a,
        goodput=goodput,
        loss=loss,
        flow_share=flow_share,
        flow_loss=flow_loss,
        switch_drops=sim.metrics.total("dropped_switch"),
        conservation=sim.conservation_holds(),
    )


def run_congestion_scenario(
    alpha: float,
    fc: bool,
    sink_a: str = "normal",
    seed: Optional[int] = None,
    run_length: str = "50ms",
    ingress_mode: str = "voq",
) -> CongestionResult:
    """
    Three senders at alpha of line rate, one receiver oversubscribed 1.8 alpha

    Args:
        alpha: Offered load of each sender
        fc: Flow control on links and switch
        sink_a: ``normal`` or ``dead`` (never drains, keeps FC asserted)
        seed: Run seed
        run_length: Simulated time
        ingress_mode: ``voq`` or ``shared_fifo``

    Returns:
        CongestionResult with per-receiver goodput and per-source loss
    """
    sim = _run(
        "fc_congestion", seed,
        alpha=alpha, fc=fc, sink_a=sink_a, run_length=run_length, ingress_mode=ingress_mode,
    )
    return congestion_result(sim, alpha, fc, sink_a)


def overloaded(alpha: float, seed: Optional[int] = None, run_length: str = "50ms", buffer_frames: int = 6) -> bool:
    """
    True when the switch drops frames at ``alpha`` without flow control

    The egress buffer is cut to a few frames, so any sustained overload of the
    shared receiver overflows within the run while bursts of simultaneous
    arrivals below the threshold still fit.
    """
    params = {
        "alpha": alpha,
        "fc": False,
        "run_length": run_length,
        "switches.0.egress_buffer_bytes": buffer_frames * 1518,
        # without jitter the arrivals are strictly periodic and only the rate decides
        "switches.0.forwarding_jitter": 0,
    }
    sim = _run("fc_congestion", seed, **params)
    return sim.metrics.total("dropped_switch") > 0


def loss_onset(
    low: float = 0.3,
    high: float = 1.0,
    resolution: float = 0.005,
    seed: Optional[int] = None,
    run_length: str = "50ms",
) -> float:
    """
    Smallest alpha with loss, located by bisection

    Returns:
        Midpoint of the final bracket, within ``resolution`` of the onset
    """
    if not 0 < low < high <= 1:
        raise ConfigurationError(f"Need 0 < low < high <= 1, got {low}, {high}")
    if overloaded(low, seed, run_length) or not overloaded(high, seed, run_length):
        raise ConfigurationError(f"Loss onset is not bracketed by [{low}, {high}]")
    while high - low > resolution:
        mid = (low + high) / 2
        if overloaded(mid, seed, run_length):
            high = mid
        else:
            low = mid
        logger.debug(f"Loss onset bracket [{low:.4f}, {high:.4f}]")
    return (low + high) / 2


def hol_comparison(seed: Optional[int] = None, run_length: str = "50ms") -> Dict[str, CongestionResult]:
    """fc=off congestion run with virtual output queues and with a shared ingress FIFO"""
    return {
        mode: run_congestion_scenario(1.0, False, seed=seed, run_length=run_length, ingress_mode=mode)
        for mode in ("voq", "shared_fifo")
    }


# ------------------------------------------------------------------------ QoS

def water_fill(capacity: float, demands: Sequence[float], weights: Optional[Sequence[float]] = None) -> List[float]:
    """
    Weighted max-min fair allocation of ``capacity``

    Without weights the classes are served in strict priority order, the last
    class highest. With weights the capacity is shared in proportion to the
    weights, and what a satisfied class leaves is redistributed.
    """
    n = len(demands)
    shares = [0.0] * n
    if weights is None:
        remaining = capacity
        for i in range(n - 1, -1, -1):
            shares[i] = min(demands[i], remaining)
            remaining -= shares[i]
        return shares
    active = [i for i in range(n) if demands[i] > 0]
    remaining = capacity
    while active and remaining > 1e-12:
        total = sum(weights[i] for i in active)
        offer = {i: remaining * weights[i] / total for i in active}
        satisfied = [i for i in active if demands[i] - shares[i] <= offer[i]]
        if not satisfied:
            for i in active:
                shares[i] += offer[i]
            break
        for i in satisfied:
            remaining -= demands[i] - shares[i]
            shares[i] = demands[i]
        active = [i for i in active if i not in satisfied]
    return shares


@dataclass
class QosPoint:
    scheduler: str
    offered: List[float]
    shares: List[float]
    expected: List[float]

    @property
    def aggregate_offered(self) -> float:
        return sum(self.offered)

    @property
    def max_deviation(self) -> float:
        return max(abs(s - e) for s, e in zip(self.shares, self.expected))


def run_qos_scenario(
    scheduler: str,
    class_offered_loads: Sequence[float],
    weights: Sequence[float] = (10, 20, 30, 40),
    seed: Optional[int] = None,
    run_length: str = "50ms",
) -> QosPoint:
    """Per-class goodput at the shared receiver, with the analytic allocation for comparison"""
    loads = list(class_offered_loads)
    name = "qos_wrr" if scheduler == "wrr" else "qos_strict"
    params = {"loads": loads, "run_length": run_length}
    if scheduler == "wrr":
        params["weights"] = list(weights)
    sim = _run(name, seed, **params)
    speed = sim.link_speed("rx")
    shares = [sim.metrics.line_share(sim.flow_of(f"c{i + 1}", "rx"), speed) for i in range(len(loads))]
    expected = water_fill(1.0, loads, list(weights)[:len(loads)] if scheduler == "wrr" else None)
    return QosPoint(scheduler, loads, shares, expected)


def qos_sweep(
    scheduler: str,
    per_class_loads: Sequence[float],
    classes: int = 4,
    seed: Optional[int] = None,
    run_length: str = "50ms",
) -> List[QosPoint]:
    """One QoS point per per-class load, every class offering the same load"""
    return [
        run_qos_scenario(scheduler, [load] * classes, seed=seed, run_length=run_length)
        for load in per_class_loads
    ]


# ----------------------------------------------------------------------- VLAN

VLAN_FLOWS = {10: (1, 2), 20: (3, 4)}
# promiscuous listener -> VLAN it belongs to
VLAN_LISTENERS = {"r10b": 10, "r20b": 20}


@dataclass
class VlanSuiteReport:
    # layout -> frames of one VLAN delivered to a station of the other
    violations: Dict[str, int] = field(default_factory=dict)
    # layout -> frames the ingress filter refused
    ingress_rejects: Dict[str, int] = field(default_factory=dict)
    # VLAN 2 load -> VLAN 1 latency histogram bins
    partition_latency: Dict[float, List[Tuple[int, int]]] = field(default_factory=dict)
    # separated -> storm detected on any switch
    storm: Dict[bool, bool] = field(default_factory=dict)
    frames: Dict[str, int] = field(default_factory=dict)

    @property
    def partition_isolated(self) -> bool:
        histograms = list(self.partition_latency.values())
        return all(h == histograms[0] for h in histograms)


def vlan_violations(sim: Simulation) -> int:
    """Frames of a VLAN's flows seen by a listener of the other VLAN"""
    count = 0
    for name, vlan in VLAN_LISTENERS.items():
        listener = sim.listeners.get(name)
        if listener is None:
            continue
        foreign = [f for v, flows in VLAN_FLOWS.items() if v != vlan for f in flows]
        count += sum(listener.by_flow[f] for f in foreign)
    return count


def ingress_rejects(sim: Simulation) -> int:
    return sum(sw.vlans.rejects for sw in sim.switches.values())


def storm_detected(sim: Simulation) -> bool:
    return any(sw.counters["storm_detected"] for sw in sim.switches.values())


def run_vlan_suite(
    layouts: Sequence[str] = ("single", "disjoint", "overlapping"),
    vlan2_loads: Sequence[float] = (0.1, 0.5, 1.0),
    seed: Optional[int] = None,
    run_length: str = "20ms",
    load: float = 0.3,
    frame_size: int = 1518,
) -> VlanSuiteReport:
    """
    Containment per layout, partition isolation across VLAN 2 loads, and broadcast
    storms in a looped topology with and without VLAN separation

    The single layout has no VLAN boundary, so it reports no violations.
    ``load`` is the offered load of both senders in the containment runs.
    """
    report = VlanSuiteReport()
    for layout in layouts:
        sim = _run(
            "vlan_suite", seed,
            layout=layout, load=load, vlan2_load=load, frame_size=frame_size, run_length=run_length,
        )
        report.violations[layout] = vlan_violations(sim) if layout != "single" else 0
        report.ingress_rejects[layout] = ingress_rejects(sim)
        report.frames[layout] = sim.metrics.total("sent")
    for vlan2_load in vlan2_loads:
        sim = _run("vlan_suite", seed, layout="disjoint", vlan2_load=vlan2_load, run_length=run_length)
        report.partition_latency[vlan2_load] = sim.metrics.histograms[VLAN_FLOWS[10][0]].bins()
    for separated in (False, True):
        sim = _run("vlan_loop", seed, separated=separated, run_length=run_length)
        report.storm[separated] = storm_detected(sim)
    return report


# ----------------------------------------------------------------- saturation

@dataclass
class SaturationPoint:
    load: float
    fabric: float
    loss: float
    mean_latency_ns: Optional[float]


def saturation_sweep(
    loads: Sequence[float],
    fabric: float = 0.66,
    hosts: int = 8,
    seed: Optional[int] = None,
    run_length: str = "20ms",
) -> List[SaturationPoint]:
    """Aggregate loss and mean latency of all-to-all traffic at each offered load"""
    points = []
    for load in loads:
        sim = _run("saturation_sweep", seed, load=load, fabric=fabric, hosts=hosts, run_length=run_length)
        metrics = sim.metrics
        sent = metrics.total("sent")
        points.append(SaturationPoint(
            load=load,
            fabric=fabric,
            loss=metrics.total("dropped_switch") / sent if sent else 0.0,
            mean_latency_ns=metrics.merged_histogram().mean(),
        ))
    return points


# ---------------------------------------------------------------------- aging

def aging_study(
    aging_times: Sequence[str] = ("300s", "25ms"),
    rate_hz: float = 30.0,
    seed: Optional[int] = None,
    run_length: str = "1s",
) -> Dict[str, int]:
    """Floods after warm-up for each aging time"""
    floods = {}
    for aging in aging_times:
        sim = _run("mac_aging", seed, aging_time=aging, rate_hz=rate_hz, run_length=run_length)
        floods[aging] = sim.switches["sw"].counters["floods_measured"]
    return floods


# ---------------------------------------------------------------------- trunk

def trunk_census(connections: int = 1600, links: int = 2, seed: int = 1) -> Dict[int, int]:
    """
    Spread of distinct address pairs over the members of one trunk

    Returns:
        Member index -> connections pinned to it
    """
    if connections < 1:
        raise ConfigurationError("connections must be positive")
    trunk = TrunkGroup("census", list(range(links)), RngStream.for_name(seed, "trunk.census"))
    for i in range(connections):
        src = MacAddress.from_octets([0x02, 0, 0, 0, (i >> 8) & 0xFF, i & 0xFF])
        dst = MacAddress.from_octets([0x02, 0, 1, 0, (i >> 8) & 0xFF, i & 0xFF])
        trunk.select(src, dst)
    return trunk.connection_census()


@dataclass
class TrunkBalance:
    census: Dict[str, int]
    reorders: int
    delivered: int


def trunk_balance(seed: Optional[int] = None, run_length: str = "20ms", **params) -> TrunkBalance:
    """Run the trunk scenario; the census is taken on the sending side"""
    sim = _run("trunk_balance", seed, run_length=run_length, **params)
    left = sim.switches["left"]
    trunk = left.trunks["trunk"]
    census = {left.ports[m].port_name: n for m, n in trunk.connection_census().items()}
    return TrunkBalance(census, sim.metrics.total("reorders"), sim.metrics.total("delivered"))


# ----------------------------------------------------------------- EB shaping

@dataclass
class ShapingResult:
    credit: Optional[int]
    frames_lost: int
    built: int
    errors: int
    max_outstanding: int


def eb_shaping_comparison(
    credits: Sequence[Optional[int]] = (None, 4),
    seed: Optional[int] = None,
    run_length: str = "200ms",
) -> List[ShapingResult]:
    """Event building loss with an unlimited SFI credit and with a small one"""
    results = []
    for credit in credits:
        sim = _run("eb_shaping", seed, credit=credit, run_length=run_length)
        census = sim.dataflow.ledger.census()
        results.append(ShapingResult(
            credit=credit,
            frames_lost=sim.metrics.total("dropped_switch") + sim.metrics.total("dropped_host"),
            built=sum(1 for r in sim.dataflow.ledger.events.values() if r.t_built is not None),
            errors=census.get("error", 0),
            max_outstanding=max(s.gate.max_observed for s in sim.dataflow.sfis),
        ))
    return results
