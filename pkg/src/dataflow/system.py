"""
DataFlow system: actor population, address directory and end-of-run checks
"""
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional

from src.dataflow.dfm import DataFlowManager
from src.dataflow.host import Host
from src.dataflow.l2pu import Level2ProcessingUnit
from src.dataflow.l2sv import Level2Supervisor
from src.dataflow.node import DataflowNode
from src.dataflow.rob import PseudoReadOutBuffer, ReadOutBuffer
from src.dataflow.sfi import SubFarmInput
from src.dataflow.trigger import Lvl1Trigger
from src.ether.frame import MacAddress, multicast_group
from src.metrics.ledger import DataflowLedger
from src.sim_core.engine import MS, US, SimEngine, SimTime
from src.utils.error_handler import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger(__name__)

CLEAR_GROUP_ID = 1


@dataclass
class DataflowConfig:
    lvl1_rate_hz: float = 1000.0
    lvl1_poisson: bool = True
    accept_fraction: float = 2 / 75
    roi_min_robs: int = 2
    roi_max_robs: int = 8
    l2pu_max_rounds: int = 2
    fragment_bytes: int = 1024
    detail_bytes: int = 1024
    l2pu_processing_time: SimTime = 10 * US
    rob_service_time: SimTime = 0
    l2pu_credit: Optional[int] = 8
    sfi_credit: Optional[int] = 4
    l2pu_max_events: Optional[int] = 16
    sfi_max_events: Optional[int] = 4
    clear_batch_size: int = 350
    clear_flush_hz: float = 300.0
    request_timeout: SimTime = 10 * MS
    max_retries: int = 3
    drain_window: SimTime = 100 * MS
    n_robs: int = 0

    def __post_init__(self):
        if not 0 <= self.accept_fraction <= 1:
            raise ConfigurationError(f"accept_fraction must be in [0, 1], got {self.accept_fraction}")
        if self.lvl1_rate_hz <= 0 or self.clear_flush_hz <= 0:
            raise ConfigurationError("lvl1_rate_hz and clear_flush_hz must be positive")
        if not 1 <= self.roi_min_robs <= self.roi_max_robs:
            raise ConfigurationError("need 1 <= roi_min_robs <= roi_max_robs")
        if self.l2pu_max_rounds < 1 or self.max_retries < 0:
            raise ConfigurationError("l2pu_max_rounds must be >= 1 and max_retries >= 0")


class DataflowSystem:
    """Owns every DataFlow actor of one simulation"""

    def __init__(self, engine: SimEngine, config: Optional[DataflowConfig] = None):
        self.engine = engine
        self.config = config or DataflowConfig()
        self.ledger = DataflowLedger()
        self.clear_group: MacAddress = multicast_group(CLEAR_GROUP_ID)
        self.nodes: Dict[str, DataflowNode] = {}
        self.robs: List[ReadOutBuffer] = []
        self.prob: Optional[PseudoReadOutBuffer] = None
        self.l2pus: List[Level2ProcessingUnit] = []
        self.sfis: List[SubFarmInput] = []
        self.l2sv: Optional[Level2Supervisor] = None
        self.dfm: Optional[DataFlowManager] = None
        self.trigger: Optional[Lvl1Trigger] = None
        self._addresses: Dict[str, MacAddress] = {}

    # ------------------------------------------------------------ population

    def _register(self, node: DataflowNode) -> DataflowNode:
        if node.name in self.nodes:
            raise ConfigurationError(f"Duplicate DataFlow node {node.name}")
        self.nodes[node.name] = node
        self._addresses[node.name] = node.host.mac
        return node

    def add_rob(self, name: str, host: Host) -> ReadOutBuffer:
        host.join_group(self.clear_group)
        rob = ReadOutBuffer(self, name, host, len(self.robs))
        self.robs.append(rob)
        self.config.n_robs = len(self.robs)
        return self._register(rob)

    def add_prob(self, name: str, host: Host) -> PseudoReadOutBuffer:
        host.join_group(self.clear_group)
        self.prob = PseudoReadOutBuffer(self, name, host, -1)
        return self._register(self.prob)

    def add_l2pu(self, name: str, host: Host) -> Level2ProcessingUnit:
        unit = Level2ProcessingUnit(self, name, host)
        self.l2pus.append(unit)
        return self._register(unit)

    def add_sfi(self, name: str, host: Host) -> SubFarmInput:
        sfi = SubFarmInput(self, name, host)
        self.sfis.append(sfi)
        return self._register(sfi)

    def add_l2sv(self, name: str, host: Host) -> Level2Supervisor:
        self.l2sv = Level2Supervisor(self, name, host, [u.name for u in self.l2pus])
        return self._register(self.l2sv)

    def add_dfm(self, name: str, host: Host) -> DataFlowManager:
        self.dfm = DataFlowManager(self, name, host, [s.name for s in self.sfis], self.clear_group)
        return self._register(self.dfm)

    def start(self, run_length: SimTime) -> None:
        """Arm the DFM flush tick and LVL1 injection"""
        missing = [
            role for role, present in (
                ("rob", self.robs), ("prob", self.prob), ("l2pu", self.l2pus),
                ("sfi", self.sfis), ("l2sv", self.l2sv), ("dfm", self.dfm),
            ) if not present
        ]
        if missing:
            raise ConfigurationError(f"DataFlow population lacks: {', '.join(missing)}")
        self.dfm.start()
        self.trigger = Lvl1Trigger(self, self.config.lvl1_rate_hz, self.config.lvl1_poisson)
        self.trigger.start(max(0, run_length - self.config.drain_window))

    # ------------------------------------------------------------- directory

    def address_of(self, name: str) -> MacAddress:
        try:
            return self._addresses[name]
        except KeyError:
            raise ConfigurationError(f"Unknown DataFlow node {name}") from None

    def rob_name(self, rob_id: int) -> str:
        return self.robs[rob_id].name

    def readout_names(self) -> List[str]:
        return [r.name for r in self.robs] + [self.prob.name]

    @property
    def prob_name(self) -> str:
        return self.prob.name

    @property
    def l2sv_name(self) -> str:
        return self.l2sv.name

    @property
    def dfm_name(self) -> str:
        return self.dfm.name

    # ---------------------------------------------------------------- checks

    def clears_complete(self) -> bool:
        """Every ROB and the PROB erased each id the DFM flushed, once"""
        flushed = self.dfm.batch.flushed
        if any(n != 1 for n in flushed.values()):
            return False
        total = sum(flushed.values())
        readouts = [*self.robs, self.prob]
        if any(r.counters["erased"] != total for r in readouts):
            return False
        return all(r.counters["stray_clears"] == 0 for r in self.robs)

    def credits_respected(self) -> bool:
        gates = [u.gate for u in self.l2pus] + [s.gate for s in self.sfis]
        return all(g.max_outstanding is None or g.max_observed <= g.max_outstanding for g in gates)

    def detail_records_once(self) -> bool:
        """One PROB record per accepted event"""
        accepted = sum(1 for r in self.ledger.events.values() if r.accepted)
        counters = self.prob.counters
        return counters["detail_records"] == accepted and counters["duplicate_records"] == 0

    def flush_rate_hz(self, run_length: SimTime) -> float:
        """Clear flushes per second while LVL1 was injecting"""
        end = self.trigger.stop_at if self.trigger is not None else run_length
        if end <= 0:
            return 0.0
        flushes = sum(1 for t in self.dfm.batch.flush_times if t <= end)
        return flushes * 1e9 / end

    def counter_snapshot(self) -> Dict[str, int]:
        snapshot: Dict[str, int] = {}
        for node in self.nodes.values():
            snapshot.update(node.counter_snapshot())
        for state, n in self.ledger.census().items():
            snapshot[f"dataflow.events.{state}"] = n
        snapshot["dataflow.events.injected"] = self.trigger.injected if self.trigger else 0
        snapshot["dataflow.dfm.flushes"] = self.dfm.batch.flushes
        snapshot["dataflow.l2sv.max_queue_depth"] = self.l2sv.max_queue_depth
        gates = Counter()
        for unit in self.l2pus:
            gates["l2pu"] = max(gates["l2pu"], unit.gate.max_observed)
        for sfi in self.sfis:
            gates["sfi"] = max(gates["sfi"], sfi.gate.max_observed)
        for role, n in gates.items():
            snapshot[f"dataflow.{role}.max_outstanding"] = n
        return snapshot

    def report(self, run_length: SimTime) -> None:
        census = self.ledger.census()
        unfinished = self.ledger.unfinished()
        logger.info(
            "DataFlow run finished",
            extra_fields={
                "events": len(self.ledger.events),
                "census": dict(census),
                "unfinished": len(unfinished),
                "flush_rate_hz": round(self.flush_rate_hz(run_length), 1),
                "clears_complete": self.clears_complete(),
            },
        )
