"""
Scenario document schema

A scenario names switches, nodes, the links between them, trunks, VLANs,
traffic sources and an optional DataFlow population. Durations are integers in
ns or strings with a unit (``"5us"``, ``"200 ms"``). Link endpoints are node
names or ``switch:port``; switch ports are created by the links that use them.
"""
import re
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

from src.config.settings import get_settings
from src.ether.frame import FE_BPS, GE_BPS, MAX_FRAME_BYTES, MIN_FRAME_BYTES, TENGE_BPS
from src.sim_core.engine import MS, NS, S, US

_UNITS = {"ns": NS, "us": US, "ms": MS, "s": S}
_DURATION = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(ns|us|ms|s)\s*$")
_MAC = re.compile(r"([0-9a-fA-F]{2}:){5}[0-9a-fA-F]{2}")
SPEEDS = {"FE": FE_BPS, "GE": GE_BPS, "10GE": TENGE_BPS}

DATAFLOW_ROLES = ("rob", "prob", "l2pu", "l2sv", "dfm", "sfi")


def parse_duration(value: Union[int, float, str]) -> int:
    """Duration in ns from an int (ns) or a string with a unit"""
    if isinstance(value, bool):
        raise ValueError("duration must be a number or a string with a unit")
    if isinstance(value, (int, float)):
        if value < 0:
            raise ValueError("duration must be >= 0")
        return int(value)
    match = _DURATION.match(str(value))
    if not match:
        raise ValueError(f"invalid duration {value!r}; use e.g. 500ns, 5us, 10ms, 1s")
    return round(float(match.group(1)) * _UNITS[match.group(2)])


def parse_speed(value: Union[int, str]) -> int:
    if isinstance(value, str):
        if value.upper() in SPEEDS:
            return SPEEDS[value.upper()]
        raise ValueError(f"unknown speed {value!r}; use FE, GE, 10GE or bit/s")
    if value <= 0:
        raise ValueError("speed must be positive")
    return int(value)


Duration = Annotated[int, BeforeValidator(parse_duration)]
Speed = Annotated[int, BeforeValidator(parse_speed)]


def _check_mac(v: Optional[str]) -> Optional[str]:
    if v is not None and not _MAC.fullmatch(v):
        raise ValueError(f"invalid MAC address {v!r}")
    return v.lower() if v else v


class _Section(BaseModel):
    """Strict section: unknown keys are errors"""
    model_config = ConfigDict(extra="forbid")


class MacTableDoc(_Section):
    mode: Literal["ideal", "hash_bucket"] = "ideal"
    capacity: int = Field(default=16384, ge=1)
    key_octets: List[int] = Field(default_factory=lambda: [4, 5])
    bucket_count: int = Field(default=256, ge=1)
    bucket_depth: int = Field(default=70, ge=1)
    aging_time: Duration = 300 * S

    @field_validator("key_octets")
    @classmethod
    def check_octets(cls, v: List[int]) -> List[int]:
        if not v or any(not 0 <= i <= 5 for i in v):
            raise ValueError("key_octets must be octet indices 0..5")
        return v


class SwitchDoc(_Section):
    name: str
    ingress_mode: Literal["voq", "shared_fifo"] = "voq"
    fc_propagation: bool = True
    fabric_capacity_fraction: float = Field(default=1.0, gt=0, le=1)
    forwarding_latency: Duration = 5 * US
    forwarding_jitter: Duration = 0
    egress_buffer_bytes: int = Field(default=128 * 1024, ge=MAX_FRAME_BYTES)
    ingress_buffer_bytes: int = Field(default=128 * 1024, ge=MAX_FRAME_BYTES)
    xoff_fraction: float = Field(default=0.8, gt=0, le=1)
    xon_fraction: float = Field(default=0.5, gt=0, le=1)
    scheduler: Literal["fifo", "strict", "wrr"] = "fifo"
    wrr_weights: Dict[int, float] = Field(default_factory=dict)
    multicast_rate_cap: Optional[float] = Field(default=None, gt=0)
    storm_threshold: int = Field(default=10_000, ge=1)
    mac_table: MacTableDoc = Field(default_factory=MacTableDoc)

    @field_validator("wrr_weights")
    @classmethod
    def check_weights(cls, v: Dict[int, float]) -> Dict[int, float]:
        for priority, weight in v.items():
            if not 0 <= priority <= 7 or weight <= 0:
                raise ValueError("wrr_weights maps priority 0..7 to a positive weight")
        return v

    @model_validator(mode="after")
    def check_thresholds(self) -> "SwitchDoc":
        if self.xon_fraction >= self.xoff_fraction:
            raise ValueError("xon_fraction must be below xoff_fraction")
        return self


class NodeDoc(_Section):
    name: str
    role: Literal["host", "rob", "prob", "l2pu", "l2sv", "dfm", "sfi"] = "host"
    mac: Optional[str] = None
    # host: listener counts frames, responder answers requests, none binds nothing
    app: Literal["listener", "responder", "mirror_responder", "none"] = "listener"
    nic_queue_bytes: int = Field(default=64 * 1024, ge=MAX_FRAME_BYTES)
    rx_ring_bytes: int = Field(default=64 * 1024, ge=MAX_FRAME_BYTES)
    rx_rate_bps: Optional[int] = Field(default=None, gt=0)
    socket_buffer_bytes: int = Field(default=256 * 1024, ge=MAX_FRAME_BYTES)
    send_retry_backoff: Duration = 10 * US
    emulation: Literal["normal", "dead", "slowed"] = "normal"
    service_time: Duration = 0
    promiscuous: bool = False
    lazy: bool = False
    # broadcast one frame at start so switches learn the address
    announce: bool = True

    @field_validator("mac")
    @classmethod
    def check_mac(cls, v: Optional[str]) -> Optional[str]:
        return _check_mac(v)

    @model_validator(mode="after")
    def check_emulation(self) -> "NodeDoc":
        if self.emulation == "slowed" and self.service_time <= 0:
            raise ValueError("slowed emulation needs a positive service_time")
        if self.send_retry_backoff <= 0:
            raise ValueError("send_retry_backoff must be positive")
        return self


class LinkDoc(_Section):
    a: str
    b: str
    speed: Speed = GE_BPS
    propagation: Duration = 0
    fc: bool = True
    name: Optional[str] = None


class TrunkDoc(_Section):
    switch: str
    name: str
    ports: List[str] = Field(min_length=2)
    down: List[str] = Field(default_factory=list)


class VlanDoc(_Section):
    id: int = Field(ge=1, le=4094)
    switch: str
    untagged: List[str] = Field(default_factory=list)
    tagged: List[str] = Field(default_factory=list)


class DestinationDoc(_Section):
    node: Optional[str] = None
    mac: Optional[str] = None
    weight: float = Field(default=1.0, gt=0)
    flow_id: Optional[int] = Field(default=None, ge=1, le=999)

    @field_validator("mac")
    @classmethod
    def check_mac(cls, v: Optional[str]) -> Optional[str]:
        return _check_mac(v)

    @model_validator(mode="after")
    def check_target(self) -> "DestinationDoc":
        if (self.node is None) == (self.mac is None):
            raise ValueError("a destination names exactly one of node or mac")
        return self


class SourceDoc(_Section):
    name: str
    node: str
    pattern: Literal["cbr", "poisson"] = "cbr"
    offered_load: float = Field(default=1.0, gt=0, le=1)
    frame_rate_hz: Optional[float] = Field(default=None, gt=0)
    frame_size: int = Field(default=MAX_FRAME_BYTES, ge=MIN_FRAME_BYTES, le=MAX_FRAME_BYTES)
    destinations: List[DestinationDoc] = Field(min_length=1)
    order: Literal["interleaved", "random"] = "interleaved"
    vlan: Optional[int] = Field(default=None, ge=1, le=4094)
    priority: int = Field(default=0, ge=0, le=7)
    start: Duration = 0
    stop: Optional[Duration] = None


class DataflowDoc(_Section):
    lvl1_rate_hz: float = Field(default=1000.0, gt=0)
    lvl1_poisson: bool = True
    accept_fraction: float = Field(default=2 / 75, ge=0, le=1)
    roi_min_robs: int = Field(default=2, ge=1)
    roi_max_robs: int = Field(default=8, ge=1)
    l2pu_max_rounds: int = Field(default=2, ge=1)
    fragment_bytes: int = Field(default=1024, ge=1)
    detail_bytes: int = Field(default=1024, ge=1)
    l2pu_processing_time: Duration = 10 * US
    rob_service_time: Duration = 0
    l2pu_credit: Optional[int] = Field(default=8, ge=1)
    sfi_credit: Optional[int] = Field(default=4, ge=1)
    l2pu_max_events: Optional[int] = Field(default=16, ge=1)
    sfi_max_events: Optional[int] = Field(default=4, ge=1)
    clear_batch_size: int = Field(default=350, ge=1)
    clear_flush_hz: float = Field(default=300.0, gt=0)
    request_timeout: Duration = 10 * MS
    max_retries: int = Field(default=3, ge=0)
    drain_window: Duration = 100 * MS


class ScenarioDoc(_Section):
    name: str
    description: str = ""
    seed: Optional[int] = Field(default=None, ge=0)
    run_length: Duration
    warmup: Optional[Duration] = None
    window: Duration = 100 * US
    output_dir: Optional[str] = None
    switches: List[SwitchDoc] = Field(default_factory=list)
    nodes: List[NodeDoc] = Field(default_factory=list)
    links: List[LinkDoc] = Field(default_factory=list)
    trunks: List[TrunkDoc] = Field(default_factory=list)
    vlans: List[VlanDoc] = Field(default_factory=list)
    sources: List[SourceDoc] = Field(default_factory=list)
    dataflow: Optional[DataflowDoc] = None

    @model_validator(mode="after")
    def check_lengths(self) -> "ScenarioDoc":
        if self.run_length <= 0:
            raise ValueError("run_length must be positive")
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.warmup is not None and self.warmup >= self.run_length:
            raise ValueError("warmup must be shorter than run_length")
        return self

    @property
    def warmup_ns(self) -> int:
        """Configured warm-up, else the first 10% of the run"""
        return self.warmup if self.warmup is not None else self.run_length // 10

    def run_seed(self, override: Optional[int] = None) -> int:
        """The override, else the document's seed, else DEFAULT_SEED"""
        if override is not None:
            return override
        if self.seed is not None:
            return self.seed
        return get_settings().default_seed

    def census(self) -> Dict[str, int]:
        """Number of nodes per role"""
        counts: Dict[str, int] = {}
        for node in self.nodes:
            counts[node.role] = counts.get(node.role, 0) + 1
        return counts
