"""
Data Flow Manager: SFI assignment for accepted events and batched clears
"""
from collections import Counter, deque
from typing import Deque, Dict, List, Optional

from src.dataflow.host import Host
from src.dataflow.messages import Message, MessageKind
from src.dataflow.node import DataflowNode
from src.ether.frame import MAX_FRAME_BYTES, MacAddress
from src.metrics.ledger import EventState
from src.sim_core.engine import S, SimTime
from src.utils.error_handler import ConfigurationError

CLEAR_HEADER_BYTES = 64
CLEAR_ID_BYTES = 4
# ids per clear message so one message fits one frame
MAX_IDS_PER_CLEAR = (MAX_FRAME_BYTES - CLEAR_HEADER_BYTES) // CLEAR_ID_BYTES


class ClearBatch:
    """
    Event ids waiting to be cleared

    A batch is flushed when it reaches ``batch_size`` ids or when the periodic
    flush tick finds it non-empty.
    """

    def __init__(self, batch_size: int, flush_period: SimTime):
        if batch_size < 1 or flush_period <= 0:
            raise ConfigurationError("clear batch size and flush period must be positive")
        self.batch_size = batch_size
        self.flush_period = flush_period
        self.pending: List[int] = []
        self.flushed: Counter = Counter()
        self.flushes = 0
        self.flush_times: List[SimTime] = []

    def append(self, event_id: int) -> bool:
        """Returns True when the batch is full"""
        self.pending.append(event_id)
        return len(self.pending) >= self.batch_size

    def take(self, now: SimTime = 0) -> List[int]:
        ids, self.pending = self.pending, []
        if ids:
            self.flushes += 1
            self.flush_times.append(now)
            self.flushed.update(ids)
        return ids

    def __len__(self) -> int:
        return len(self.pending)


class DataFlowManager(DataflowNode):
    role = "dfm"

    def __init__(self, system, name: str, host: Host, sfis: List[str], clear_group: MacAddress):
        super().__init__(system, name, host)
        config = system.config
        self.sfis = list(sfis)
        self.clear_group = clear_group
        self.outstanding: Dict[str, int] = {n: 0 for n in self.sfis}
        self.queue: Deque[int] = deque()
        self.batch = ClearBatch(config.clear_batch_size, round(S / config.clear_flush_hz))
        # ids of errored events still cleared from the buffers
        self._clear_only: set = set()

    def start(self) -> None:
        self.engine.schedule_in(self.batch.flush_period, self.name, self._tick)

    def _tick(self) -> None:
        if self.batch.pending:
            self.flush_clears()
        self.engine.schedule_in(self.batch.flush_period, self.name, self._tick)

    def pick_sfi(self) -> Optional[str]:
        limit = self.system.config.sfi_max_events
        best = None
        for name in self.sfis:
            load = self.outstanding[name]
            if limit is not None and load >= limit:
                continue
            if best is None or load < self.outstanding[best]:
                best = name
        return best

    def on_message(self, message: Message) -> None:
        if message.kind is MessageKind.DECISION:
            self._on_decision(message.event_id, message.body["outcome"])
        elif message.kind is MessageKind.END_OF_EVENT:
            self._on_built(message)
        else:
            super().on_message(message)

    def _on_decision(self, event_id: int, outcome: str) -> None:
        """dfm_on_decision: accepted events go to an SFI, the rest to the clear batch"""
        if outcome == "accept":
            self.counters["accepted"] += 1
            if self.queue or not self._assign(event_id):
                self.queue.append(event_id)
                self.counters["queued"] += 1
            return
        if outcome == "error":
            self._clear_only.add(event_id)
        self._add_clear(event_id)

    def _assign(self, event_id: int) -> bool:
        sfi = self.pick_sfi()
        if sfi is None:
            return False
        self.outstanding[sfi] += 1
        self.send(sfi, MessageKind.BUILD, event_id)
        return True

    def _on_built(self, message: Message) -> None:
        self.outstanding[message.src] -= 1
        if message.body.get("complete", True):
            self.system.ledger.advance(message.event_id, EventState.BUILT, self.engine.now())
        else:
            self._clear_only.add(message.event_id)
        self._add_clear(message.event_id)
        while self.queue and self._assign(self.queue[0]):
            self.queue.popleft()

    def _add_clear(self, event_id: int) -> None:
        if self.batch.append(event_id):
            self.flush_clears()

    def flush_clears(self) -> List[int]:
        """dfm_flush_clears: multicast the pending ids to every ROB and the PROB"""
        now = self.engine.now()
        ids = self.batch.take(now)
        for start in range(0, len(ids), MAX_IDS_PER_CLEAR):
            chunk = ids[start:start + MAX_IDS_PER_CLEAR]
            self.send_to_group(
                self.clear_group,
                MessageKind.CLEAR,
                CLEAR_HEADER_BYTES + CLEAR_ID_BYTES * len(chunk),
                event_ids=tuple(chunk),
            )
        for event_id in ids:
            if event_id in self._clear_only:
                self._clear_only.discard(event_id)
                continue
            self.system.ledger.advance(event_id, EventState.CLEARED, now)
        return ids
