"""
Level 2 Supervisor: load balances LVL1 events over the L2PUs
"""
from collections import deque
from typing import Deque, Dict, List

from src.dataflow.host import Host
from src.dataflow.messages import Message, MessageKind
from src.dataflow.node import DataflowNode
from src.metrics.ledger import EventRecord, EventState


class Level2Supervisor(DataflowNode):
    role = "l2sv"

    def __init__(self, system, name: str, host: Host, l2pus: List[str]):
        super().__init__(system, name, host)
        self.l2pus = list(l2pus)
        self.outstanding: Dict[str, int] = {n: 0 for n in self.l2pus}
        self.queue: Deque[EventRecord] = deque()
        self.max_queue_depth = 0

    def pick_l2pu(self) -> str:
        """Least outstanding L2PU with spare capacity, ties to the lowest id; '' when all are full"""
        limit = self.system.config.l2pu_max_events
        best = ""
        for name in self.l2pus:
            load = self.outstanding[name]
            if limit is not None and load >= limit:
                continue
            if not best or load < self.outstanding[best]:
                best = name
        return best

    def on_lvl1(self, record: EventRecord) -> None:
        """l2sv_on_lvl1: assign an L2PU or queue the event"""
        if self.queue or not self._assign(record):
            self.queue.append(record)
            self.counters["queued"] += 1
            self.max_queue_depth = max(self.max_queue_depth, len(self.queue))

    def _assign(self, record: EventRecord) -> bool:
        target = self.pick_l2pu()
        if not target:
            return False
        self.outstanding[target] += 1
        self.system.ledger.advance(record.event_id, EventState.AT_L2, self.engine.now())
        self.send(target, MessageKind.ROI_ASSIGN, record.event_id, roi=record.roi)
        self.counters["assigned"] += 1
        return True

    def on_message(self, message: Message) -> None:
        if message.kind is not MessageKind.DECISION:
            super().on_message(message)
            return
        self.outstanding[message.src] -= 1
        outcome = message.body["outcome"]
        now = self.engine.now()
        if outcome == "accept":
            self.system.ledger.advance(message.event_id, EventState.ACCEPTED, now)
        elif outcome == "reject":
            self.system.ledger.advance(message.event_id, EventState.REJECTED, now)
        self.counters[f"decisions.{outcome}"] += 1
        self.send(self.system.dfm_name, MessageKind.DECISION, message.event_id, outcome=outcome)
        while self.queue and self._assign(self.queue[0]):
            self.queue.popleft()
