"""
Level 2 Processing Unit: sequential RoI collection and accept/reject decision
"""
from dataclasses import dataclass, field
from typing import Dict, List

from src.dataflow.host import CreditGate, Host
from src.dataflow.messages import Message, MessageKind
from src.dataflow.node import DataflowNode


@dataclass
class Collection:
    event_id: int
    rounds: List[List[int]]
    current: int = 0
    awaiting: int = 0
    rob_ids: List[int] = field(default_factory=list)


class Level2ProcessingUnit(DataflowNode):
    role = "l2pu"

    def __init__(self, system, name: str, host: Host):
        super().__init__(system, name, host)
        self.gate = CreditGate(system.config.l2pu_credit)
        self.rng = self.engine.rng(f"l2pu.{name}")
        self._active: Dict[int, Collection] = {}
        self.decisions = 0

    def on_message(self, message: Message) -> None:
        if message.kind is MessageKind.ROI_ASSIGN:
            self._start(message.event_id, [rob for rob, _ in message.body["roi"]])
        else:
            super().on_message(message)

    def _start(self, event_id: int, rob_ids: List[int]) -> None:
        """l2pu_roi_collection: split the RoI into K request rounds"""
        max_rounds = min(self.system.config.l2pu_max_rounds, len(rob_ids))
        k = 1 + self.rng.integers(max_rounds)
        rounds = [rob_ids[i::k] for i in range(k)]
        collection = Collection(event_id, rounds, rob_ids=rob_ids)
        self._active[event_id] = collection
        self.counters["events"] += 1
        self._issue_round(collection)

    def _issue_round(self, collection: Collection) -> None:
        batch = collection.rounds[collection.current]
        collection.awaiting = len(batch)
        for rob_id in batch:
            self.gate.submit(lambda rob_id=rob_id: self.request(
                self.system.rob_name(rob_id),
                collection.event_id,
                self._on_response,
                self._on_give_up,
            ), key=collection.event_id)

    def _on_response(self, response: Message) -> None:
        self.gate.release()
        collection = self._active.get(response.event_id)
        if collection is None:
            return
        collection.awaiting -= 1
        if collection.awaiting:
            return
        collection.current += 1
        if collection.current < len(collection.rounds):
            self._issue_round(collection)
            return
        self.engine.schedule_in(
            self.system.config.l2pu_processing_time, self.name, self._decide, collection.event_id
        )

    def _on_give_up(self, request: Message) -> None:
        collection = self._active.pop(request.event_id, None)
        if collection is not None:
            # queued requests of the abandoned event must not take the freed credit
            self.counters["withdrawn_requests"] += self.gate.withdraw(request.event_id)
        self.gate.release()
        if collection is None:
            return
        self.counters["event_errors"] += 1
        self.system.ledger.fail(request.event_id, self.engine.now())
        self.send(self.system.l2sv_name, MessageKind.DECISION, request.event_id, outcome="error")

    def _decide(self, event_id: int) -> None:
        if self._active.pop(event_id, None) is None:
            return
        config = self.system.config
        accept = self.rng.bernoulli(config.accept_fraction)
        self.decisions += 1
        if accept:
            self.counters["accepted"] += 1
            self.send(self.system.prob_name, MessageKind.DETAIL, event_id, config.detail_bytes)
        else:
            self.counters["rejected"] += 1
        self.send(
            self.system.l2sv_name, MessageKind.DECISION, event_id,
            outcome="accept" if accept else "reject",
        )
