"""
Read Out Buffers

A ROB holds one fragment of every event LVL1 accepted until the DFM's clear
message erases it. Fragments reach the ROB over its detector readout link,
which is outside the switched network. The pseudo-ROB (PROB) holds the LVL2
detail record of accepted events and is read out like a ROB during event
building.
"""
from typing import Dict, Set

from src.dataflow.host import Host
from src.dataflow.messages import REQUEST_BYTES, Message, MessageKind
from src.dataflow.node import DataflowNode
from src.sim_core.engine import SimTime


class ReadOutBuffer(DataflowNode):
    role = "rob"

    def __init__(self, system, name: str, host: Host, rob_id: int):
        self.rob_id = rob_id
        super().__init__(system, name, host)
        # event ids with a fragment in the buffer
        self.buffered: Set[int] = set()

    def service_time(self) -> SimTime:
        # slowed emulation is applied by the host's receive ring so FC engages
        return self.system.config.rob_service_time

    def store(self, event_id: int) -> None:
        """Detector readout of one LVL1-accepted event"""
        self.buffered.add(event_id)
        self.counters["max_buffered"] = max(self.counters["max_buffered"], len(self.buffered))

    def holds(self, event_id: int) -> bool:
        return event_id in self.buffered

    def fragment_bytes(self, event_id: int) -> int:
        return self.system.config.fragment_bytes

    def on_message(self, message: Message) -> None:
        if message.kind is MessageKind.DATA_REQUEST:
            self._answer(message)
        elif message.kind is MessageKind.CLEAR:
            self._clear(message)
        else:
            super().on_message(message)

    def _answer(self, request: Message) -> None:
        """rob_on_request: fragment response, or error response for erased/unknown events"""
        if not self.holds(request.event_id):
            self.counters["unknown_event_requests"] += 1
            self.send(
                request.src, MessageKind.ERROR_RESPONSE, request.event_id, REQUEST_BYTES,
                request_id=request.msg_id, rob=self.name,
            )
            return
        self.counters["fragments_served"] += 1
        self.send(
            request.src, MessageKind.FRAGMENT, request.event_id, self.fragment_bytes(request.event_id),
            request_id=request.msg_id, rob=self.name,
        )

    def _clear(self, message: Message) -> None:
        ids = message.body.get("event_ids", ())
        for event_id in ids:
            self._erase(event_id)
        self.counters["clears"] += 1
        self.counters["erased"] += len(ids)

    def _erase(self, event_id: int) -> None:
        if event_id in self.buffered:
            self.buffered.remove(event_id)
        else:
            self.counters["stray_clears"] += 1


class PseudoReadOutBuffer(ReadOutBuffer):
    """Stores one detail record per accepted event"""

    role = "prob"

    def __init__(self, system, name: str, host: Host, rob_id: int):
        super().__init__(system, name, host, rob_id)
        # event id -> record size, until cleared
        self.records: Dict[int, int] = {}

    def holds(self, event_id: int) -> bool:
        return event_id in self.records

    def fragment_bytes(self, event_id: int) -> int:
        return self.records[event_id]

    def on_message(self, message: Message) -> None:
        if message.kind is MessageKind.DETAIL:
            if message.event_id in self.records:
                self.counters["duplicate_records"] += 1
            self.records[message.event_id] = message.size_bytes
            self.counters["detail_records"] += 1
            self.counters["max_buffered"] = max(self.counters["max_buffered"], len(self.records))
            return
        super().on_message(message)

    def _erase(self, event_id: int) -> None:
        # rejected events are cleared too but never had a record
        self.records.pop(event_id, None)
