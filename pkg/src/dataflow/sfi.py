"""
Sub Farm Input: event building

The SFI requests the fragment of every ROB plus the PROB record through a
credit gate, so it never has more than ``sfi_credit`` responses in flight.
Built events are handed to the Event Filter, modelled as an infinite sink.
"""
from dataclasses import dataclass
from typing import Dict

from src.dataflow.host import CreditGate, Host
from src.dataflow.messages import Message, MessageKind
from src.dataflow.node import DataflowNode


@dataclass
class Build:
    event_id: int
    awaiting: int
    received_bytes: int = 0
    failed: bool = False


class SubFarmInput(DataflowNode):
    role = "sfi"

    def __init__(self, system, name: str, host: Host):
        super().__init__(system, name, host)
        self.gate = CreditGate(system.config.sfi_credit)
        self._builds: Dict[int, Build] = {}
        self.built = 0
        self.ef_bytes = 0
        self.received_bytes = 0

    def on_message(self, message: Message) -> None:
        if message.kind is MessageKind.BUILD:
            self.build_event(message.event_id)
        else:
            super().on_message(message)

    def build_event(self, event_id: int) -> None:
        """sfi_build_event: request every ROB fragment and the PROB record"""
        sources = self.system.readout_names()
        build = Build(event_id, awaiting=len(sources))
        self._builds[event_id] = build
        for source in sources:
            self.gate.submit(lambda source=source: self.request(
                source, event_id, self._on_fragment, self._on_give_up
            ))

    def _on_fragment(self, response: Message) -> None:
        self.gate.release()
        build = self._builds.get(response.event_id)
        if build is None:
            return
        if response.kind is MessageKind.ERROR_RESPONSE:
            build.failed = True
        else:
            build.received_bytes += response.size_bytes
            self.received_bytes += response.size_bytes
        self._settle(build)

    def _on_give_up(self, request: Message) -> None:
        self.gate.release()
        build = self._builds.get(request.event_id)
        if build is None:
            return
        build.failed = True
        self._settle(build)

    def _settle(self, build: Build) -> None:
        build.awaiting -= 1
        if build.awaiting:
            return
        del self._builds[build.event_id]
        if build.failed:
            self.counters["partial_events"] += 1
            self.system.ledger.fail(build.event_id, self.engine.now())
        else:
            self.built += 1
            self.ef_bytes += build.received_bytes
        self.send(
            self.system.dfm_name, MessageKind.END_OF_EVENT, build.event_id,
            complete=not build.failed,
        )

    @property
    def building(self) -> int:
        return len(self._builds)
