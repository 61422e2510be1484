"""
Common base of the DataFlow applications

A node owns one host. Outgoing messages are cut into frames and queued in an
application outbox; when the NIC refuses a frame the node sleeps for the host's
``send_retry_backoff`` and tries again, so nothing is lost on the send side.
Incoming frames are reassembled into messages and dispatched to ``on_message``.
"""
from collections import Counter, deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, Deque, Dict, Optional

from src.dataflow.host import Host, SendResult
from src.dataflow.messages import REQUEST_BYTES, Message, MessageKind, Reassembler, to_frames
from src.ether.frame import Frame, MacAddress
from src.sim_core.engine import SimEngine, SimTime
from src.utils.logger import get_logger

if TYPE_CHECKING:
    from src.dataflow.system import DataflowSystem

logger = get_logger(__name__)


@dataclass
class PendingRequest:
    """Outstanding request waiting for its response"""
    message: Message
    on_response: Callable[[Message], None]
    on_give_up: Callable[[Message], None]
    attempts: int = 1
    timer: Optional[int] = None


class DataflowNode:
    """Application endpoint on a host"""

    role = "node"

    def __init__(self, system: "DataflowSystem", name: str, host: Host):
        self.system = system
        self.engine: SimEngine = system.engine
        self.name = name
        self.host = host
        self.counters: Counter = Counter()
        self._reassembler = Reassembler()
        self._outbox: Deque[Frame] = deque()
        self._retry_pending = False
        self._next_msg_id = 0
        self._requests: Dict[int, PendingRequest] = {}
        host.bind(handler=self._on_frame, service_time=self.service_time())

    def service_time(self) -> SimTime:
        """Per-message application processing time (socket consumer)"""
        return 0

    # ------------------------------------------------------------------- send

    def send(
        self,
        dst: str,
        kind: MessageKind,
        event_id: int,
        size_bytes: int = REQUEST_BYTES,
        **body: Any,
    ) -> Message:
        message = Message(kind, self.name, dst, event_id, size_bytes, self._new_msg_id(), body)
        self._transmit(message, self.system.address_of(dst))
        return message

    def send_to_group(self, group: MacAddress, kind: MessageKind, size_bytes: int, **body: Any) -> Message:
        message = Message(kind, self.name, "*", -1, size_bytes, self._new_msg_id(), body)
        self._transmit(message, group)
        return message

    def _new_msg_id(self) -> int:
        self._next_msg_id += 1
        return self._next_msg_id

    def _transmit(self, message: Message, dst_mac: MacAddress) -> None:
        self.counters[f"sent.{message.kind.value}"] += 1
        self._outbox.extend(to_frames(message, self.host.mac, dst_mac, self.engine.now()))
        if not self._retry_pending:
            self._flush()

    def _flush(self) -> None:
        self._retry_pending = False
        while self._outbox:
            if self.host.send(self._outbox[0]) is SendResult.RETRY_LATER:
                self._retry_pending = True
                self.counters["send_retries"] += 1
                self.engine.schedule_in(self.host.config.send_retry_backoff, self.name, self._flush)
                return
            self._outbox.popleft()

    @property
    def outbox_frames(self) -> int:
        return len(self._outbox)

    # --------------------------------------------------------------- requests

    def request(
        self,
        dst: str,
        event_id: int,
        on_response: Callable[[Message], None],
        on_give_up: Callable[[Message], None],
        **body: Any,
    ) -> None:
        """Send a data request with a response timeout and bounded retries"""
        message = self.send(dst, MessageKind.DATA_REQUEST, event_id, REQUEST_BYTES, **body)
        pending = PendingRequest(message, on_response, on_give_up)
        self._requests[message.msg_id] = pending
        self._arm(pending)

    def _arm(self, pending: PendingRequest) -> None:
        pending.timer = self.engine.schedule_in(
            self.system.config.request_timeout, self.name, self._on_timeout, pending.message.msg_id
        )

    def _on_timeout(self, msg_id: int) -> None:
        pending = self._requests.get(msg_id)
        if pending is None:
            return
        self.counters["timeouts"] += 1
        if pending.attempts > self.system.config.max_retries:
            del self._requests[msg_id]
            self.counters["gave_up"] += 1
            logger.debug(
                f"{self.name} gave up on {pending.message.dst}",
                extra_fields={"event_id": pending.message.event_id, "attempts": pending.attempts},
            )
            pending.on_give_up(pending.message)
            return
        # a retry reuses the message id so a late answer to any attempt completes it
        pending.attempts += 1
        self.counters["retries"] += 1
        old = pending.message
        self._transmit(old, self.system.address_of(old.dst))
        self._arm(pending)

    def _complete(self, response: Message) -> None:
        pending = self._requests.pop(response.body.get("request_id", -1), None)
        if pending is None:
            self.counters["late_responses"] += 1
            return
        self.engine.cancel(pending.timer)
        pending.on_response(response)

    @property
    def outstanding_requests(self) -> int:
        return len(self._requests)

    # ---------------------------------------------------------------- receive

    def _on_frame(self, frame: Frame) -> None:
        message = self._reassembler.accept(frame)
        if message is None:
            return
        self.counters[f"received.{message.kind.value}"] += 1
        if message.kind in (MessageKind.FRAGMENT, MessageKind.ERROR_RESPONSE):
            if message.kind is MessageKind.ERROR_RESPONSE:
                self.counters["error_responses"] += 1
            self._complete(message)
            return
        self.on_message(message)

    def on_message(self, message: Message) -> None:
        self.counters["unexpected_messages"] += 1

    def counter_snapshot(self) -> Dict[str, int]:
        return {f"{self.role}.{self.name}.{k}": int(v) for k, v in self.counters.items()}
