"""
Traffic sinks: counting listeners and request responders
"""
from collections import Counter, deque
from dataclasses import dataclass
from typing import Deque

from src.dataflow.host import Emulation, Host, SendResult
from src.ether.frame import Frame, MIN_FRAME_BYTES
from src.sim_core.engine import SimEngine, SimTime


@dataclass
class SinkConfig:
    promiscuous: bool = False
    emulation: Emulation = Emulation.NORMAL
    service_time: SimTime = 0

    def __post_init__(self):
        self.emulation = Emulation(self.emulation)


class Listener:
    """Counts every frame handed to the host's default socket"""

    def __init__(self, host: Host):
        self.host = host
        self.frames = 0
        self.bytes = 0
        self.by_flow: Counter = Counter()
        host.bind(handler=self._on_frame)

    def _on_frame(self, frame: Frame) -> None:
        self.frames += 1
        self.bytes += frame.size_bytes
        self.by_flow[frame.flow_id] += 1

    def reset(self) -> None:
        self.frames = 0
        self.bytes = 0
        self.by_flow.clear()


class Responder:
    """
    Answers each request with a reply to its sender

    With ``mirror_destination`` the reply uses the request's destination as its
    source address, so one host impersonates any number of stations.
    """

    def __init__(
        self,
        engine: SimEngine,
        host: Host,
        reply_size: int = MIN_FRAME_BYTES,
        mirror_destination: bool = False,
        reply_flow_id: int = 0,
    ):
        self.engine = engine
        self.host = host
        self.reply_size = reply_size
        self.mirror_destination = mirror_destination
        self.reply_flow_id = reply_flow_id
        self.requests = 0
        self.replies = 0
        self._outbox: Deque[Frame] = deque()
        self._retry_pending = False
        host.bind(handler=self._on_request)

    def _on_request(self, frame: Frame) -> None:
        if frame.dst.is_broadcast:
            return
        self.requests += 1
        src = frame.dst if self.mirror_destination else self.host.mac
        self._outbox.append(Frame(
            src=src,
            dst=frame.src,
            size_bytes=self.reply_size,
            flow_id=self.reply_flow_id,
            injected_at=self.engine.now(),
            seq=self.requests,
        ))
        if not self._retry_pending:
            self._flush()

    def _flush(self) -> None:
        self._retry_pending = False
        while self._outbox:
            if self.host.send(self._outbox[0]) is SendResult.RETRY_LATER:
                self._retry_pending = True
                self.engine.schedule_in(self.host.config.send_retry_backoff, self.host.name, self._flush)
                return
            self._outbox.popleft()
            self.replies += 1

    @property
    def backlog(self) -> int:
        return len(self._outbox)
