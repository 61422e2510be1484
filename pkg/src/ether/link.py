"""
Full-duplex point-to-point link with serialization delay and PAUSE/RESUME

Each direction carries at most one frame at a time. Flow control is level
signalling: the receiving end of a direction asks for a pause, a 64-byte PAUSE
frame travels on the reverse direction, and the transmitter stops sending data
frames ``reaction_latency`` after that frame arrives. A frame already on the
wire always completes.
"""
from collections import deque
from dataclasses import dataclass
from typing import Deque, Optional, Protocol

from src.ether.frame import (
    Frame,
    FrameKind,
    MacAddress,
    MIN_FRAME_BYTES,
    control_frame,
    serialization_delay,
)
from src.sim_core.engine import SimEngine, SimTime
from src.utils.error_handler import ConfigurationError, ModelError
from src.utils.logger import get_logger

logger = get_logger(__name__)


class LinkEndpoint(Protocol):
    """Anything a link can be plugged into: switch ports and host NICs"""
    name: str

    def receive(self, frame: Frame, direction: "LinkDirection") -> None:
        ...

    def on_tx_ready(self, direction: "LinkDirection") -> None:
        ...


@dataclass
class DirectionStats:
    frames_sent: int = 0
    bytes_sent: int = 0
    frames_delivered: int = 0
    pause_frames: int = 0
    resume_frames: int = 0
    paused_ns: int = 0
    fc_ignored: int = 0


class LinkDirection:
    """One transmit direction of a link"""

    def __init__(
        self,
        engine: SimEngine,
        name: str,
        speed_bps: int,
        propagation_delay: SimTime,
        reaction_latency: SimTime,
        fc_enabled: bool,
    ):
        self.engine = engine
        self.name = name
        self.speed_bps = speed_bps
        self.propagation_delay = propagation_delay
        self.reaction_latency = reaction_latency
        self.fc_enabled = fc_enabled
        self.sender: Optional[LinkEndpoint] = None
        self.receiver: Optional[LinkEndpoint] = None
        self.reverse: Optional["LinkDirection"] = None
        self.busy_until: SimTime = 0
        self.paused = False
        self.stats = DirectionStats()
        self._pause_requested = False
        self._paused_since: Optional[SimTime] = None
        self._deferred: Deque[Frame] = deque()
        self._control: Deque[Frame] = deque()
        self._warned_fc = False
        self._control_src = MacAddress(0)

    # ------------------------------------------------------------------ state

    def is_idle(self) -> bool:
        return self.engine.now() >= self.busy_until

    def can_send(self) -> bool:
        """True when a data frame handed to transmit() would start immediately"""
        return self.is_idle() and not self.paused and not self._deferred

    @property
    def deferred_frames(self) -> int:
        return len(self._deferred)

    def paused_time(self) -> SimTime:
        """Total paused time including a pause still in progress"""
        total = self.stats.paused_ns
        if self._paused_since is not None:
            total += self.engine.now() - self._paused_since
        return total

    # --------------------------------------------------------------- transmit

    def transmit(self, frame: Frame) -> Optional[SimTime]:
        """
        Put a frame on the wire

        Args:
            frame: Frame to send

        Returns:
            Arrival time at the receiver, or None when a data frame was deferred
            because the direction is paused

        Raises:
            ModelError: If the direction is still serializing a frame
        """
        if not self.is_idle():
            raise ModelError(
                f"transmit on {self.name} while busy until t={self.busy_until}",
                actor=self.name,
                details={"now": self.engine.now()},
            )
        if self.paused and not frame.kind.is_control:
            self._deferred.append(frame)
            return None
        return self._start(frame)

    def _start(self, frame: Frame) -> SimTime:
        now = self.engine.now()
        self.busy_until = now + serialization_delay(frame.size_bytes, self.speed_bps)
        self.stats.frames_sent += 1
        self.stats.bytes_sent += frame.size_bytes
        arrival = self.busy_until + self.propagation_delay
        self.engine.schedule(arrival, self.name, self._arrive, frame)
        self.engine.schedule(self.busy_until, self.name, self._tx_done)
        return arrival

    def _tx_done(self) -> None:
        if self._control:
            self._start(self._control.popleft())
        elif self._deferred and not self.paused:
            self._start(self._deferred.popleft())
        elif self.sender is not None:
            self.sender.on_tx_ready(self)

    def _arrive(self, frame: Frame) -> None:
        self.stats.frames_delivered += 1
        if frame.kind.is_control:
            # a PAUSE on this direction throttles the opposite one
            self.engine.schedule_in(
                self.reaction_latency,
                self.reverse.name,
                self.reverse._set_paused,
                frame.kind is FrameKind.PAUSE,
            )
            return
        self.receiver.receive(frame, self)

    def _send_control(self, kind: FrameKind) -> None:
        frame = control_frame(self._control_src, kind, self.engine.now())
        if self.is_idle():
            self._start(frame)
        else:
            self._control.append(frame)

    # ------------------------------------------------------------ flow control

    def request_pause(self) -> bool:
        """
        Ask the transmitter of this direction to stop (called by the receiver)

        Returns:
            False when flow control is disabled on the link and the request was ignored
        """
        if not self.fc_enabled:
            self.stats.fc_ignored += 1
            if not self._warned_fc:
                self._warned_fc = True
                logger.log_flow_control(self.name, "ignored", self.engine.now())
            return False
        if self._pause_requested:
            return True
        self._pause_requested = True
        self.reverse.stats.pause_frames += 1
        logger.log_flow_control(self.name, "pause", self.engine.now())
        self.reverse._send_control(FrameKind.PAUSE)
        return True

    def request_resume(self) -> None:
        """Let the transmitter of this direction restart"""
        if not self.fc_enabled or not self._pause_requested:
            return
        self._pause_requested = False
        self.reverse.stats.resume_frames += 1
        logger.log_flow_control(self.name, "resume", self.engine.now())
        self.reverse._send_control(FrameKind.RESUME)

    @property
    def pause_requested(self) -> bool:
        return self._pause_requested

    def _set_paused(self, paused: bool) -> None:
        if paused == self.paused:
            return
        now = self.engine.now()
        self.paused = paused
        if paused:
            self._paused_since = now
            return
        self.stats.paused_ns += now - self._paused_since
        self._paused_since = None
        if self.is_idle():
            if self._deferred:
                self._start(self._deferred.popleft())
            elif self.sender is not None:
                self.sender.on_tx_ready(self)


class Link:
    """Full-duplex link between two endpoints"""

    def __init__(
        self,
        engine: SimEngine,
        name: str,
        a: LinkEndpoint,
        b: LinkEndpoint,
        speed_bps: int,
        propagation_delay: SimTime = 0,
        fc_enabled: bool = True,
        reaction_latency: Optional[SimTime] = None,
    ):
        """
        Args:
            engine: Simulation engine
            name: Link name used in diagnostics and counters
            a: First endpoint
            b: Second endpoint
            speed_bps: Line rate (bit/s), same in both directions
            propagation_delay: One-way propagation delay (ns)
            fc_enabled: Flow control enabled on both endpoints
            reaction_latency: Delay between PAUSE arrival and the transmitter
                stopping; defaults to one minimum-size frame time
        """
        if speed_bps <= 0:
            raise ConfigurationError(f"Link {name}: speed must be positive")
        if propagation_delay < 0:
            raise ConfigurationError(f"Link {name}: propagation delay must be >= 0")
        if reaction_latency is None:
            reaction_latency = serialization_delay(MIN_FRAME_BYTES, speed_bps)
        self.name = name
        self.speed_bps = speed_bps
        self.propagation_delay = propagation_delay
        self.a = a
        self.b = b
        self.a_to_b = LinkDirection(engine, f"{name}:{a.name}>{b.name}", speed_bps,
                                    propagation_delay, reaction_latency, fc_enabled)
        self.b_to_a = LinkDirection(engine, f"{name}:{b.name}>{a.name}", speed_bps,
                                    propagation_delay, reaction_latency, fc_enabled)
        self.a_to_b.sender, self.a_to_b.receiver = a, b
        self.b_to_a.sender, self.b_to_a.receiver = b, a
        self.a_to_b.reverse = self.b_to_a
        self.b_to_a.reverse = self.a_to_b

    def outgoing(self, endpoint: LinkEndpoint) -> LinkDirection:
        """Direction on which ``endpoint`` transmits"""
        if endpoint is self.a:
            return self.a_to_b
        if endpoint is self.b:
            return self.b_to_a
        raise ConfigurationError(f"{endpoint.name} is not attached to link {self.name}")

    def incoming(self, endpoint: LinkEndpoint) -> LinkDirection:
        """Direction on which ``endpoint`` receives"""
        return self.outgoing(endpoint).reverse

    def directions(self):
        return (self.a_to_b, self.b_to_a)


def assert_pause(link: Link, receiver: LinkEndpoint) -> bool:
    """Receiver-side PAUSE on the direction delivering into ``receiver``"""
    return link.incoming(receiver).request_pause()


def release_pause(link: Link, receiver: LinkEndpoint) -> None:
    """Receiver-side RESUME on the direction delivering into ``receiver``"""
    link.incoming(receiver).request_resume()
