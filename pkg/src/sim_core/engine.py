"""
Deterministic discrete-event engine.

Virtual time is an integer count of nanoseconds. Events are kept in simpy's
event heap, which orders same-priority timeouts by (time, insertion id); the
engine's own sequence counter follows the same order, so ``(fire_at, seq)``
totally orders every dispatch.
"""
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Dict, Tuple

import simpy

from src.sim_core.rng import RngStream
from src.utils.error_handler import FabricSimError, ModelError, SchedulingError

SimTime = int

NS: SimTime = 1
US: SimTime = 1_000
MS: SimTime = 1_000_000
S: SimTime = 1_000_000_000


@dataclass
class Event:
    """A scheduled callback"""
    fire_at: SimTime
    seq: int
    target: str
    action: Callable[..., Any]
    args: Tuple[Any, ...] = ()
    cancelled: bool = False


@dataclass(frozen=True)
class RunSummary:
    """Result of ``run_until``"""
    events_processed: int
    final_time: SimTime


@dataclass
class EngineCounters:
    scheduled: int = 0
    processed: int = 0
    cancelled: int = 0

    @property
    def pending(self) -> int:
        return self.scheduled - self.processed - self.cancelled


class SimEngine:
    """Single-threaded event loop owning the virtual clock and random streams"""

    def __init__(self, seed: int = 1):
        """
        Args:
            seed: Base seed shared by every random stream of this instance
        """
        self.seed = seed
        self._env = simpy.Environment(initial_time=0)
        self._now: SimTime = 0
        self._pending: Dict[int, Event] = {}
        self._streams: Dict[str, RngStream] = {}
        self.counters = EngineCounters()

    def now(self) -> SimTime:
        """Current virtual time in ns"""
        return self._now

    def schedule(
        self,
        fire_at: SimTime,
        target: str,
        action: Callable[..., Any],
        *args: Any
    ) -> int:
        """
        Schedule ``action(*args)`` at absolute time ``fire_at``

        Args:
            fire_at: Absolute virtual time (ns)
            target: Name of the actor or port the event belongs to
            action: Callable invoked on dispatch
            *args: Positional arguments for the action

        Returns:
            Event id, unique within the run

        Raises:
            SchedulingError: If fire_at lies before now()
        """
        if fire_at < self._now:
            raise SchedulingError(
                f"Cannot schedule {target} at t={fire_at} before now={self._now}",
                fire_at=fire_at,
                now=self._now,
            )
        seq = self.counters.scheduled
        self.counters.scheduled += 1
        event = Event(int(fire_at), seq, target, action, args)
        self._pending[seq] = event

        timeout = self._env.timeout(int(fire_at) - self._env.now)
        timeout.callbacks.append(partial(self._dispatch, event))
        return seq

    def schedule_in(
        self,
        delay: SimTime,
        target: str,
        action: Callable[..., Any],
        *args: Any
    ) -> int:
        """Schedule relative to now()"""
        return self.schedule(self._now + delay, target, action, *args)

    def cancel(self, event_id: int) -> bool:
        """
        Cancel a pending event

        Returns:
            True if the event was pending and is now cancelled
        """
        event = self._pending.pop(event_id, None)
        if event is None:
            return False
        event.cancelled = True
        self.counters.cancelled += 1
        return True

    def _dispatch(self, event: Event, _timeout: simpy.events.Event) -> None:
        if event.cancelled:
            return
        del self._pending[event.seq]
        self._now = event.fire_at
        self.counters.processed += 1
        try:
            event.action(*event.args)
        except ModelError as exc:
            if exc.actor is None:
                exc.actor = event.target
                exc.details["actor"] = event.target
            raise
        except FabricSimError:
            raise
        except Exception as exc:
            raise ModelError(
                f"Handler failed at t={event.fire_at}: {exc}",
                actor=event.target,
                details={"sim_time_ns": event.fire_at},
                original_error=exc,
            ) from exc

    def run_until(self, t_end: SimTime) -> RunSummary:
        """
        Process every event with fire_at <= t_end in (fire_at, seq) order

        Args:
            t_end: Inclusive horizon (ns)

        Returns:
            RunSummary with the number of events processed during this call

        Raises:
            ModelError: If a handler raises; names the actor
        """
        if t_end < self._now:
            raise SchedulingError(
                f"Run horizon t={t_end} lies before now={self._now}",
                fire_at=t_end,
                now=self._now,
            )
        processed_before = self.counters.processed
        env = self._env
        while env.peek() <= t_end:
            env.step()
        self._now = t_end
        return RunSummary(self.counters.processed - processed_before, self._now)

    @property
    def events_pending(self) -> int:
        return len(self._pending)

    def rng(self, name: str) -> RngStream:
        """
        Random stream for a named stochastic source

        The stream id is derived from the name, so draws do not depend on the
        order in which sources are created.
        """
        stream = self._streams.get(name)
        if stream is None:
            stream = RngStream.for_name(self.seed, name)
            self._streams[name] = stream
        return stream
