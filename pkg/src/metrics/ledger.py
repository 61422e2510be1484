"""
Event ledger: lifecycle of every LVL1-accepted event
"""
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from src.sim_core.engine import SimTime
from src.utils.error_handler import ModelError


class EventState(str, Enum):
    AT_LVL1 = "at_lvl1"
    AT_L2 = "at_l2"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    BUILT = "built"
    CLEARED = "cleared"
    ERROR = "error"


_NEXT: Dict[EventState, Tuple[EventState, ...]] = {
    EventState.AT_LVL1: (EventState.AT_L2,),
    EventState.AT_L2: (EventState.ACCEPTED, EventState.REJECTED),
    EventState.ACCEPTED: (EventState.BUILT,),
    EventState.REJECTED: (EventState.CLEARED,),
    EventState.BUILT: (EventState.CLEARED,),
    EventState.CLEARED: (),
    EventState.ERROR: (),
}

TERMINAL = (EventState.CLEARED, EventState.ERROR)


@dataclass
class EventRecord:
    event_id: int
    roi: List[Tuple[int, int]]
    total_size_bytes: int
    state: EventState = EventState.AT_LVL1
    t_lvl1: SimTime = 0
    t_decision: Optional[SimTime] = None
    t_built: Optional[SimTime] = None
    t_cleared: Optional[SimTime] = None
    accepted: bool = False
    history: List[EventState] = field(default_factory=list)


class DataflowLedger:
    """Tracks every event from LVL1 to clear; illegal transitions are model faults"""

    def __init__(self):
        self.events: Dict[int, EventRecord] = {}
        self.errors = 0

    def open(self, event_id: int, roi: List[Tuple[int, int]], total_size: int, now: SimTime) -> EventRecord:
        if event_id in self.events:
            raise ModelError(f"Event {event_id} injected twice")
        record = EventRecord(event_id, roi, total_size, t_lvl1=now, history=[EventState.AT_LVL1])
        self.events[event_id] = record
        return record

    def get(self, event_id: int) -> Optional[EventRecord]:
        return self.events.get(event_id)

    def advance(self, event_id: int, state: EventState, now: SimTime) -> EventRecord:
        """
        Move an event to ``state``

        Raises:
            ModelError: On an unknown event or a transition out of order
        """
        record = self.events.get(event_id)
        if record is None:
            raise ModelError(f"Unknown event {event_id}")
        if state not in _NEXT[record.state]:
            raise ModelError(
                f"Event {event_id}: illegal transition {record.state.value} -> {state.value}"
            )
        record.state = state
        record.history.append(state)
        if state in (EventState.ACCEPTED, EventState.REJECTED):
            record.t_decision = now
            record.accepted = state is EventState.ACCEPTED
        elif state is EventState.BUILT:
            record.t_built = now
        elif state is EventState.CLEARED:
            record.t_cleared = now
        return record

    def fail(self, event_id: int, now: SimTime) -> None:
        """Terminate an event as error (timeouts exhausted); errors are never cleared"""
        record = self.events.get(event_id)
        if record is None or record.state in TERMINAL:
            return
        record.state = EventState.ERROR
        record.history.append(EventState.ERROR)
        self.errors += 1

    def is_open(self, event_id: int) -> bool:
        record = self.events.get(event_id)
        return record is not None and record.state not in TERMINAL

    def census(self) -> Counter:
        return Counter(r.state.value for r in self.events.values())

    def unfinished(self) -> List[int]:
        return sorted(i for i, r in self.events.items() if r.state not in TERMINAL)

    def rows(self) -> List[Tuple]:
        """events.csv rows ordered by event id"""
        return [
            (r.event_id, r.state.value, r.t_lvl1, r.t_decision, r.t_built, r.t_cleared)
            for r in sorted(self.events.values(), key=lambda r: r.event_id)
        ]
