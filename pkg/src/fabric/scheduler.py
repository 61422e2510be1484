"""
Egress queues and schedulers: fifo, strict priority and byte-deficit round robin
"""
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, Dict, List, Optional

from src.ether.frame import Frame, MAX_FRAME_BYTES
from src.utils.error_handler import ConfigurationError

N_PRIORITIES = 8


class SchedulerKind(str, Enum):
    FIFO = "fifo"
    STRICT = "strict"
    WRR = "wrr"


@dataclass
class QueuedFrame:
    """A frame copy waiting inside a switch"""
    frame: Frame
    vlan: int
    ingress: int
    egress: int
    enqueued_at: int
    primary: bool = True

    @property
    def size(self) -> int:
        return self.frame.size_bytes


class EgressQueues:
    """Byte-bounded FIFO per class"""

    def __init__(self, n_queues: int, limit_bytes: int):
        if n_queues < 1:
            raise ConfigurationError("An egress port needs at least one queue")
        if limit_bytes < MAX_FRAME_BYTES:
            raise ConfigurationError(
                f"Per-queue buffer must hold one maximum frame, got {limit_bytes} B"
            )
        self.limit_bytes = limit_bytes
        self._queues: List[Deque[QueuedFrame]] = [deque() for _ in range(n_queues)]
        self._bytes = [0] * n_queues
        self.total_bytes = 0
        self.total_frames = 0

    @property
    def n_queues(self) -> int:
        return len(self._queues)

    @property
    def capacity_bytes(self) -> int:
        return self.limit_bytes * self.n_queues

    def class_of(self, priority: int) -> int:
        return priority if self.n_queues > 1 else 0

    def fits(self, cls: int, size: int) -> bool:
        return self._bytes[cls] + size <= self.limit_bytes

    def push(self, cls: int, item: QueuedFrame) -> bool:
        if not self.fits(cls, item.size):
            return False
        self._queues[cls].append(item)
        self._bytes[cls] += item.size
        self.total_bytes += item.size
        self.total_frames += 1
        return True

    def pop(self, cls: int) -> QueuedFrame:
        item = self._queues[cls].popleft()
        self._bytes[cls] -= item.size
        self.total_bytes -= item.size
        self.total_frames -= 1
        return item

    def head_size(self, cls: int) -> int:
        return self._queues[cls][0].size

    def is_empty(self, cls: Optional[int] = None) -> bool:
        if cls is None:
            return self.total_frames == 0
        return not self._queues[cls]

    def bytes_in(self, cls: int) -> int:
        return self._bytes[cls]

    def occupancy(self, cls: int) -> float:
        return self._bytes[cls] / self.limit_bytes

    def max_occupancy(self) -> float:
        return max(self._bytes) / self.limit_bytes


class Scheduler(ABC):
    """Picks the class to serve next when the line goes idle"""

    kind: SchedulerKind

    @abstractmethod
    def select(self, queues: EgressQueues) -> Optional[int]:
        """
        Args:
            queues: Queues of the port

        Returns:
            Class index to dequeue from, or None when every queue is empty
        """


class FifoScheduler(Scheduler):
    kind = SchedulerKind.FIFO

    def select(self, queues: EgressQueues) -> Optional[int]:
        for cls in range(queues.n_queues):
            if not queues.is_empty(cls):
                return cls
        return None


class StrictPriorityScheduler(Scheduler):
    kind = SchedulerKind.STRICT

    def select(self, queues: EgressQueues) -> Optional[int]:
        for cls in range(queues.n_queues - 1, -1, -1):
            if not queues.is_empty(cls):
                return cls
        return None


class DeficitRoundRobinScheduler(Scheduler):
    """
    Byte-based deficit round robin

    Each class gets a quantum proportional to its weight, the smallest weight
    mapping to one maximum-size frame. Classes without a configured weight get
    the smallest weight.
    """
    kind = SchedulerKind.WRR

    def __init__(self, weights: Dict[int, float], n_queues: int = N_PRIORITIES):
        if not weights or any(w <= 0 for w in weights.values()):
            raise ConfigurationError(f"WRR weights must be positive, got {weights}")
        min_weight = min(weights.values())
        self.quantum = [
            MAX_FRAME_BYTES * weights.get(cls, min_weight) / min_weight for cls in range(n_queues)
        ]
        self.deficit = [0.0] * n_queues
        self._active: Deque[int] = deque()
        self._is_active = [False] * n_queues
        self._granted = [False] * n_queues

    def select(self, queues: EgressQueues) -> Optional[int]:
        for cls in range(queues.n_queues):
            if not self._is_active[cls] and not queues.is_empty(cls):
                self._active.append(cls)
                self._is_active[cls] = True
        while self._active:
            cls = self._active[0]
            if queues.is_empty(cls):
                self._active.popleft()
                self._is_active[cls] = False
                self._granted[cls] = False
                self.deficit[cls] = 0.0
                continue
            if not self._granted[cls]:
                self.deficit[cls] += self.quantum[cls]
                self._granted[cls] = True
            size = queues.head_size(cls)
            if size <= self.deficit[cls]:
                self.deficit[cls] -= size
                return cls
            self._granted[cls] = False
            self._active.rotate(-1)
        return None


def make_scheduler(kind: SchedulerKind, weights: Optional[Dict[int, float]] = None) -> Scheduler:
    kind = SchedulerKind(kind)
    if kind is SchedulerKind.WRR:
        return DeficitRoundRobinScheduler(weights or {p: 1 for p in range(N_PRIORITIES)})
    if kind is SchedulerKind.STRICT:
        return StrictPriorityScheduler()
    return FifoScheduler()


def queue_count(kind: SchedulerKind) -> int:
    return 1 if SchedulerKind(kind) is SchedulerKind.FIFO else N_PRIORITIES
