"""Event queue with a total (time, sequence) order."""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Any, Callable


class EventKind(enum.IntEnum):
    ARRIVAL = 1
    DISPATCH_COMPLETE = 2
    TRANSFER_COMPLETE = 3
    AUTOSCALE_TICK = 4
    CONTROL_TICK = 5
    METRICS_TICK = 6
    INSTANCE_READY = 7


@dataclass(order=True, frozen=True)
class SimEvent:
    time: float
    sequence: int
    kind: EventKind = field(compare=False)
    payload: Any = field(compare=False, default=None)


Scheduler = Callable[[float, EventKind, Any], None]


class EventQueue:
    def __init__(self) -> None:
        self._heap: list[tuple[float, int, EventKind, Any]] = []
        self._seq = 0
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time: float, kind: EventKind, payload: Any = None) -> SimEvent:
        if time < self.now:
            raise ValueError(f"cannot schedule {kind.name} at {time} before now={self.now}")
        entry = (time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, entry)
        return SimEvent(*entry)

    def pop(self) -> SimEvent:
        entry = heapq.heappop(self._heap)
        self.now = entry[0]
        return SimEvent(*entry)

    def peek_time(self) -> float | None:
        return self._heap[0][0] if self._heap else None
