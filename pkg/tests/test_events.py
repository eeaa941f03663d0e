from __future__ import annotations

import pytest

from edgeoffload.events import EventKind, EventQueue


def test_pops_in_time_then_insertion_order():
    q = EventQueue()
    q.schedule(2.0, EventKind.ARRIVAL, "c")
    q.schedule(1.0, EventKind.METRICS_TICK, "a")
    q.schedule(1.0, EventKind.ARRIVAL, "b")
    assert [q.pop().payload for _ in range(3)] == ["a", "b", "c"]
    assert q.now == 2.0


def test_cannot_schedule_into_the_past():
    q = EventQueue()
    q.schedule(5.0, EventKind.ARRIVAL)
    q.pop()
    with pytest.raises(ValueError):
        q.schedule(4.0, EventKind.ARRIVAL)


def test_peek_and_len():
    q = EventQueue()
    assert q.peek_time() is None and len(q) == 0
    q.schedule(3.0, EventKind.ARRIVAL)
    assert q.peek_time() == 3.0 and len(q) == 1
