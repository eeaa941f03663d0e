"""Edge-to-cloud link: fixed round-trip time plus a FIFO byte pipe."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LinkSpec:
    rtt: float = 0.05
    bandwidth: float = 100e6  # bytes/s
    shared: bool = True  # one pipe for both directions

    def __post_init__(self) -> None:
        if self.rtt < 0:
            raise ValueError("rtt must be non-negative")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class Transfer:
    bytes: int
    enqueue_time: float
    start_time: float
    finish_time: float
    direction: str = "up"


class _Pipe:
    __slots__ = ("busy_until", "ledger")

    def __init__(self) -> None:
        self.busy_until = 0.0
        self.ledger: list[Transfer] = []


@dataclass
class Link:
    """Serializes transfers in enqueue order; every byte moves at full bandwidth.

    Transfers must be enqueued in non-decreasing ``now`` order, which the
    event loop guarantees.
    """

    spec: LinkSpec = field(default_factory=LinkSpec)
    keep_ledger: bool = True

    def __post_init__(self) -> None:
        self._up = _Pipe()
        self._down = self._up if self.spec.shared else _Pipe()
        self.bytes_moved = 0

    def _pipe(self, direction: str) -> _Pipe:
        return self._down if direction == "down" else self._up

    def busy_until(self, direction: str = "up") -> float:
        return self._pipe(direction).busy_until

    def transfer_time(self, nbytes: int, now: float, direction: str = "up") -> float:
        """Enqueue ``nbytes`` at ``now`` and return when the last byte lands."""
        if nbytes < 0:
            raise ValueError("transfer size must be non-negative")
        pipe = self._pipe(direction)
        start = max(now, pipe.busy_until)
        finish = start + nbytes / self.spec.bandwidth
        pipe.busy_until = finish
        self.bytes_moved += nbytes
        if self.keep_ledger and nbytes:
            pipe.ledger.append(Transfer(nbytes, now, start, finish, direction))
        return finish

    @property
    def ledger(self) -> list[Transfer]:
        if self._down is self._up:
            return list(self._up.ledger)
        return sorted(self._up.ledger + self._down.ledger, key=lambda t: t.start_time)

    def throughput(self, start: float, end: float, direction: str | None = None) -> float:
        """Mean bytes/s delivered in ``[start, end)`` from the transfer ledger."""
        if end <= start:
            raise ValueError("empty interval")
        moved = 0.0
        for tr in self.ledger:
            if direction is not None and tr.direction != direction:
                continue
            lo = max(start, tr.start_time)
            hi = min(end, tr.finish_time)
            if hi > lo:
                moved += tr.bytes * (hi - lo) / (tr.finish_time - tr.start_time)
        return moved / (end - start)

    def throughput_series(self, horizon: float, step: float = 1.0) -> list[tuple[float, float]]:
        """Per-interval throughput ``(interval_start, bytes/s)`` over ``[0, horizon)``."""
        n = math.ceil(horizon / step)
        buckets = [0.0] * n
        for tr in self.ledger:
            duration = tr.finish_time - tr.start_time
            rate = tr.bytes / duration
            i = int(tr.start_time // step)
            while i < n and i * step < tr.finish_time:
                lo = max(i * step, tr.start_time)
                hi = min((i + 1) * step, tr.finish_time)
                if hi > lo:
                    buckets[i] += rate * (hi - lo)
                i += 1
        return [(i * step, b / step) for i, b in enumerate(buckets)]


def transfer_time(link: Link, nbytes: int, now: float, direction: str = "up") -> float:
    return link.transfer_time(nbytes, now, direction)


@dataclass(frozen=True)
class OffloadTiming:
    request_done: float
    service_s: float
    response_done: float
    rtt: float

    @property
    def total(self) -> float:
        return self.response_done + self.rtt / 2


def offload_latency(link: Link, request_bytes: int, response_bytes: int,
                    cloud_service_time: float, now: float) -> tuple[float, OffloadTiming]:
    """End-to-end latency of one offloaded request when nothing queues at the cloud.

    Half the RTT is spent on each leg. Returns ``(latency, components)``.
    """
    half = link.spec.rtt / 2
    up_done = link.transfer_time(request_bytes, now, "up")
    served = up_done + half + cloud_service_time
    down_done = link.transfer_time(response_bytes, served, "down")
    timing = OffloadTiming(up_done, cloud_service_time, down_done, link.spec.rtt)
    # sum durations rather than subtracting absolute times, so an idle
    # zero-cost path reports the service time exactly
    latency = (up_done - now) + half + cloud_service_time + (down_done - served) + half
    return latency, timing
