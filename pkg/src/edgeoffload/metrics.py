"""Sliding-window latency store with nearest-rank percentile queries.

A ``LatencyWindow`` is single-owner: the simulator's event loop is the only
writer (gateway responses) and the only reader (controller ticks). Callers
that share a window across threads must serialize ``record`` and
``percentile`` themselves.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable


class ServedAt(str, enum.Enum):
    EDGE = "edge"
    CLOUD = "cloud"


class InsufficientData(LookupError):
    """Raised when a percentile is requested from an empty window."""


@dataclass(frozen=True)
class LatencySample:
    timestamp: float
    latency: float
    function_id: str = ""
    served_at: ServedAt = ServedAt.EDGE


@dataclass
class LatencyWindow:
    window_length: float = 30.0
    min_samples: int = 10
    samples: deque[LatencySample] = field(default_factory=deque)

    def __post_init__(self) -> None:
        if self.window_length <= 0:
            raise ValueError("window_length must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        self.samples = deque(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def record(self, sample: LatencySample) -> "LatencyWindow":
        if sample.latency < 0:
            raise ValueError(f"negative latency {sample.latency!r}")
        if self.samples and sample.timestamp < self.samples[-1].timestamp:
            raise ValueError(
                f"sample at t={sample.timestamp} precedes last sample "
                f"at t={self.samples[-1].timestamp}"
            )
        self.samples.append(sample)
        self.prune(sample.timestamp)
        return self

    def prune(self, now: float) -> None:
        """Drop samples older than ``window_length`` relative to ``now``."""
        samples = self.samples
        while samples and now - samples[0].timestamp > self.window_length:
            samples.popleft()

    def latencies(self, function_id: str | None = None) -> list[float]:
        if function_id is None:
            return [s.latency for s in self.samples]
        return [s.latency for s in self.samples if s.function_id == function_id]

    def percentile(self, q: float, function_id: str | None = None) -> float:
        return percentile(self.latencies(function_id), q)

    def has_enough_samples(self) -> bool:
        return len(self.samples) >= self.min_samples


def percentile(values: Iterable[float], q: float) -> float:
    """Nearest-rank percentile: the sorted value at 1-based rank ceil(q/100 * n)."""
    if not 0 < q <= 100:
        raise ValueError(f"percentile q must be in (0, 100], got {q!r}")
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        raise InsufficientData("no latency samples in window")
    rank = math.ceil(q * n / 100)
    return ordered[max(rank, 1) - 1]


def record(window: LatencyWindow, sample: LatencySample) -> LatencyWindow:
    return window.record(sample)
