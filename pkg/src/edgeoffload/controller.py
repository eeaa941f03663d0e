"""Latency-ratio offloading controller.

Every control interval the controller turns the tail/median latency ratio
seen at the edge gateway into the percentage of traffic that the gateway
should send to the cloud:

1. ``latency_ratio``   p95 / p50 of the current latency window.
2. ``decayed_ratio``   exponentially weighted mean of the last ``c_t + 1``
                       ratios, most recent weighted highest.
3. ``target_traffic``  0 below ``c_soft``, 100 above ``c_hard``, linear between.
4. ``update_traffic``  first-order smoothing of the target with inertia ``c_in``.

All functions are pure over explicit state values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Protocol

from .metrics import LatencyWindow, percentile

logger = logging.getLogger(__name__)

NEUTRAL_RATIO = 1.0


@dataclass(frozen=True)
class OffloadConfig:
    c_decay: float = 0.9
    c_t: int = 15
    c_soft: float = 2.0
    c_hard: float = 5.0
    c_in: float = 0.9
    control_interval: float = 2.0

    def __post_init__(self) -> None:
        if not 0 < self.c_decay <= 1:
            raise ValueError(f"c_decay must be in (0, 1], got {self.c_decay}")
        if self.c_t < 0 or int(self.c_t) != self.c_t:
            raise ValueError(f"c_t must be a non-negative integer, got {self.c_t}")
        if not self.c_soft < self.c_hard:
            raise ValueError(f"c_soft ({self.c_soft}) must be below c_hard ({self.c_hard})")
        if not 0 <= self.c_in < 1:
            raise ValueError(f"c_in must be in [0, 1), got {self.c_in}")
        if self.control_interval <= 0:
            raise ValueError("control_interval must be positive")


@dataclass(frozen=True)
class OffloadState:
    # most recent ratio first
    ratio_history: tuple[float, ...] = ()
    traffic_pct: float = 0.0


def latency_ratio(window: LatencyWindow) -> float:
    """p95/p50 of the window, or the neutral ratio 1 when data is short."""
    if not window.has_enough_samples():
        return NEUTRAL_RATIO
    latencies = window.latencies()
    p50 = percentile(latencies, 50)
    if p50 <= 0:
        logger.warning("degenerate latency distribution: p50 = %r", p50)
        return NEUTRAL_RATIO
    return percentile(latencies, 95) / p50


def decayed_ratio(state: OffloadState, cfg: OffloadConfig) -> float:
    history = state.ratio_history
    if not history:
        return NEUTRAL_RATIO
    m = min(cfg.c_t, len(history) - 1)
    num = 0.0
    den = 0.0
    weight = 1.0
    for k in range(m + 1):
        num += weight * history[k]
        den += weight
        weight *= cfg.c_decay
    return num / den


def target_traffic(smoothed: float, cfg: OffloadConfig) -> float:
    if smoothed < cfg.c_soft:
        return 0.0
    if smoothed > cfg.c_hard:
        return 100.0
    return 100.0 * (smoothed - cfg.c_soft) / (cfg.c_hard - cfg.c_soft)


def update_traffic(state: OffloadState, target: float, cfg: OffloadConfig) -> OffloadState:
    if not 0 <= target <= 100:
        raise ValueError(f"target traffic must be in [0, 100], got {target}")
    pct = state.traffic_pct * cfg.c_in + target * (1 - cfg.c_in)
    # rounding can push a convex combination of in-range values a hair outside
    pct = min(100.0, max(0.0, pct))
    return replace(state, traffic_pct=pct)


def push_ratio(state: OffloadState, ratio: float, cfg: OffloadConfig) -> OffloadState:
    history = (ratio,) + state.ratio_history[: cfg.c_t]
    return replace(state, ratio_history=history)


def control_step(state: OffloadState, window: LatencyWindow, cfg: OffloadConfig) -> OffloadState:
    ratio = latency_ratio(window)
    state = push_ratio(state, ratio, cfg)
    target = target_traffic(decayed_ratio(state, cfg), cfg)
    return update_traffic(state, target, cfg)


class OffloadStrategy(Protocol):
    """Anything that maps a latency window to a cloud traffic percentage."""

    def step(self, window: LatencyWindow) -> float: ...


class LatencyRatioStrategy:
    """Stateful wrapper around ``control_step`` used by the simulator."""

    def __init__(self, cfg: OffloadConfig | None = None) -> None:
        self.cfg = cfg or OffloadConfig()
        self.state = OffloadState()

    @property
    def traffic_pct(self) -> float:
        return self.state.traffic_pct

    def step(self, window: LatencyWindow) -> float:
        self.state = control_step(self.state, window, self.cfg)
        return self.state.traffic_pct
