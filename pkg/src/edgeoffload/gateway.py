"""Weighted-random edge/cloud routing at the edge API gateway."""

from __future__ import annotations

import random
from typing import NamedTuple

from .metrics import LatencySample, ServedAt
from .workload import Request

__all__ = ["Gateway", "Request", "RouteDecision", "observe_response", "route"]


class RouteDecision(NamedTuple):
    target: ServedAt
    traffic_pct_at_decision: float


def route(req: Request, traffic_pct: float, rng: random.Random) -> RouteDecision:
    """Send ``req`` to the cloud with probability ``traffic_pct`` / 100.

    Exactly one uniform draw per call, whatever the percentage, so the
    decision stream depends only on the RNG state and the pct sequence.
    """
    if not 0 <= traffic_pct <= 100:
        raise ValueError(f"traffic_pct must be in [0, 100], got {traffic_pct}")
    u = rng.random() * 100.0
    target = ServedAt.CLOUD if u < traffic_pct else ServedAt.EDGE
    return RouteDecision(target, traffic_pct)


class Gateway:
    """Routes requests and turns completions into latency samples.

    ``mode="fixed"`` pins the split at ``fixed_pct``; ``mode="auto"`` lets the
    offload controller move ``traffic_pct``.
    """

    def __init__(self, rng: random.Random, mode: str = "auto", fixed_pct: float = 0.0) -> None:
        if mode not in ("fixed", "auto"):
            raise ValueError(f"unknown gateway mode {mode!r}")
        if not 0 <= fixed_pct <= 100:
            raise ValueError("fixed_pct must be in [0, 100]")
        self.rng = rng
        self.mode = mode
        self.traffic_pct = fixed_pct if mode == "fixed" else 0.0
        self._decisions: dict[int, RouteDecision] = {}
        self.routed = {ServedAt.EDGE: 0, ServedAt.CLOUD: 0}

    def set_traffic_pct(self, pct: float) -> None:
        if self.mode == "fixed":
            raise RuntimeError("traffic split is pinned in fixed mode")
        self.traffic_pct = min(100.0, max(0.0, pct))

    def route(self, req: Request) -> RouteDecision:
        decision = route(req, self.traffic_pct, self.rng)
        self._decisions[req.id] = decision
        self.routed[decision.target] += 1
        return decision

    def pending(self) -> int:
        return len(self._decisions)

    def forget(self, req: Request) -> None:
        self._decisions.pop(req.id, None)

    def observe_response(self, req: Request, completion_time: float) -> LatencySample:
        return observe_response(self, req, completion_time)


def observe_response(gateway: Gateway, req: Request, completion_time: float) -> LatencySample:
    if completion_time < req.arrival_time:
        raise AssertionError(
            f"request {req.id} completed at {completion_time} before arriving at {req.arrival_time}"
        )
    decision = gateway._decisions.pop(req.id)
    return LatencySample(
        timestamp=completion_time,
        latency=completion_time - req.arrival_time,
        function_id=req.function_id,
        served_at=decision.target,
    )
