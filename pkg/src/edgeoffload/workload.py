"""Workload profiles and the warm/ramp/hold arrival schedule."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

MB = 1_000_000
KB = 1_000

BASE_WORKLOADS = ("matmult", "image", "io")
WORKLOADS = BASE_WORKLOADS + ("mixed",)


@dataclass(frozen=True)
class WorkloadProfile:
    """Timing and byte footprint of one request kind.

    ``compute_s`` is measured on the reference edge node (speed 1.0) and
    scales with node speed; ``io_s`` does not. A profile with ``components``
    is a mixture: each request picks one component uniformly.
    """

    name: str
    compute_s: float = 0.0
    io_s: float = 0.0
    request_bytes: int = 0
    response_bytes: int = 0
    memory_mb: float = 0.0
    components: tuple["WorkloadProfile", ...] = ()

    def __post_init__(self) -> None:
        for attr in ("compute_s", "io_s", "request_bytes", "response_bytes", "memory_mb"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{self.name}.{attr} must be non-negative")

    @property
    def is_mixture(self) -> bool:
        return bool(self.components)


def default_profiles() -> dict[str, WorkloadProfile]:
    matmult = WorkloadProfile("matmult", compute_s=1.5, request_bytes=4 * MB,
                              response_bytes=int(1.5 * MB), memory_mb=128)
    image = WorkloadProfile("image", compute_s=1.3, request_bytes=1 * MB,
                            response_bytes=200 * KB, memory_mb=96)
    io = WorkloadProfile("io", compute_s=0.1, io_s=1.6, request_bytes=64 * KB,
                         response_bytes=64 * KB, memory_mb=64)
    mixed = WorkloadProfile("mixed", components=(matmult, image, io))
    return {p.name: p for p in (matmult, image, io, mixed)}


@dataclass
class Request:
    id: int
    function_id: str
    arrival_time: float
    profile: WorkloadProfile
    request_bytes: int = 0
    response_bytes: int = 0

    def __post_init__(self) -> None:
        if self.request_bytes < 0 or self.response_bytes < 0:
            raise ValueError("payload sizes must be non-negative")


@dataclass(frozen=True)
class RampSchedule:
    low_rate: float = 2.0
    high_rate: float = 20.0
    warm_duration: float = 60.0
    ramp_duration: float = 60.0
    hold_duration: float = 120.0

    def __post_init__(self) -> None:
        if self.low_rate < 0 or self.high_rate < self.low_rate:
            raise ValueError("need 0 <= low_rate <= high_rate")
        if min(self.warm_duration, self.ramp_duration, self.hold_duration) <= 0:
            raise ValueError("schedule durations must be positive")

    @property
    def end(self) -> float:
        return self.warm_duration + self.ramp_duration + self.hold_duration

    @property
    def hold_start(self) -> float:
        return self.warm_duration + self.ramp_duration


def rate_at(schedule: RampSchedule, t: float) -> float:
    if t < 0:
        raise ValueError("time must be non-negative")
    if t < schedule.warm_duration:
        return schedule.low_rate
    if t < schedule.hold_start:
        frac = (t - schedule.warm_duration) / schedule.ramp_duration
        return schedule.low_rate + frac * (schedule.high_rate - schedule.low_rate)
    if t <= schedule.end:
        return schedule.high_rate
    return 0.0


def next_arrival(schedule: RampSchedule, now: float, rng: random.Random) -> Optional[float]:
    """Next arrival after ``now`` by thinning, or None once the schedule is over.

    The envelope is ``high_rate``, which bounds ``rate_at`` everywhere.
    """
    peak = schedule.high_rate
    if peak <= 0:
        return None
    t = now
    while True:
        t += rng.expovariate(peak)
        if t > schedule.end:
            return None
        if rng.random() * peak < rate_at(schedule, t):
            return t


@dataclass
class RequestFactory:
    """Stamps out requests for a profile, resolving mixtures with its own RNG."""

    profile: WorkloadProfile
    rng: random.Random
    _next_id: int = field(default=0, init=False)

    def __call__(self, arrival_time: float) -> Request:
        req = make_request(self.profile, self.rng, request_id=self._next_id,
                           arrival_time=arrival_time)
        self._next_id += 1
        return req


def make_request(profile: WorkloadProfile, rng: random.Random, request_id: int = 0,
                 arrival_time: float = 0.0) -> Request:
    if profile.is_mixture:
        profile = profile.components[rng.randrange(len(profile.components))]
    return Request(
        id=request_id,
        function_id=profile.name,
        arrival_time=arrival_time,
        profile=profile,
        request_bytes=profile.request_bytes,
        response_bytes=profile.response_bytes,
    )
