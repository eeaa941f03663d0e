"""Single-run discrete-event simulation of the edge gateway, pools and link.

Request path: arrival -> gateway decision -> either the edge pool, or the
uplink, the cloud pool and the downlink -> response observed at the gateway.
A run is a pure function of (config, seed). Independent RNG streams for
routing, arrivals, mixed-profile choice and per-pool service-time jitter
are derived from the seed by fixed labels, so extra draws in one subsystem
never shift another.
"""

from __future__ import annotations

import hashlib
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional

from .cluster import InvariantViolation, Pool
from .config import SimConfig
from .controller import LatencyRatioStrategy
from .events import EventKind, EventQueue
from .gateway import Gateway
from .metrics import LatencyWindow, ServedAt, percentile
from .network import Link
from .replicator import Replicator, ServiceSpec, ServiceStore, Source
from .workload import Request, RequestFactory, next_arrival

logger = logging.getLogger(__name__)

TRACE_TAIL = 32


class SimulationError(RuntimeError):
    def __init__(self, message: str, trace_tail: list[str]) -> None:
        self.trace_tail = trace_tail
        super().__init__(message + "\nlast events:\n  " + "\n  ".join(trace_tail))


def derive_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def split_label(cfg: SimConfig) -> str:
    if cfg["gateway.mode"] == "auto":
        return "auto"
    pct = cfg["gateway.fixed_pct"]
    return str(int(pct)) if pct == int(pct) else repr(pct)


@dataclass
class RunResult:
    workload: str
    split: str
    seed: int
    generated: int = 0
    successful: int = 0
    failed: int = 0
    unfinished: int = 0
    routed_edge: int = 0
    routed_cloud: int = 0
    latencies: list[float] = field(default_factory=list, repr=False)
    # (t_s, metric, value), sorted by time
    series: list[tuple[float, str, float]] = field(default_factory=list, repr=False)
    final_instances: dict[str, int] = field(default_factory=dict)
    end_time: float = 0.0
    config: dict[str, str] = field(default_factory=dict, repr=False)

    @property
    def mean_latency(self) -> float:
        return sum(self.latencies) / len(self.latencies) if self.latencies else float("nan")

    @property
    def p95_latency(self) -> float:
        return percentile(self.latencies, 95) if self.latencies else float("nan")

    def metric(self, name: str) -> list[tuple[float, float]]:
        return [(t, v) for t, m, v in self.series if m == name]


class Simulation:
    def __init__(self, cfg: SimConfig, seed: int | None = None) -> None:
        cfg.validate()
        self.cfg = cfg
        self.seed = cfg["runner.seed"] if seed is None else seed
        self.queue = EventQueue()
        self.schedule = cfg.schedule()
        self.end_time = self.schedule.end + cfg["runner.drain_s"]
        self.deadline: Optional[float] = cfg["runner.deadline_s"]

        routing_seed = cfg["gateway.rng_seed"]
        if routing_seed is None:
            routing_seed = derive_seed(self.seed, "routing")
        self.arrival_rng = random.Random(derive_seed(self.seed, "arrivals"))
        self.gateway = Gateway(random.Random(routing_seed), cfg["gateway.mode"], cfg["gateway.fixed_pct"])
        profiles = cfg.profiles()
        self.profile = profiles[cfg["workload.name"]]
        self.make_request = RequestFactory(self.profile, random.Random(derive_seed(self.seed, "profile")))

        self.strategy = LatencyRatioStrategy(cfg.offload()) if cfg["gateway.mode"] == "auto" else None
        self.window = LatencyWindow(cfg["metrics.window_s"], cfg["metrics.min_samples"])
        self.edge_only_samples = cfg["offload.sample_scope"] == "edge_only"

        sched = self.queue.schedule
        limit, cap = cfg["cluster.concurrency_limit"], cfg["cluster.queue_cap"]
        sigma = cfg["cluster.service_sigma"]
        self.edge = Pool("edge", cfg.nodes("edge"), cfg.autoscaler("edge"), limit, cap, sched,
                         sigma, random.Random(derive_seed(self.seed, "service/edge")))
        self.cloud = Pool("cloud", cfg.nodes("cloud"), cfg.autoscaler("cloud"), limit, cap, sched,
                          sigma, random.Random(derive_seed(self.seed, "service/cloud")))
        self.link = Link(cfg.link())
        self.half_rtt = cfg.link().rtt / 2
        self._deploy_functions(profiles, limit)

        self.generated = 0
        self.successful = 0
        self.failed = 0
        self.in_transit = 0
        self.latencies: list[float] = []
        self.series: list[tuple[float, str, float]] = []
        self._trace: deque[str] = deque(maxlen=TRACE_TAIL)
        self._handlers = {
            EventKind.ARRIVAL: self._on_arrival,
            EventKind.DISPATCH_COMPLETE: self._on_dispatch_complete,
            EventKind.TRANSFER_COMPLETE: self._on_transfer_complete,
            EventKind.INSTANCE_READY: self._on_instance_ready,
            EventKind.AUTOSCALE_TICK: self._on_autoscale_tick,
            EventKind.CONTROL_TICK: self._on_control_tick,
            EventKind.METRICS_TICK: self._on_metrics_tick,
        }

    def _deploy_functions(self, profiles: dict, limit: int) -> None:
        """Publish one service per function in the cloud and replicate it to the edge."""
        cloud_store, edge_store = ServiceStore(Source.CLOUD), ServiceStore(Source.EDGE)
        self.replicator = Replicator(cloud_store, edge_store)
        functions = self.profile.components or (self.profile,)
        for fn in functions:
            cloud_store.apply(ServiceSpec(fn.name, managed_spec={
                "image": f"registry.local/{fn.name}:latest",
                "profile": fn.name,
                "concurrency_limit": limit,
                "env": {},
            }))
        for fn in functions:
            self.cloud.register_function(fn.name, cloud_store.get(fn.name).managed_spec["concurrency_limit"],
                                         fn.memory_mb)
            self.edge.register_function(fn.name, edge_store.get(fn.name).managed_spec["concurrency_limit"],
                                        fn.memory_mb)

    # -- event loop -------------------------------------------------------

    def run(self) -> RunResult:
        q = self.queue
        first = next_arrival(self.schedule, 0.0, self.arrival_rng)
        if first is not None:
            q.schedule(first, EventKind.ARRIVAL)
        q.schedule(0.0, EventKind.AUTOSCALE_TICK, 0)
        if self.strategy is not None:
            q.schedule(0.0, EventKind.CONTROL_TICK, 0)
        q.schedule(0.0, EventKind.METRICS_TICK, 0)

        handlers = self._handlers
        trace = self._trace
        end = self.end_time
        while q:
            ev = q.pop()
            if ev.time > end:
                break
            trace.append(f"t={ev.time:.6f} #{ev.sequence} {ev.kind.name}")
            try:
                handlers[ev.kind](ev.time, ev.payload)
            except InvariantViolation as exc:
                raise SimulationError(str(exc), list(trace)) from exc
        q.now = end
        return self._result()

    def _tick(self, kind: EventKind, k: int, interval: float) -> None:
        # absolute k * interval keeps the cadence exact
        t = (k + 1) * interval
        if t <= self.end_time:
            self.queue.schedule(t, kind, k + 1)

    def _on_arrival(self, now: float, _payload: Any) -> None:
        req = self.make_request(now)
        self.generated += 1
        decision = self.gateway.route(req)
        if decision.target is ServedAt.EDGE:
            if self.edge.dispatch(req, now).outcome == "failed":
                self._fail(req)
        else:
            self._send(req, req.request_bytes, now, "up")
        nxt = next_arrival(self.schedule, now, self.arrival_rng)
        if nxt is not None:
            self.queue.schedule(nxt, EventKind.ARRIVAL)

    def _send(self, req: Request, nbytes: int, now: float, direction: str) -> None:
        self.in_transit += 1
        done = self.link.transfer_time(nbytes, now, direction)
        self.queue.schedule(done + self.half_rtt, EventKind.TRANSFER_COMPLETE, (direction, req))

    def _on_transfer_complete(self, now: float, payload: tuple[str, Request]) -> None:
        direction, req = payload
        self.in_transit -= 1
        if direction == "up":
            if self.cloud.dispatch(req, now).outcome == "failed":
                self._fail(req)
        else:
            self._respond(req, now)

    def _on_dispatch_complete(self, now: float, payload: tuple) -> None:
        pool, inst, req = payload
        pool.complete(inst, req, now)
        if pool is self.edge:
            self._respond(req, now)
        else:
            self._send(req, req.response_bytes, now, "down")

    def _on_instance_ready(self, now: float, payload: tuple) -> None:
        pool, inst = payload
        pool.instance_ready(inst, now)

    def _respond(self, req: Request, now: float) -> None:
        sample = self.gateway.observe_response(req, now)
        if self.deadline is not None and sample.latency > self.deadline:
            self.failed += 1
            return
        self.successful += 1
        self.latencies.append(sample.latency)
        self.series.append((now, "latency_s", sample.latency))
        if not self.edge_only_samples or sample.served_at is ServedAt.EDGE:
            self.window.record(sample)

    def _fail(self, req: Request) -> None:
        self.failed += 1
        self.gateway.forget(req)

    def _on_autoscale_tick(self, now: float, k: int) -> None:
        self.edge.autoscale_step(now)
        self.cloud.autoscale_step(now)
        self._tick(EventKind.AUTOSCALE_TICK, k, self.cfg["autoscaler.interval_s"])

    def _on_control_tick(self, now: float, k: int) -> None:
        self.window.prune(now)
        pct = self.strategy.step(self.window)
        self.gateway.set_traffic_pct(pct)
        self._tick(EventKind.CONTROL_TICK, k, self.cfg["offload.control_interval_s"])

    def _on_metrics_tick(self, now: float, k: int) -> None:
        interval = self.cfg["metrics.interval_s"]
        self.check_conservation()
        if k > 0:
            for pool in (self.edge, self.cloud):
                sample = pool.account_resources(interval, now)
                self.series.append((now, f"{pool.name}_cpu_util", sample.cpu_utilization))
                self.series.append((now, f"{pool.name}_memory_mb", sample.memory_mb))
                self.series.append((now, f"{pool.name}_instances", float(sample.instances)))
        self.series.append((now, "traffic_pct", self.gateway.traffic_pct))
        self._tick(EventKind.METRICS_TICK, k, interval)

    def outstanding(self) -> int:
        return (self.edge.in_flight + self.edge.queued + self.cloud.in_flight + self.cloud.queued
                + self.in_transit)

    def check_conservation(self) -> None:
        self.edge.check_invariants()
        self.cloud.check_invariants()
        accounted = self.successful + self.failed + self.outstanding()
        if accounted != self.generated:
            raise InvariantViolation(
                f"conservation broken: generated={self.generated} "
                f"!= successful+failed+outstanding={accounted}"
            )

    def _result(self) -> RunResult:
        try:
            self.check_conservation()
        except InvariantViolation as exc:
            raise SimulationError(str(exc), list(self._trace)) from exc
        interval = self.cfg["metrics.interval_s"]
        for t, rate in self.link.throughput_series(self.end_time, interval):
            self.series.append((t, "link_bytes_per_s", rate))
        series = sorted(self.series, key=lambda row: row[0])
        return RunResult(
            workload=self.cfg["workload.name"],
            split=split_label(self.cfg),
            seed=self.seed,
            generated=self.generated,
            successful=self.successful,
            failed=self.failed,
            unfinished=self.outstanding(),
            routed_edge=self.gateway.routed[ServedAt.EDGE],
            routed_cloud=self.gateway.routed[ServedAt.CLOUD],
            latencies=self.latencies,
            series=series,
            final_instances={"edge": self.edge.instance_count(), "cloud": self.cloud.instance_count()},
            end_time=self.end_time,
            config=self.cfg.snapshot(),
        )


def run(cfg: SimConfig, seed: int | None = None) -> RunResult:
    return Simulation(cfg, seed).run()
