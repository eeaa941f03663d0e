"""Execution pools: nodes, function instances, FIFO queues and autoscaling.

A request occupies one instance concurrency slot and one node core for its
whole service time. Instances queue work FIFO when they cannot start it,
either because their concurrency slots are full, their node has no free
core, or they are still cold-starting.

Pool state is owned by the simulator event loop; nothing here is
thread-safe. Pools report follow-up work through a ``schedule`` callback
(``DISPATCH_COMPLETE`` when a request finishes, ``INSTANCE_READY`` when a
cold start ends).
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional

from .events import EventKind, Scheduler
from .workload import Request, WorkloadProfile


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    speed_factor: float = 1.0
    max_instances: int = 3
    cores: int = 4

    def __post_init__(self) -> None:
        if not self.speed_factor > 0:
            raise ValueError(f"{self.node_id}: speed_factor must be positive")
        if self.max_instances < 0:
            raise ValueError(f"{self.node_id}: max_instances must be >= 0")
        if self.cores < 1:
            raise ValueError(f"{self.node_id}: cores must be >= 1")


@dataclass(frozen=True)
class AutoscalerConfig:
    target_concurrency: float = 3.0
    scale_window: float = 10.0
    idle_timeout: float = 20.0
    cold_start_delay: float = 2.0
    min_instances: int = 0
    max_instances_per_function: int = 5

    def __post_init__(self) -> None:
        if self.target_concurrency < 1:
            raise ValueError("target_concurrency must be >= 1")
        if not self.idle_timeout > 0:
            raise ValueError("idle_timeout must be positive")
        if self.scale_window <= 0:
            raise ValueError("scale_window must be positive")
        if self.cold_start_delay < 0:
            raise ValueError("cold_start_delay must be non-negative")
        if not 0 <= self.min_instances <= self.max_instances_per_function:
            raise ValueError("need 0 <= min_instances <= max_instances_per_function")


class Node:
    __slots__ = ("spec", "busy_cores", "instances")

    def __init__(self, spec: NodeSpec) -> None:
        self.spec = spec
        self.busy_cores = 0
        self.instances: list[FunctionInstance] = []

    @property
    def node_id(self) -> str:
        return self.spec.node_id

    def has_free_core(self) -> bool:
        return self.busy_cores < self.spec.cores


@dataclass(eq=False)
class FunctionInstance:
    instance_id: str
    function_id: str
    node: Node
    concurrency_limit: int = 4
    memory_mb: float = 0.0
    in_flight: int = 0
    # (enqueue sequence, request)
    queue: deque = field(default_factory=deque)
    idle_since: Optional[float] = None
    cold_until: Optional[float] = None

    @property
    def node_id(self) -> str:
        return self.node.node_id

    @property
    def load(self) -> int:
        return self.in_flight + len(self.queue)

    @property
    def ready(self) -> bool:
        return self.cold_until is None

    def can_start(self) -> bool:
        return (self.cold_until is None and self.in_flight < self.concurrency_limit
                and self.node.has_free_core())


@dataclass(frozen=True)
class DispatchResult:
    outcome: str  # "started" | "queued" | "failed"
    instance: Optional[FunctionInstance] = None
    finish_time: Optional[float] = None


@dataclass(frozen=True)
class ResourceSample:
    t: float
    pool: str
    cpu_utilization: float
    memory_mb: float
    instances: int


class InvariantViolation(AssertionError):
    pass


def service_time(profile: WorkloadProfile, speed_factor: float) -> float:
    """Compute time scales with node speed, I/O time does not."""
    return profile.compute_s / speed_factor + profile.io_s


def _no_schedule(time: float, kind: EventKind, payload: Any) -> None:
    pass


class Pool:
    def __init__(
        self,
        name: str,
        nodes: list[NodeSpec],
        autoscaler: AutoscalerConfig | None = None,
        concurrency_limit: int = 4,
        queue_cap: int = 10,
        schedule: Scheduler | None = None,
        service_sigma: float = 0.0,
        rng: random.Random | None = None,
    ) -> None:
        if concurrency_limit < 1:
            raise ValueError("concurrency_limit must be >= 1")
        if queue_cap < 0:
            raise ValueError("queue_cap must be >= 0")
        if service_sigma < 0:
            raise ValueError("service_sigma must be >= 0")
        if service_sigma and rng is None:
            raise ValueError("service jitter needs an rng")
        self.name = name
        self.nodes = [Node(spec) for spec in nodes]
        self.autoscaler = autoscaler or AutoscalerConfig()
        self.concurrency_limit = concurrency_limit
        self.queue_cap = queue_cap
        self.schedule: Scheduler = schedule or _no_schedule
        self.service_sigma = service_sigma
        self.rng = rng
        self.functions: dict[str, list[FunctionInstance]] = {}
        self._limits: dict[str, int] = {}
        self._memory: dict[str, float] = {}
        self._samples: dict[str, deque[tuple[float, int]]] = {}
        self._instance_counter = 0
        self._enqueue_seq = 0
        self.in_flight = 0
        self.queued = 0
        self.completed = 0
        self.failed = 0
        self._busy_cores = 0
        self._busy_core_s = 0.0
        self._busy_mark = 0.0
        self._accounted_core_s = 0.0

    # -- registry -------------------------------------------------------

    def register_function(self, function_id: str, concurrency_limit: int | None = None,
                          memory_mb: float | None = None) -> None:
        self.functions.setdefault(function_id, [])
        self._samples.setdefault(function_id, deque())
        if concurrency_limit is not None:
            self._limits[function_id] = concurrency_limit
        if memory_mb is not None:
            self._memory[function_id] = memory_mb

    @property
    def total_cores(self) -> int:
        return sum(node.spec.cores for node in self.nodes)

    def instances(self, function_id: str | None = None) -> list[FunctionInstance]:
        if function_id is not None:
            return list(self.functions.get(function_id, ()))
        return [inst for insts in self.functions.values() for inst in insts]

    def instance_count(self) -> int:
        return sum(len(insts) for insts in self.functions.values())

    # -- busy-time ledger ------------------------------------------------

    def _advance(self, now: float) -> None:
        if now > self._busy_mark:
            self._busy_core_s += self._busy_cores * (now - self._busy_mark)
            self._busy_mark = now

    def busy_core_seconds(self, now: float) -> float:
        self._advance(now)
        return self._busy_core_s

    # -- instance lifecycle ---------------------------------------------

    def _place(self, function_id: str) -> Optional[Node]:
        best = None
        best_key = None
        for idx, node in enumerate(self.nodes):
            if len(node.instances) >= node.spec.max_instances:
                continue
            same = sum(1 for inst in node.instances if inst.function_id == function_id)
            key = (same, len(node.instances), -node.spec.speed_factor, idx)
            if best_key is None or key < best_key:
                best, best_key = node, key
        return best

    def can_scale_up(self, function_id: str) -> bool:
        insts = self.functions.get(function_id, ())
        return (len(insts) < self.autoscaler.max_instances_per_function
                and self._place(function_id) is not None)

    def create_instance(self, function_id: str, now: float) -> Optional[FunctionInstance]:
        insts = self.functions.setdefault(function_id, [])
        self._samples.setdefault(function_id, deque())
        if len(insts) >= self.autoscaler.max_instances_per_function:
            return None
        node = self._place(function_id)
        if node is None:
            return None
        self._instance_counter += 1
        inst = FunctionInstance(
            instance_id=f"{self.name}-{function_id}-{self._instance_counter}",
            function_id=function_id,
            node=node,
            concurrency_limit=self._limits.get(function_id, self.concurrency_limit),
            memory_mb=self._memory.get(function_id, 0.0),
            cold_until=now + self.autoscaler.cold_start_delay,
        )
        insts.append(inst)
        node.instances.append(inst)
        self.schedule(inst.cold_until, EventKind.INSTANCE_READY, (self, inst))
        return inst

    def remove_instance(self, inst: FunctionInstance) -> None:
        if inst.in_flight or inst.queue or inst.cold_until is not None:
            raise InvariantViolation(f"removing busy instance {inst.instance_id}")
        self.functions[inst.function_id].remove(inst)
        inst.node.instances.remove(inst)

    def instance_ready(self, inst: FunctionInstance, now: float) -> None:
        inst.cold_until = None
        self._drain_node(inst.node, now)
        if inst.in_flight == 0 and not inst.queue:
            inst.idle_since = now

    # -- request flow ----------------------------------------------------

    def _start(self, inst: FunctionInstance, req: Request, now: float) -> float:
        self._advance(now)
        self._busy_cores += 1
        inst.node.busy_cores += 1
        inst.in_flight += 1
        inst.idle_since = None
        self.in_flight += 1
        duration = service_time(req.profile, inst.node.spec.speed_factor)
        if self.service_sigma:
            # mean-preserving lognormal factor
            sigma = self.service_sigma
            duration *= self.rng.lognormvariate(-sigma * sigma / 2, sigma)
        finish = now + duration
        self.schedule(finish, EventKind.DISPATCH_COMPLETE, (self, inst, req))
        return finish

    def _enqueue(self, inst: FunctionInstance, req: Request) -> None:
        inst.queue.append((self._enqueue_seq, req))
        inst.idle_since = None
        self._enqueue_seq += 1
        self.queued += 1

    def dispatch(self, req: Request, now: float) -> DispatchResult:
        fid = req.function_id
        insts = self.functions.get(fid)
        if not insts:
            inst = self.create_instance(fid, now)
            if inst is None:
                self.failed += 1
                return DispatchResult("failed")
            self._enqueue(inst, req)
            return DispatchResult("queued", inst)

        best = None
        for inst in insts:
            if inst.can_start() and (best is None or inst.load < best.load):
                best = inst
        if best is not None:
            return DispatchResult("started", best, self._start(best, req, now))

        target = min(insts, key=lambda i: i.load)
        if len(target.queue) >= self.queue_cap:
            target = self.create_instance(fid, now)
            if target is None:
                self.failed += 1
                return DispatchResult("failed")
        self._enqueue(target, req)
        return DispatchResult("queued", target)

    def complete(self, inst: FunctionInstance, req: Request, now: float) -> None:
        self._advance(now)
        self._busy_cores -= 1
        inst.node.busy_cores -= 1
        inst.in_flight -= 1
        self.in_flight -= 1
        self.completed += 1
        self._drain_node(inst.node, now)
        if inst.in_flight == 0 and not inst.queue:
            inst.idle_since = now

    def _drain_node(self, node: Node, now: float) -> None:
        """Start queued work on ``node`` in global enqueue order while cores are free."""
        while node.has_free_core():
            pick = None
            for inst in node.instances:
                if (inst.queue and inst.cold_until is None
                        and inst.in_flight < inst.concurrency_limit
                        and (pick is None or inst.queue[0][0] < pick.queue[0][0])):
                    pick = inst
            if pick is None:
                return
            _, req = pick.queue.popleft()
            self.queued -= 1
            self._start(pick, req, now)

    # -- autoscaling and accounting -------------------------------------

    def autoscale_step(self, now: float) -> dict[str, int]:
        """Scale each function toward ceil(mean concurrency / target); reap idle instances.

        Returns the desired instance count per function.
        """
        cfg = self.autoscaler
        desired_by_fn = {}
        for fid, insts in self.functions.items():
            samples = self._samples[fid]
            samples.append((now, sum(i.load for i in insts)))
            while now - samples[0][0] > cfg.scale_window:
                samples.popleft()
            mean = sum(c for _, c in samples) / len(samples)
            desired = desired_instances(mean, cfg)
            desired_by_fn[fid] = desired
            while len(insts) < desired:
                if self.create_instance(fid, now) is None:
                    break
            for inst in list(insts):
                if len(insts) <= max(desired, cfg.min_instances):
                    break
                if (inst.idle_since is not None and not inst.queue and inst.in_flight == 0
                        and now - inst.idle_since >= cfg.idle_timeout):
                    self.remove_instance(inst)
        return desired_by_fn

    def account_resources(self, interval: float, now: float) -> ResourceSample:
        total = self.busy_core_seconds(now)
        busy = total - self._accounted_core_s
        self._accounted_core_s = total
        util = busy / (self.total_cores * interval) if interval > 0 else 0.0
        memory = sum(inst.memory_mb for inst in self.instances())
        return ResourceSample(now, self.name, util, memory, self.instance_count())

    def check_invariants(self) -> None:
        in_flight = queued = 0
        for insts in self.functions.values():
            for inst in insts:
                if inst.in_flight > inst.concurrency_limit:
                    raise InvariantViolation(f"{inst.instance_id}: in_flight over limit")
                if inst.cold_until is not None and inst.in_flight:
                    raise InvariantViolation(f"{inst.instance_id}: serving while cold")
                in_flight += inst.in_flight
                queued += len(inst.queue)
        for node in self.nodes:
            if not 0 <= node.busy_cores <= node.spec.cores:
                raise InvariantViolation(f"{node.node_id}: busy cores {node.busy_cores}")
        if (in_flight, queued) != (self.in_flight, self.queued):
            raise InvariantViolation(
                f"{self.name}: counters ({self.in_flight}, {self.queued}) "
                f"!= recount ({in_flight}, {queued})"
            )


def desired_instances(mean_concurrency: float, cfg: AutoscalerConfig) -> int:
    desired = math.ceil(mean_concurrency / cfg.target_concurrency - 1e-9)
    return min(cfg.max_instances_per_function, max(cfg.min_instances, desired))


def dispatch(pool: Pool, req: Request, now: float) -> DispatchResult:
    return pool.dispatch(req, now)


def autoscale_step(pool: Pool, now: float) -> dict[str, int]:
    return pool.autoscale_step(now)


def account_resources(pool: Pool, interval: float, now: float) -> ResourceSample:
    return pool.account_resources(interval, now)
