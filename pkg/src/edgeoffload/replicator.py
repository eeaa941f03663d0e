"""Cloud-to-edge service replication with selective field overwrite.

The cloud store is the source of truth for the managed spec fields. The
edge copy keeps its own status and any annotations the replicator does not
own, so edge-side churn (status updates, autoscaler hints) never looks like
drift and never triggers a write back. That is what keeps the two control
loops from feeding each other.
"""

from __future__ import annotations

import copy
import enum
import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional

MANAGED_FIELDS = ("image", "profile", "concurrency_limit", "env")
MANAGED_PREFIX = "edge.managed/"
SOURCE_GENERATION = MANAGED_PREFIX + "source-generation"


class Source(str, enum.Enum):
    CLOUD = "cloud"
    EDGE = "edge"


class EventType(str, enum.Enum):
    ADDED = "Added"
    MODIFIED = "Modified"
    DELETED = "Deleted"


@dataclass(frozen=True)
class ServiceSpec:
    name: str
    generation: int = 0
    managed_spec: dict[str, Any] = field(default_factory=dict)
    status: dict[str, Any] = field(default_factory=dict)
    annotations: dict[str, str] = field(default_factory=dict)

    def managed_annotations(self) -> dict[str, str]:
        return {k: v for k, v in self.annotations.items() if k.startswith(MANAGED_PREFIX)}

    def foreign_annotations(self) -> dict[str, str]:
        return {k: v for k, v in self.annotations.items() if not k.startswith(MANAGED_PREFIX)}


@dataclass(frozen=True)
class WatchEvent:
    source: Source
    kind: EventType
    spec: ServiceSpec


def merge(cloud: ServiceSpec, edge: ServiceSpec) -> ServiceSpec:
    """Copy of ``edge`` with the managed fields taken from ``cloud``.

    Status and foreign annotations come from ``edge`` untouched; the
    replicator's own annotations are rewritten to record the cloud
    generation the copy was derived from.
    """
    if cloud.name != edge.name:
        raise ValueError(f"cannot merge {cloud.name!r} into {edge.name!r}")
    spec = {k: v for k, v in edge.managed_spec.items() if k not in MANAGED_FIELDS}
    for key in MANAGED_FIELDS:
        if key in cloud.managed_spec:
            spec[key] = copy.deepcopy(cloud.managed_spec[key])
    annotations = edge.foreign_annotations()
    annotations[SOURCE_GENERATION] = str(cloud.generation)
    return ServiceSpec(
        name=edge.name,
        generation=edge.generation,
        managed_spec=spec,
        status=copy.deepcopy(edge.status),
        annotations=annotations,
    )


def needs_apply(merged: ServiceSpec, current_edge: ServiceSpec) -> bool:
    """True when the managed spec or the replicator's annotations differ; status never counts."""
    return (merged.managed_spec != current_edge.managed_spec
            or merged.managed_annotations() != current_edge.managed_annotations())


Watcher = Callable[[WatchEvent], None]


class ServiceStore:
    """In-memory resource store with synchronous watch callbacks.

    Every write bumps the object's generation and notifies watchers after
    the write is visible.
    """

    def __init__(self, source: Source) -> None:
        self.source = source
        self._items: dict[str, ServiceSpec] = {}
        self._watchers: list[Watcher] = []
        self.writes = 0

    def __contains__(self, name: str) -> bool:
        return name in self._items

    def get(self, name: str) -> Optional[ServiceSpec]:
        return self._items.get(name)

    def names(self) -> list[str]:
        return list(self._items)

    def watch(self, callback: Watcher) -> None:
        self._watchers.append(callback)

    def _emit(self, kind: EventType, spec: ServiceSpec) -> None:
        event = WatchEvent(self.source, kind, spec)
        for callback in list(self._watchers):
            callback(event)

    def apply(self, spec: ServiceSpec) -> ServiceSpec:
        prev = self._items.get(spec.name)
        generation = (prev.generation if prev else 0) + 1
        stored = replace(spec, generation=generation)
        self._items[spec.name] = stored
        self.writes += 1
        self._emit(EventType.MODIFIED if prev else EventType.ADDED, stored)
        return stored

    def update_status(self, name: str, **status: Any) -> ServiceSpec:
        prev = self._items[name]
        return self.apply(replace(prev, status={**prev.status, **status}))

    def delete(self, name: str) -> None:
        spec = self._items.pop(name)
        self.writes += 1
        self._emit(EventType.DELETED, spec)


class Replicator:
    """Mirrors cloud services into the edge store.

    Events are processed one at a time in arrival order; events raised by the
    replicator's own writes are queued behind the current one rather than
    handled re-entrantly.
    """

    def __init__(self, cloud: ServiceStore, edge: ServiceStore) -> None:
        self.cloud = cloud
        self.edge = edge
        self.applied = 0
        self.events_seen = 0
        self._pending: deque[WatchEvent] = deque()
        self._busy = False
        self._last_generation: dict[tuple[Source, str], int] = {}
        cloud.watch(self._on_event)
        edge.watch(self._on_event)

    def _on_event(self, event: WatchEvent) -> None:
        self._pending.append(event)
        if not self._busy:
            self.drain()

    def drain(self) -> None:
        self._busy = True
        try:
            while self._pending:
                event = self._pending.popleft()
                self._check_order(event)
                self.events_seen += 1
                self.reconcile(event.spec.name)
        finally:
            self._busy = False

    def _check_order(self, event: WatchEvent) -> None:
        key = (event.source, event.spec.name)
        if event.kind is EventType.DELETED:
            self._last_generation.pop(key, None)
            return
        last = self._last_generation.get(key)
        if event.kind is EventType.MODIFIED and last is not None and event.spec.generation <= last:
            raise ValueError(
                f"{event.source.value}/{event.spec.name}: generation {event.spec.generation} "
                f"not newer than {last}"
            )
        self._last_generation[key] = event.spec.generation

    def reconcile(self, name: str) -> bool:
        """Bring the edge copy of ``name`` in line with the cloud. Returns True if it wrote."""
        cloud = self.cloud.get(name)
        edge = self.edge.get(name)
        if cloud is None:
            # edge-created services are not ours to delete
            if edge is not None and SOURCE_GENERATION in edge.annotations:
                self.applied += 1
                self.edge.delete(name)
                return True
            return False
        merged = merge(cloud, edge or ServiceSpec(name))
        if edge is None or needs_apply(merged, edge):
            self.applied += 1
            self.edge.apply(merged)
            return True
        return False

    def sync_all(self) -> int:
        before = self.applied
        self._busy = True
        try:
            for name in self.cloud.names():
                self.reconcile(name)
        finally:
            self._busy = False
        self.drain()
        return self.applied - before


def reconcile_loop(cloud: ServiceStore, edge: ServiceStore) -> int:
    """Attach a replicator, run a full sync to quiescence, return the apply count."""
    return Replicator(cloud, edge).sync_all()


def load_manifest(path: str | Path) -> list[ServiceSpec]:
    """Read service definitions from a JSON list of records.

    Each record needs ``name``, ``profile`` and ``concurrency_limit``;
    ``image`` and ``env`` are optional.
    """
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(records, dict):
        records = records.get("services", [])
    specs = []
    for i, rec in enumerate(records):
        missing = [k for k in ("name", "profile", "concurrency_limit") if k not in rec]
        if missing:
            raise ValueError(f"manifest record {i}: missing {', '.join(missing)}")
        managed = {
            "image": rec.get("image", f"registry.local/{rec['profile']}:latest"),
            "profile": rec["profile"],
            "concurrency_limit": int(rec["concurrency_limit"]),
            "env": dict(rec.get("env", {})),
        }
        specs.append(ServiceSpec(name=rec["name"], managed_spec=managed))
    return specs
