"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Every key has a typed default,
so an empty file is a valid config. Unknown keys and unparsable values are
reported together, one line per offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .cluster import AutoscalerConfig, NodeSpec
from .controller import OffloadConfig
from .network import LinkSpec
from .workload import BASE_WORKLOADS, WORKLOADS, RampSchedule, WorkloadProfile, default_profiles

SPLITS = ("0", "25", "50", "75", "100", "auto")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]) -> None:
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _optional_float(text: str) -> float | None:
    text = text.strip()
    return None if text.lower() in ("", "none") else float(text)


def _optional_int(text: str) -> int | None:
    text = text.strip()
    return None if text.lower() in ("", "none") else _int(text)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _list_of(*options: str) -> Callable[[str], tuple[str, ...]]:
    def parse(text: str) -> tuple[str, ...]:
        items = tuple(item.strip() for item in text.split(",") if item.strip())
        if not items:
            raise ValueError("expected a non-empty comma-separated list")
        bad = [item for item in items if item not in options]
        if bad:
            raise ValueError(f"unknown entries {bad}; allowed: {', '.join(options)}")
        return items
    return parse


def _nodes(text: str) -> tuple[tuple[float, int, int], ...]:
    """``speed:max_instances:cores`` entries, comma separated."""
    nodes = []
    for entry in text.split(","):
        entry = entry.strip()
        if not entry:
            continue
        parts = entry.split(":")
        if len(parts) != 3:
            raise ValueError(f"node entry {entry!r} is not speed:max_instances:cores")
        nodes.append((float(parts[0]), _int(parts[1]), _int(parts[2])))
    if not nodes:
        raise ValueError("need at least one node")
    return tuple(nodes)


_SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "offload.c_decay": (float, 0.9),
    "offload.c_t": (_int, 15),
    "offload.c_soft": (float, 2.0),
    "offload.c_hard": (float, 5.0),
    "offload.c_in": (float, 0.9),
    "offload.control_interval_s": (float, 2.0),
    "offload.sample_scope": (_choice("all", "edge_only"), "all"),
    "metrics.window_s": (float, 30.0),
    "metrics.min_samples": (_int, 10),
    "metrics.interval_s": (float, 1.0),
    "gateway.mode": (_choice("fixed", "auto"), "auto"),
    "gateway.fixed_pct": (float, 0.0),
    "gateway.rng_seed": (_optional_int, None),
    "cluster.edge.nodes": (_nodes, ((1.0, 3, 4),) * 4 + ((2.0, 3, 4),)),
    "cluster.cloud.nodes": (_nodes, ((4.0, 1000, 4096),)),
    "cluster.concurrency_limit": (_int, 4),
    "cluster.queue_cap": (_int, 10),
    "cluster.service_sigma": (float, 0.7),
    "autoscaler.interval_s": (float, 2.0),
    "autoscaler.target_concurrency": (float, 3.0),
    "autoscaler.scale_window_s": (float, 10.0),
    "autoscaler.idle_timeout_s": (float, 20.0),
    "autoscaler.min_instances": (_int, 0),
    "autoscaler.edge.cold_start_s": (float, 2.0),
    "autoscaler.cloud.cold_start_s": (float, 1.0),
    "autoscaler.edge.max_instances": (_int, 5),
    "autoscaler.cloud.max_instances": (_int, 1000),
    "network.rtt_s": (float, 0.05),
    "network.bandwidth_bytes_per_s": (float, 100e6),
    "network.shared_pipe": (_bool, True),
    "workload.name": (_choice(*WORKLOADS), "mixed"),
    "workload.low_rate": (float, 2.0),
    "workload.high_rate": (float, 20.0),
    "workload.warm_s": (float, 60.0),
    "workload.ramp_s": (float, 60.0),
    "workload.hold_s": (float, 120.0),
    "runner.seed": (_int, 42),
    "runner.drain_s": (float, 30.0),
    "runner.deadline_s": (_optional_float, None),
    "sweep.workloads": (_list_of(*WORKLOADS), WORKLOADS),
    "sweep.splits": (_list_of(*SPLITS), SPLITS),
    "sweep.repetitions": (_int, 1),
}

_PROFILE_FIELDS = {
    "compute_s": float,
    "io_s": float,
    "request_bytes": _int,
    "response_bytes": _int,
    "memory_mb": float,
}
for _name, _profile in default_profiles().items():
    if _name in BASE_WORKLOADS:
        for _field, _parse in _PROFILE_FIELDS.items():
            _SCHEMA[f"profile.{_name}.{_field}"] = (_parse, _parse(str(getattr(_profile, _field))))


def _render(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(":".join(_render(x) for x in v) if isinstance(v, tuple) else _render(v)
                         for v in value)
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class SimConfig:
    values: Mapping[str, Any] = field(default_factory=lambda: {k: d for k, (_, d) in _SCHEMA.items()})

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def with_values(self, **updates: Any) -> "SimConfig":
        """Override typed values; keys use ``__`` in place of ``.``."""
        merged = dict(self.values)
        for key, value in updates.items():
            key = key.replace("__", ".")
            if key not in _SCHEMA:
                raise ConfigError([f"{key}: unknown key"])
            merged[key] = value
        cfg = SimConfig(merged)
        cfg.validate()
        return cfg

    def with_text(self, overrides: Mapping[str, str]) -> "SimConfig":
        merged = dict(self.values)
        merged.update(_parse_pairs(overrides.items()))
        cfg = SimConfig(merged)
        cfg.validate()
        return cfg

    def with_split(self, split: str) -> "SimConfig":
        if split == "auto":
            return self.with_values(**{"gateway.mode": "auto"})
        return self.with_values(**{"gateway.mode": "fixed", "gateway.fixed_pct": float(split)})

    def snapshot(self) -> dict[str, str]:
        return {key: _render(self.values[key]) for key in sorted(self.values)}

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.snapshot().items())

    # -- typed views ----------------------------------------------------

    def offload(self) -> OffloadConfig:
        v = self.values
        return OffloadConfig(
            c_decay=v["offload.c_decay"], c_t=v["offload.c_t"], c_soft=v["offload.c_soft"],
            c_hard=v["offload.c_hard"], c_in=v["offload.c_in"],
            control_interval=v["offload.control_interval_s"],
        )

    def profiles(self) -> dict[str, WorkloadProfile]:
        base = {}
        for name in BASE_WORKLOADS:
            base[name] = WorkloadProfile(
                name, **{f: self.values[f"profile.{name}.{f}"] for f in _PROFILE_FIELDS})
        base["mixed"] = WorkloadProfile("mixed", components=tuple(base[n] for n in BASE_WORKLOADS))
        return base

    def schedule(self) -> RampSchedule:
        v = self.values
        return RampSchedule(v["workload.low_rate"], v["workload.high_rate"], v["workload.warm_s"],
                            v["workload.ramp_s"], v["workload.hold_s"])

    def nodes(self, pool: str) -> list[NodeSpec]:
        return [NodeSpec(f"{pool}-{i}", speed, max_inst, cores)
                for i, (speed, max_inst, cores) in enumerate(self.values[f"cluster.{pool}.nodes"])]

    def autoscaler(self, pool: str) -> AutoscalerConfig:
        v = self.values
        return AutoscalerConfig(
            target_concurrency=v["autoscaler.target_concurrency"],
            scale_window=v["autoscaler.scale_window_s"],
            idle_timeout=v["autoscaler.idle_timeout_s"],
            cold_start_delay=v[f"autoscaler.{pool}.cold_start_s"],
            min_instances=v["autoscaler.min_instances"],
            max_instances_per_function=v[f"autoscaler.{pool}.max_instances"],
        )

    def link(self) -> LinkSpec:
        v = self.values
        return LinkSpec(v["network.rtt_s"], v["network.bandwidth_bytes_per_s"], v["network.shared_pipe"])

    def validate(self) -> None:
        problems = []
        v = self.values
        checks: list[tuple[str, Callable[[], Any]]] = [
            ("offload", self.offload),
            ("workload", self.schedule),
            ("profile", self.profiles),
            ("network", self.link),
            ("cluster.edge.nodes", lambda: self.nodes("edge")),
            ("cluster.cloud.nodes", lambda: self.nodes("cloud")),
            ("autoscaler.edge", lambda: self.autoscaler("edge")),
            ("autoscaler.cloud", lambda: self.autoscaler("cloud")),
        ]
        for prefix, build in checks:
            try:
                build()
            except (ValueError, TypeError) as exc:
                problems.append(f"{prefix}: {exc}")
        positive = ("metrics.window_s", "metrics.interval_s", "autoscaler.interval_s")
        for key in positive:
            if not v[key] > 0:
                problems.append(f"{key}: must be positive")
        non_negative = ("runner.drain_s",)
        for key in non_negative:
            if v[key] < 0:
                problems.append(f"{key}: must be non-negative")
        if v["metrics.min_samples"] < 1:
            problems.append("metrics.min_samples: must be >= 1")
        if not 0 <= v["gateway.fixed_pct"] <= 100:
            problems.append("gateway.fixed_pct: must be in [0, 100]")
        if v["cluster.concurrency_limit"] < 1:
            problems.append("cluster.concurrency_limit: must be >= 1")
        if v["cluster.service_sigma"] < 0:
            problems.append("cluster.service_sigma: must be >= 0")
        if v["cluster.queue_cap"] < 0:
            problems.append("cluster.queue_cap: must be >= 0")
        if v["runner.deadline_s"] is not None and v["runner.deadline_s"] <= 0:
            problems.append("runner.deadline_s: must be positive or none")
        if v["sweep.repetitions"] < 1:
            problems.append("sweep.repetitions: must be >= 1")
        if problems:
            raise ConfigError(problems)


def _parse_pairs(pairs: Iterable[tuple[str, str]]) -> dict[str, Any]:
    parsed: dict[str, Any] = {}
    problems = []
    for key, text in pairs:
        key = key.strip()
        if key not in _SCHEMA:
            problems.append(f"{key}: unknown key")
            continue
        parser, _ = _SCHEMA[key]
        try:
            parsed[key] = parser(text)
        except ValueError as exc:
            problems.append(f"{key}: {exc}")
    if problems:
        raise ConfigError(problems)
    return parsed


def parse_config_text(text: str) -> SimConfig:
    pairs = []
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    if problems:
        raise ConfigError(problems)
    return SimConfig().with_text(dict(pairs))


def load_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> SimConfig:
    cfg = SimConfig() if path is None else parse_config_text(Path(path).read_text(encoding="utf-8"))
    if overrides:
        cfg = cfg.with_text(overrides)
    return cfg


def known_keys() -> list[str]:
    return sorted(_SCHEMA)
