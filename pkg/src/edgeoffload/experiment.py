"""Workload x traffic-split sweeps and their CSV/JSON export.

Output layout under the output directory::

    summary.csv      workload,split,successful,failed,mean_latency_s,p95_latency_s
    summary.json     the same rows plus the config snapshot and per-cell errors
    runs/<workload>_<split>_<rep>.csv   t_s,metric,value
    runs/<workload>_<split>_<rep>.json  the same series plus run counters

Every file is a pure function of the results, so re-exporting the same
results reproduces the same bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import SPLITS, SimConfig
from .simulation import RunResult, run, split_label
from .workload import WORKLOADS

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ("workload", "split", "successful", "failed", "mean_latency_s", "p95_latency_s")
SERIES_HEADER = ("t_s", "metric", "value")


def _valid_split(split: str) -> bool:
    if split == "auto":
        return True
    try:
        return 0 <= float(split) <= 100
    except ValueError:
        return False


@dataclass(frozen=True)
class ExperimentMatrix:
    workloads: tuple[str, ...] = WORKLOADS
    splits: tuple[str, ...] = SPLITS
    repetitions: int = 1
    base_seed: int = 42

    def __post_init__(self) -> None:
        if not self.workloads or not self.splits:
            raise ValueError("experiment matrix needs at least one workload and one split")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        unknown = [w for w in self.workloads if w not in WORKLOADS]
        unknown += [s for s in self.splits if not _valid_split(s)]
        if unknown:
            raise ValueError(f"unknown matrix entries: {unknown}")

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "ExperimentMatrix":
        return cls(cfg["sweep.workloads"], cfg["sweep.splits"], cfg["sweep.repetitions"], cfg["runner.seed"])

    def seed_for(self, rep: int) -> int:
        return self.base_seed + rep

    def cells(self) -> list[tuple[str, str, int]]:
        return [(w, s, r) for w in self.workloads for s in self.splits for r in range(self.repetitions)]


@dataclass
class CellOutcome:
    workload: str
    split: str
    rep: int
    result: Optional[RunResult] = None
    error: Optional[str] = None

    @property
    def name(self) -> str:
        return f"{self.workload}_{self.split}_{self.rep}"


@dataclass
class SweepResult:
    matrix: ExperimentMatrix
    config: dict[str, str]
    cells: list[CellOutcome] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(cell.error is None for cell in self.cells)

    def result(self, workload: str, split: str, rep: int = 0) -> RunResult:
        for cell in self.cells:
            if (cell.workload, cell.split, cell.rep) == (workload, split, rep):
                if cell.result is None:
                    raise LookupError(f"cell {cell.name} failed: {cell.error}")
                return cell.result
        raise KeyError((workload, split, rep))


def _run_cell(cfg: SimConfig, workload: str, split: str, rep: int, seed: int) -> CellOutcome:
    try:
        cell_cfg = cfg.with_values(**{"workload.name": workload}).with_split(split)
        return CellOutcome(workload, split, rep, run(cell_cfg, seed))
    except Exception as exc:  # a broken cell must not sink the sweep
        logger.error("cell %s/%s/%d failed: %s", workload, split, rep, exc)
        return CellOutcome(workload, split, rep, error="".join(traceback.format_exception_only(type(exc), exc)).strip())


def sweep(cfg: SimConfig, matrix: ExperimentMatrix | None = None, jobs: int = 1) -> SweepResult:
    """Run every (workload, split, repetition) cell.

    With ``jobs > 1`` cells run in worker processes; results are collected
    in matrix order either way.
    """
    matrix = matrix or ExperimentMatrix.from_config(cfg)
    cells = matrix.cells()
    args = [(cfg, w, s, r, matrix.seed_for(r)) for w, s, r in cells]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, *zip(*args)))
    else:
        outcomes = [_run_cell(*a) for a in args]
    return SweepResult(matrix, cfg.snapshot(), outcomes)


# -- export ----------------------------------------------------------------

def _fmt(value: float) -> str:
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.6f}"


def summary_rows(result: SweepResult) -> list[dict[str, str]]:
    """One row per (workload, split); repetitions are averaged."""
    grouped: dict[tuple[str, str], list[CellOutcome]] = {}
    for cell in result.cells:
        grouped.setdefault((cell.workload, cell.split), []).append(cell)
    rows = []
    for (workload, split), cells in grouped.items():
        runs = [c.result for c in cells if c.result is not None]
        if len(runs) != len(cells):
            rows.append(dict(workload=workload, split=split, successful="", failed="",
                             mean_latency_s="", p95_latency_s=""))
            continue
        n = len(runs)
        succ = sum(r.successful for r in runs)
        fail = sum(r.failed for r in runs)
        rows.append(dict(
            workload=workload,
            split=split,
            successful=str(succ) if n == 1 else _fmt(succ / n),
            failed=str(fail) if n == 1 else _fmt(fail / n),
            mean_latency_s=_fmt(sum(r.mean_latency for r in runs) / n),
            p95_latency_s=_fmt(sum(r.p95_latency for r in runs) / n),
        ))
    return rows


def summary_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows(summary_rows(result))
    return buf.getvalue()


def series_csv(run_result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    for t, metric, value in run_result.series:
        writer.writerow((_fmt(t), metric, _fmt(value)))
    return buf.getvalue()


def run_summary(run_result: RunResult) -> dict:
    return {
        "workload": run_result.workload,
        "split": run_result.split,
        "seed": run_result.seed,
        "generated": run_result.generated,
        "successful": run_result.successful,
        "failed": run_result.failed,
        "unfinished": run_result.unfinished,
        "routed_edge": run_result.routed_edge,
        "routed_cloud": run_result.routed_cloud,
        "mean_latency_s": _fmt(run_result.mean_latency),
        "p95_latency_s": _fmt(run_result.p95_latency),
        "final_instances": run_result.final_instances,
    }


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def preflight(out_dir: str | Path) -> Path:
    """Fail before any simulation runs if ``out_dir`` cannot be written."""
    out = Path(out_dir)
    try:
        (out / "runs").mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    if not os.access(out / "runs", os.W_OK):
        raise OSError(f"output directory {out / 'runs'} is not writable")
    return out


def export(result: SweepResult, out_dir: str | Path) -> list[Path]:
    out = preflight(out_dir)
    written = []
    summary = out / "summary.csv"
    summary.write_text(summary_csv(result), encoding="utf-8")
    written.append(summary)
    payload = {
        "config": result.config,
        "matrix": {
            "workloads": list(result.matrix.workloads),
            "splits": list(result.matrix.splits),
            "repetitions": result.matrix.repetitions,
            "base_seed": result.matrix.base_seed,
        },
        "summary": summary_rows(result),
        "errors": {cell.name: cell.error for cell in result.cells if cell.error},
    }
    summary_json = out / "summary.json"
    summary_json.write_text(_dump_json(payload), encoding="utf-8")
    written.append(summary_json)
    for cell in result.cells:
        if cell.result is None:
            continue
        written.extend(export_run(cell.result, out / "runs", cell.name))
    return written


def export_run(run_result: RunResult, runs_dir: str | Path, name: str) -> list[Path]:
    runs_dir = Path(runs_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)
    csv_path = runs_dir / f"{name}.csv"
    csv_path.write_text(series_csv(run_result), encoding="utf-8")
    json_path = runs_dir / f"{name}.json"
    json_path.write_text(_dump_json({
        "run": run_summary(run_result),
        "config": run_result.config,
        "series": [[_fmt(t), m, _fmt(v)] for t, m, v in run_result.series],
    }), encoding="utf-8")
    return [csv_path, json_path]


def single_run_sweep(cfg: SimConfig, seed: int) -> SweepResult:
    """Wrap one configured run as a one-cell sweep so it exports the same way."""
    split = split_label(cfg)
    matrix = ExperimentMatrix((cfg["workload.name"],), (split,), 1, seed)
    outcome = CellOutcome(cfg["workload.name"], split, 0)
    try:
        outcome.result = run(cfg, seed)
    except Exception as exc:
        outcome.error = str(exc)
    return SweepResult(matrix, cfg.snapshot(), [outcome])

