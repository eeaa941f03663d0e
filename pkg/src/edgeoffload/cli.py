"""Command line entry point.

    edgeoffload run   --config sim.conf [--seed N] [--split 0|25|50|75|100|auto]
                      [--workload NAME] --out DIR
    edgeoffload sweep --config sim.conf --out DIR [--jobs N]

``--set key=value`` (repeatable) overrides any config key. Exit status is 0
when every cell ran, 1 when any cell failed, 2 on bad configuration or an
unwritable output directory.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .config import SPLITS, ConfigError, known_keys, load_config
from .experiment import ExperimentMatrix, export, preflight, single_run_sweep, summary_rows, sweep
from .workload import WORKLOADS

logger = logging.getLogger("edgeoffload")


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError([f"--set {pair!r}: expected key=value"])
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgeoffload",
        description="Simulate latency-driven edge-to-cloud offloading of serverless requests.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file (defaults if omitted)")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key")

    run_p = sub.add_parser("run", parents=[common], help="simulate one cell")
    run_p.add_argument("--seed", type=int, help="run seed (defaults to runner.seed)")
    run_p.add_argument("--split", choices=SPLITS, help="cloud share in percent, or auto")
    run_p.add_argument("--workload", choices=WORKLOADS)

    sweep_p = sub.add_parser("sweep", parents=[common], help="simulate the workload x split matrix")
    sweep_p.add_argument("--seed", type=int, help="base seed (defaults to runner.seed)")
    sweep_p.add_argument("--jobs", type=int, default=1, help="worker processes")

    sub.add_parser("keys", help="list every config key")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "keys":
        print("\n".join(known_keys()))
        return 0

    try:
        overrides = _overrides(args.set)
        if args.command == "run" and args.workload:
            overrides["workload.name"] = args.workload
        cfg = load_config(args.config, overrides)
        if args.command == "run" and args.split:
            cfg = cfg.with_split(args.split)
        if args.seed is not None:
            cfg = cfg.with_text({"runner.seed": str(args.seed)})
        preflight(args.out)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    started = time.perf_counter()
    if args.command == "run":
        result = single_run_sweep(cfg, cfg["runner.seed"])
    else:
        result = sweep(cfg, ExperimentMatrix.from_config(cfg), jobs=args.jobs)
    export(result, args.out)
    logger.info("finished %d cell(s) in %.1fs", len(result.cells), time.perf_counter() - started)

    for row in summary_rows(result):
        print(f"{row['workload']:>8} {row['split']:>5}  successful={row['successful']:>6}  "
              f"failed={row['failed']:>5}  mean={row['mean_latency_s']}s  p95={row['p95_latency_s']}s")
    for cell in result.cells:
        if cell.error:
            print(f"cell {cell.name} failed: {cell.error}", file=sys.stderr)
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
