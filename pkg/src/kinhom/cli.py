"""Command-line experiment runner.

    kinhom run <kind> [--config FILE] [--<param> VALUE ...] [--out DIR] [--jobs N]

Parameters come from the kind's defaults, then the config file, then flags.
Exit status: 0 on success (some tasks may have failed numerically and are
listed in ``tasks.json``), 1 on an invalid config (nothing is written),
2 when every task failed numerically.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .config import KINDS, ConfigError, load_file, resolve
from .experiments import JSON_KINDS, run_tasks, summarize
from .output import write_csv, write_json, write_manifest

JOBS_ENV = "KINHOM_JOBS"


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


class _Parser(argparse.ArgumentParser):
    # bad flags are config errors: exit 1, never 2 (reserved for numeric failure)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kinhom", description="Kinetic homogenization experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment kind")
    kinds = run.add_subparsers(dest="kind", required=True)
    for kind, schema in KINDS.items():
        kp = kinds.add_parser(kind, help=f"{kind} experiment")
        kp.add_argument("--config", help="YAML or JSON config file")
        kp.add_argument("--out", default=None, help="output directory (default: results/<kind>)")
        kp.add_argument("--jobs", type=int, default=None,
                        help=f"worker processes (default: ${JOBS_ENV} or 1)")
        kp.add_argument("--potential", help="potential name or JSON mapping")
        kp.add_argument("--seeds", help="comma-separated seeds")
        for name in schema:
            kp.add_argument(_flag(name), dest=f"p_{name}")
    return ap


def _potential_arg(text: str):
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config.potential", f"invalid JSON: {exc.msg}") from None
    return text


def _raw_config(args) -> dict:
    raw = load_file(args.config) if args.config else {}
    if args.potential is not None:
        raw["potential"] = _potential_arg(args.potential)
    if args.seeds is not None:
        raw["seeds"] = args.seeds
    for key, val in vars(args).items():
        if key.startswith("p_") and val is not None:
            raw[key[2:]] = val
    return raw


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get(JOBS_ENV, "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def run(args) -> int:
    try:
        cfg = resolve(_raw_config(args), args.kind)
    except ConfigError as exc:
        print(f"kinhom: invalid config: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"kinhom: config.file: {exc}", file=sys.stderr)
        return 1
    jobs = _jobs(args)
    out = args.out or os.path.join("results", cfg.kind)
    started = time.time()
    results = run_tasks(cfg, jobs)
    finished = time.time()
    os.makedirs(out, exist_ok=True)
    rows = [r for res in results for r in res.rows]
    extra = summarize(cfg, rows)
    files = []
    stem = cfg.kind.replace("-", "_")
    if cfg.kind in JSON_KINDS:
        path = os.path.join(out, f"{stem}.json")
        write_json(path, {"config": cfg.values, "results": rows})
    else:
        path = os.path.join(out, f"{stem}.csv")
        write_csv(path, rows, cfg.canonical())
    files.append(path)
    if extra:
        path = os.path.join(out, f"{stem}_summary.json")
        write_json(path, {"config": cfg.values, "summary": extra})
        files.append(path)
    path = os.path.join(out, "tasks.json")
    write_json(path, {"config": cfg.values,
                      "tasks": [{"task": r.label, "status": "ok" if r.error is None else "error",
                                 "error": r.error} for r in results]})
    files.append(path)
    failed = sum(r.error is not None for r in results)
    write_manifest(out, cfg.digest(), started, finished, files, len(results), failed, jobs)
    for r in results:
        if r.error:
            print(f"kinhom: task {r.label} failed: {r.error}", file=sys.stderr)
    print(f"{cfg.kind}: {len(results) - failed}/{len(results)} tasks ok -> {out}")
    if results and failed == len(results):
        return 2
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
