"""Result files: CSV tables, JSON records and the run manifest.

Result files depend only on the resolved config, so repeated runs are
byte-identical; wall time and timestamps live in the manifest alone.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from datetime import datetime, timezone

from . import __version__

MANIFEST = "manifest.json"


def _plain(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return v


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return _plain(v)
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def write_csv(path: str, rows: list[dict], config_line: str):
    columns: list[str] = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={config_line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_plain(r.get(k, "")) for k in columns])


def write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv(path: str) -> tuple[dict, list[dict]]:
    """Embedded config and rows of a CSV written by :func:`write_csv`."""
    with open(path) as fh:
        first = fh.readline()
        config = json.loads(first.split("=", 1)[1])
        rows = list(csv.DictReader(fh))
    return config, rows


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def write_manifest(out_dir: str, config_digest: str, started: float, finished: float,
                   files: list[str], n_tasks: int, n_failed: int, jobs: int):
    def stamp(t):
        return datetime.fromtimestamp(t, tz=timezone.utc).isoformat()

    write_json(os.path.join(out_dir, MANIFEST), {
        "config_sha256": config_digest,
        "version": __version__,
        "started": stamp(started),
        "finished": stamp(finished),
        "wall_time_s": finished - started,
        "jobs": jobs,
        "tasks": n_tasks,
        "failed": n_failed,
        "files": {os.path.basename(f): file_digest(f) for f in files},
    })
