"""Task builders and runners behind the command-line kinds.

Every kind expands a resolved config into independent tasks (one per seed,
state, energy, step size or eps value). A task is a plain tuple so it can
cross process boundaries; it returns a list of row dicts or raises a
numerical error that the runner records against that task.
"""
from __future__ import annotations

import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import closedform as cf
from .config import ExperimentConfig, build_potential
from .dynamics import classify_energy, energy_array, integrate, period_1d, stream
from .errors import KinhomError
from .observables import parse


@dataclass
class TaskResult:
    index: int
    label: str
    rows: list = field(default_factory=list)
    error: str | None = None


def _is_random(cfg: dict) -> bool:
    return cfg["potential"]["name"] == "random-phase"


def _seeds(cfg: dict) -> list[int]:
    # deterministic potentials ignore the seed list beyond its first entry
    return list(cfg["seeds"]) if _is_random(cfg) else [cfg["seeds"][0]]


@functools.lru_cache(maxsize=32)
def _potential(desc_json: str, seed: int):
    return build_potential(json.loads(desc_json), seed)


def _pot(cfg: dict, seed: int):
    return _potential(json.dumps(cfg["potential"], sort_keys=True), seed)


def _split(state, dim):
    return list(state[:dim]), list(state[dim:])


def _f(x) -> float:
    return float(x)


# -------------------------------------------------------------- per kind

def plan(cfg: ExperimentConfig) -> list[tuple]:
    c = cfg.values
    k = c["kind"]
    seeds = _seeds(c)
    if k in ("flow", "resonance"):
        return [(k, s) for s in seeds]
    if k in ("xsharp", "project"):
        return [(k, s, i) for s in seeds for i in range(len(c["states"]))]
    if k in ("phi", "project-closed"):
        return [(k, s, float(E)) for s in seeds for E in np.linspace(c["emin"], c["emax"], c["n"])]
    if k == "hbar":
        return [(k, s, float(P)) for s in seeds for P in np.linspace(c["pmin"], c["pmax"], c["n"])]
    if k == "corrector":
        return [(k, s, float(L)) for s in seeds for L in c["windows"]]
    if k == "homogenize":
        return [(k, s, float(e)) for s in c["seeds"] for e in c["eps"]]
    if k == "converge":
        return [(k, s, float(h)) for s in seeds for h in c["h"]]
    raise AssertionError(k)


def execute(c: dict, task: tuple) -> list[dict]:
    kind, seed = task[0], task[1]
    p = _pot(c, seed) if kind != "homogenize" else _pot(c, 0)
    return RUNNERS[kind](c, p, seed, *task[2:])


def _run_flow(c, p, seed):
    tr = integrate(p, (c["y"], c["xi"]), c["T"], c["h"], c["stride"])
    E = tr.energies(p)
    rows = []
    for j, t in enumerate(tr.times):
        row = {"seed": seed, "t": _f(t)}
        for i in range(p.dim):
            row[f"y{i + 1}"] = _f(tr.y[j, i])
        for i in range(p.dim):
            row[f"xi{i + 1}"] = _f(tr.xi[j, i])
        row["H"] = _f(E[j])
        rows.append(row)
    return rows


def _run_xsharp(c, p, seed, idx):
    from .ergodic import xsharp_empirical

    y, xi = _split(c["states"][idx], p.dim)
    value, est = xsharp_empirical(p, (y, xi), c["T"], c["h"])
    axes = p.axes() if p.dim > 1 else (p,)
    rows = []
    for i, ax in enumerate(axes):
        try:
            closed = cf.xsharp_closed(ax, y[i], xi[i])
        except KinhomError:
            closed = math.nan
        rows.append({"seed": seed, "state": idx, "axis": i + 1, "empirical": _f(value[i]),
                     "closed": _f(closed), "tail_variation": _f(est.tail_variation),
                     "T": _f(est.T_used), "h": _f(est.step)})
    return rows


def _run_project(c, p, seed, idx):
    from .ergodic import project_empirical

    y, xi = _split(c["states"][idx], p.dim)
    F = parse(c["observable"])
    est = project_empirical(p, (y, xi), F, c["T"], c["h"])
    closed = math.nan
    if p.dim == 1:
        try:
            closed = cf.project_state(p, F, y[0], xi[0])
        except KinhomError:
            pass
    return [{"seed": seed, "state": idx, "empirical": _f(est.value), "closed": _f(closed),
             "tail_variation": _f(est.tail_variation), "T": _f(est.T_used), "h": _f(est.step)}]


def _run_phi(c, p, seed, E):
    tag = classify_energy(p, E).tag.value
    ph = cf.phi(p, E)
    t0 = period_1d(p, E) if tag == "Running" else math.nan
    return [{"seed": seed, "E": _f(E), "regime": tag, "phi": _f(ph), "period": _f(t0)}]


def _run_hbar(c, p, seed, P):
    hh = cf.homogenized(p)
    try:
        d = hh.derivative(P)
    except KinhomError:
        d = math.nan
    return [{"seed": seed, "p": _f(P), "hbar": _f(hh.value(P)), "hbar_prime": _f(d),
             "flat": int(abs(P) <= hh.theta0)}]


def _run_project_closed(c, p, seed, E):
    F = parse(c["observable"])
    tag = classify_energy(p, E).tag.value
    if tag == "NearCritical":
        raise KinhomError(f"E={E} lies in the critical band")
    if tag == "Running":
        plus = cf.project_running(p, F, 1.0, E)
        minus = cf.project_running(p, F, -1.0, E)
        trapped = math.nan
    else:
        trapped = cf.project_trapped(p, F, E, (p.argmax + 0.5) % 1.0)
        plus = minus = math.nan
    return [{"seed": seed, "E": _f(E), "regime": tag, "running_plus": _f(plus),
             "running_minus": _f(minus), "trapped": _f(trapped)}]


def _run_corrector(c, p, seed, L):
    n = int(2 * c["per_unit"] * L) + 1
    prof = cf.corrector_profile(p, c["P"], np.linspace(-L, L, n))
    return [{"seed": seed, "window": _f(L), "P": _f(c["P"]), "hbar": _f(prof.hbar),
             "sublinearity_ratio": _f(prof.sublinearity_ratio)}]


@functools.lru_cache(maxsize=8)
def _profile(desc_json: str, obs: str):
    from .homogenize import TwoScaleProfile

    return TwoScaleProfile(_potential(desc_json, 0), parse(obs))


def _run_homogenize(c, p, seed, eps):
    from .homogenize import Box, bump_data, residual_norm, weak_time_average_g

    prof = _profile(json.dumps(c["potential"], sort_keys=True), c["observable"])
    f0 = bump_data(parse(c["observable"]), c["bump_center"], c["bump_radius"])
    box = Box(*c["region"])
    r = residual_norm(p, f0, eps, c["t"], box, c["n_samples"], seed, prof, c["h"])
    w = weak_time_average_g(p, f0, eps, c["t"], box, c["n_samples"], seed, prof, c["h"])
    return [{"seed": seed, "eps": _f(eps), "residual": _f(r.value), "residual_stderr": _f(r.stderr),
             "weak_avg_g": _f(w.value), "weak_stderr": _f(w.stderr), "n_used": r.n_used,
             "n_excluded": r.n_excluded}]


def _run_resonance(c, p, seed):
    from .resonance import resonance_report

    dim = p.dim
    state = _split(c["state"], dim)
    Fs = [parse(s) for s in c["observables"]]
    rep = resonance_report(p, Fs, state, c["T"], c["h"], c["K"], c["tol"])
    rec = rep.to_record()
    rec = {k: ([_f(x) for x in v] if k in ("thetas", "energies") else v) for k, v in rec.items()}
    rec["seed"] = seed
    return [rec]


def _run_converge(c, p, seed, h):
    y, xi = _split(c["state"], p.dim)
    E0 = None
    drift = 0.0
    for ys, xis, _ in stream(p, (y, xi), c["T"], h):
        E = energy_array(p, ys, xis)
        if E0 is None:
            E0 = float(E[0])
        drift = max(drift, float(np.max(np.abs(E - E0))))
    return [{"seed": seed, "h": _f(h), "max_energy_drift": drift, "T": _f(c["T"])}]


RUNNERS = {
    "flow": _run_flow, "xsharp": _run_xsharp, "project": _run_project, "phi": _run_phi,
    "hbar": _run_hbar, "project-closed": _run_project_closed, "corrector": _run_corrector,
    "homogenize": _run_homogenize, "resonance": _run_resonance, "converge": _run_converge,
}

JSON_KINDS = ("resonance",)


def _label(task: tuple) -> str:
    return ":".join(str(x) for x in task)


def _worker(args):
    c, index, task = args
    try:
        return TaskResult(index, _label(task), execute(c, task))
    except (KinhomError, ValueError, ArithmeticError) as exc:
        return TaskResult(index, _label(task), [], f"{type(exc).__name__}: {exc}")


def run_tasks(cfg: ExperimentConfig, jobs: int = 1) -> list[TaskResult]:
    """Run every task; results come back in plan order whatever the completion order."""
    tasks = [(cfg.values, i, t) for i, t in enumerate(plan(cfg))]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_worker, tasks))
    else:
        results = [_worker(t) for t in tasks]
    return sorted(results, key=lambda r: r.index)


def summarize(cfg: ExperimentConfig, rows: list[dict]) -> dict | None:
    """Derived columns that need every row (ratios along a ladder, ensemble means)."""
    k = cfg.kind
    if k == "converge":
        rows.sort(key=lambda r: (r["seed"], -r["h"]))
        for a, b in zip(rows, rows[1:]):
            if a["seed"] == b["seed"]:
                b["reduction"] = a["max_energy_drift"] / b["max_energy_drift"] if b["max_energy_drift"] else math.inf
        for r in rows:
            r.setdefault("reduction", math.nan)
        return None
    if k == "xsharp" and _is_random(cfg.values) and len(cfg["seeds"]) > 1:
        out = {}
        for idx in range(len(cfg["states"])):
            vals = np.array([r["empirical"] for r in rows if r["state"] == idx])
            if vals.size < 2:
                continue
            out[str(idx)] = {"mean": _f(np.mean(vals)),
                             "stderr": _f(np.std(vals, ddof=1) / math.sqrt(vals.size)),
                             "n": int(vals.size)}
        return out or None
    return None
