"""Experiment configuration: schema, validation and potential descriptions.

A config is a flat mapping with ``kind``, ``potential``, ``seeds`` and the
numeric parameters of that kind. Values may come from a YAML/JSON file and
from command-line overrides; everything is validated before any work starts.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

import yaml

from . import potential as pot
from .observables import ParseError, parse


class ConfigError(ValueError):
    """Validation failure; the message starts with the offending field path."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


# ------------------------------------------------------------------- schema

# type tags: float, int, str, floats, ints, strs, state, states, potential, box
COMMON = {
    "kind": ("str", None),
    "potential": ("potential", "cos-well"),
    "seeds": ("ints", [0]),
}

KINDS: dict[str, dict[str, tuple[str, Any]]] = {
    "flow": {"y": ("floats", [0.0]), "xi": ("floats", [2.0]), "T": ("float", 10.0),
             "h": ("float", 1e-3), "stride": ("int", 10)},
    "xsharp": {"states": ("states", [[0.0, 2.0]]), "T": ("float", 1e4), "h": ("float", 1e-3)},
    "project": {"observable": ("str", "sin(2*pi*y)"), "states": ("states", [[0.0, 2.0]]),
                "T": ("float", 1e4), "h": ("float", 1e-3)},
    "phi": {"emin": ("float", 1.1), "emax": ("float", 10.0), "n": ("int", 20)},
    "hbar": {"pmin": ("float", 0.0), "pmax": ("float", 5.0), "n": ("int", 21)},
    "project-closed": {"observable": ("str", "sin(2*pi*y)"), "emin": ("float", 0.1),
                       "emax": ("float", 5.0), "n": ("int", 20)},
    "corrector": {"P": ("float", 2.0), "windows": ("floats", [1e2, 1e3, 1e4]),
                  "per_unit": ("int", 64)},
    "homogenize": {"eps": ("floats", [0.1, 0.05, 0.025]), "t": ("float", 0.5),
                   "observable": ("str", "sin(2*pi*y)"), "bump_center": ("float", 0.0),
                   "bump_radius": ("float", 1.0), "region": ("box", [-1.5, 1.5, -3.0, 3.0]),
                   "n_samples": ("int", 1024), "h": ("float", 2e-3)},
    "resonance": {"observables": ("strs", ["xi", "xi"]), "state": ("state", [0.0, 0.0, 0.3, 0.3]),
                  "T": ("float", 2e3), "h": ("float", 1e-3), "K": ("int", 50),
                  "tol": ("float", 1e-9)},
    "converge": {"state": ("state", [0.0, 2.0]), "T": ("float", 1e3),
                 "h": ("floats", [2e-3, 1e-3, 5e-4])},
}

# lower bounds checked after type coercion: (key, minimum, strict)
BOUNDS = {
    "T": (0.0, True), "h": (0.0, True), "stride": (1, False), "n": (1, False),
    "per_unit": (8, False), "n_samples": (2, False), "K": (1, False), "tol": (0.0, False),
    "t": (0.0, False), "bump_radius": (0.0, True),
}

POTENTIAL_NAMES = ("constant", "cos-well", "harmonic-well", "trig", "random-phase", "separable")


# ------------------------------------------------------------- coercion

def _num(path, v, integer=False):
    if isinstance(v, bool):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if isinstance(v, str):
        try:
            v = float(v) if not integer else int(v)
        except ValueError:
            raise ConfigError(path, f"expected {'an integer' if integer else 'a number'}, got {v!r}") from None
    if integer:
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        if not isinstance(v, int):
            raise ConfigError(path, f"expected an integer, got {v!r}")
        return v
    if not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    return float(v)


def _json_text(path, v):
    # flag values may be JSON lists
    if isinstance(v, str) and v.lstrip().startswith("["):
        try:
            return json.loads(v)
        except json.JSONDecodeError as exc:
            raise ConfigError(path, f"invalid JSON: {exc.msg}") from None
    return v


def _list(path, v):
    v = _json_text(path, v)
    if isinstance(v, str):
        v = [s for s in (p.strip() for p in v.split(",")) if s]
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v:
        raise ConfigError(path, f"expected a non-empty list, got {v!r}")
    return v


def _coerce(path: str, tag: str, v):
    if tag == "float":
        return _num(path, v)
    if tag == "int":
        return _num(path, v, integer=True)
    if tag == "str":
        if not isinstance(v, str):
            raise ConfigError(path, f"expected a string, got {v!r}")
        return v
    if tag == "floats":
        return [_num(f"{path}[{i}]", x) for i, x in enumerate(_list(path, v))]
    if tag == "ints":
        return [_num(f"{path}[{i}]", x, integer=True) for i, x in enumerate(_list(path, v))]
    if tag == "strs":
        v = _json_text(path, v)
        if isinstance(v, str):
            v = [s.strip() for s in v.split(";")]
        return [_coerce(f"{path}[{i}]", "str", x) for i, x in enumerate(_list(path, v))]
    if tag in ("state", "box"):
        out = [_num(f"{path}[{i}]", x) for i, x in enumerate(_list(path, v))]
        if len(out) % 2 or (tag == "box" and len(out) != 4):
            raise ConfigError(path, f"expected {'4' if tag == 'box' else 'an even number of'} values, got {len(out)}")
        if tag == "box" and (out[0] >= out[1] or out[2] >= out[3]):
            raise ConfigError(path, "box bounds must satisfy lo < hi")
        return out
    if tag == "states":
        v = _json_text(path, v)
        if isinstance(v, str):
            v = [s for s in v.split(";") if s.strip()]
        return [_coerce(f"{path}[{i}]", "state", x) for i, x in enumerate(_list(path, v))]
    if tag == "potential":
        return normalize_potential(path, v)
    raise AssertionError(tag)


def normalize_potential(path: str, desc) -> dict:
    """Canonical mapping form of a potential desc (a name or a mapping with ``name``)."""
    if isinstance(desc, str):
        desc = {"name": desc}
    if not isinstance(desc, dict):
        raise ConfigError(path, f"expected a potential name or mapping, got {desc!r}")
    desc = dict(desc)
    name = desc.pop("name", None)
    if name not in POTENTIAL_NAMES:
        raise ConfigError(f"{path}.name", f"unknown potential {name!r}; choose from {', '.join(POTENTIAL_NAMES)}")
    allowed = {
        "constant": {"value": ("float", 0.0)},
        "cos-well": {},
        "harmonic-well": {"radius": ("float", 0.25)},
        "trig": {"terms": (None, None), "period": ("float", 1.0)},
        "random-phase": {"amplitudes": ("floats", [0.3, 0.2]),
                         "wavenumbers": ("floats", [1.0, math.sqrt(2.0)])},
        "separable": {"axes": (None, None)},
    }[name]
    allowed = {**allowed, "shift": ("floats", None)}
    out: dict[str, Any] = {"name": name}
    for key in desc:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", f"unknown key for potential {name!r}")
    for key, (tag, default) in allowed.items():
        if key == "terms":
            terms = desc.get("terms")
            if not isinstance(terms, list) or not terms:
                raise ConfigError(f"{path}.terms", "expected a non-empty list of [a, k, phase]")
            rows = []
            for i, t in enumerate(terms):
                row = [_num(f"{path}.terms[{i}][{j}]", x) for j, x in enumerate(_list(f"{path}.terms[{i}]", t))]
                if len(row) != 3 or not float(row[1]).is_integer() or row[1] < 1:
                    raise ConfigError(f"{path}.terms[{i}]", "expected [amplitude, integer k >= 1, phase]")
                rows.append(row)
            out["terms"] = rows
        elif key == "axes":
            axes = desc.get("axes")
            if not isinstance(axes, list) or len(axes) < 2:
                raise ConfigError(f"{path}.axes", "expected a list of at least two axis potentials")
            out["axes"] = [normalize_potential(f"{path}.axes[{i}]", a) for i, a in enumerate(axes)]
            if any(a["name"] in ("separable", "random-phase") for a in out["axes"]):
                raise ConfigError(f"{path}.axes", "axes must be deterministic 1-D potentials")
        elif key in desc:
            out[key] = _coerce(f"{path}.{key}", tag, desc[key])
        elif default is not None:
            out[key] = default
    if name == "trig" and not out["period"] > 0:
        raise ConfigError(f"{path}.period", "period must be positive")
    if name == "random-phase":
        if len(out["amplitudes"]) != len(out["wavenumbers"]):
            raise ConfigError(f"{path}.wavenumbers", "needs one wavenumber per amplitude")
        try:
            pot.RandomPhaseModel(tuple(out["amplitudes"]), tuple(out["wavenumbers"]))
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
    return out


def build_potential(desc: dict, seed: int = 0) -> pot.Potential:
    name = desc["name"]
    if name == "constant":
        p = pot.constant(desc["value"])
    elif name == "cos-well":
        p = pot.cos_well()
    elif name == "harmonic-well":
        p = pot.harmonic_well(desc["radius"])
    elif name == "trig":
        # terms are cos(2 pi k y / period + phase); positions are measured in periods
        p = pot.trig_sum([tuple(t) for t in desc["terms"]])
        p.meta["period"] = desc["period"]
    elif name == "random-phase":
        p = pot.realize(random_phase_model(desc), seed)
    else:
        p = pot.separable([build_potential(a, seed) for a in desc["axes"]])
    if desc.get("shift") is not None:
        z = desc["shift"]
        p = pot.shift(p, z[0] if p.dim == 1 else z)
    return p


def random_phase_model(desc: dict) -> pot.RandomPhaseModel:
    return pot.RandomPhaseModel(tuple(desc["amplitudes"]), tuple(desc["wavenumbers"]))


def potential_dim(desc: dict) -> int:
    return len(desc["axes"]) if desc["name"] == "separable" else 1


# --------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    @property
    def kind(self) -> str:
        return self.values["kind"]

    def __getitem__(self, key):
        return self.values[key]

    def canonical(self) -> str:
        return json.dumps(self.values, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def load_file(path: str) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must hold a mapping")
    return data


def resolve(raw: dict, kind: str | None = None) -> ExperimentConfig:
    """Merge defaults, coerce types and check every key; raises :class:`ConfigError`."""
    raw = copy.deepcopy(raw)
    kind = kind or raw.get("kind")
    if raw.get("kind") not in (None, kind):
        raise ConfigError("config.kind", f"file says {raw['kind']!r} but {kind!r} was requested")
    if kind not in KINDS:
        raise ConfigError("config.kind", f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    raw["kind"] = kind
    schema = {**COMMON, **KINDS[kind]}
    for key in raw:
        if key not in schema:
            raise ConfigError(f"config.{key}", f"unknown key for kind {kind!r}")
    vals: dict[str, Any] = {}
    for key, (tag, default) in schema.items():
        v = raw.get(key, default)
        vals[key] = _coerce(f"config.{key}", tag, v) if key != "kind" else v
        if key in BOUNDS and not isinstance(vals[key], list):
            lo, strict = BOUNDS[key]
            if vals[key] < lo or (strict and vals[key] == lo):
                raise ConfigError(f"config.{key}", f"must be {'>' if strict else '>='} {lo}, got {vals[key]}")
    if kind in ("converge",) and any(h <= 0 for h in vals["h"]):
        raise ConfigError("config.h", "step sizes must be positive")
    if kind == "homogenize" and any(e <= 0 for e in vals["eps"]):
        raise ConfigError("config.eps", "eps values must be positive")
    if kind == "corrector" and any(w <= 0 for w in vals["windows"]):
        raise ConfigError("config.windows", "windows must be positive")
    _check_semantics(vals)
    return ExperimentConfig(vals)


def _check_semantics(v: dict):
    kind = v["kind"]
    desc = v["potential"]
    dim = potential_dim(desc)
    for key in ("observable",):
        if key in v:
            try:
                parse(v[key])
            except ParseError as exc:
                raise ConfigError(f"config.{key}", str(exc)) from None
    if "observables" in v:
        if len(v["observables"]) != dim:
            raise ConfigError("config.observables", f"need one observable per axis ({dim})")
        for i, s in enumerate(v["observables"]):
            try:
                parse(s)
            except ParseError as exc:
                raise ConfigError(f"config.observables[{i}]", str(exc)) from None
    if "states" in v:
        for i, s in enumerate(v["states"]):
            if len(s) != 2 * dim:
                raise ConfigError(f"config.states[{i}]", f"expected {2 * dim} values (y then xi)")
    if "state" in v and len(v["state"]) != 2 * dim:
        raise ConfigError("config.state", f"expected {2 * dim} values (y then xi)")
    if kind == "flow" and (len(v["y"]) != dim or len(v["xi"]) != dim):
        raise ConfigError("config.y", f"y and xi need {dim} values each")
    one_d = ("phi", "hbar", "project-closed", "corrector", "homogenize")
    if kind in one_d and dim != 1:
        raise ConfigError("config.potential", f"kind {kind!r} needs a 1-D potential")
    if kind == "resonance" and dim < 2:
        raise ConfigError("config.potential", "kind 'resonance' needs a separable potential")
    if kind == "homogenize" and desc["name"] == "random-phase" and \
            not all(float(k).is_integer() for k in desc["wavenumbers"]):
        raise ConfigError("config.potential", "homogenize needs a periodic potential")
    if kind in ("phi", "project-closed") and v["emin"] >= v["emax"]:
        raise ConfigError("config.emin", "emin must be below emax")
    if kind == "hbar" and v["pmin"] >= v["pmax"]:
        raise ConfigError("config.pmin", "pmin must be below pmax")
    try:
        build_potential(desc, v["seeds"][0])
    except (ValueError, TypeError) as exc:
        raise ConfigError("config.potential", str(exc)) from None
