"""Birkhoff time averages along the characteristic flow.

The projection of an observable at a state is its long-time average along
the orbit through that state; the effective velocity is the projection of
the momentum. Every estimate carries running-mean diagnostics at the
quarter points of the averaging window.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import closedform as cf
from .dynamics import (Regime, _steps, _validate, advance, as_point, classify, classify_energy,
                       stream)
from .errors import CriticalEnergyError, KinhomError, ProjectionUnavailable
from .observables import Const, Observable
from .potential import (CONSTANT, Potential, RandomPhaseModel, eval_u, realize, wells)


@dataclass(frozen=True)
class ErgodicEstimate:
    value: float | np.ndarray
    window_means: tuple
    tail_variation: float
    T_used: float
    step: float
    seed: int | None = None

    def to_record(self) -> dict:
        def plain(v):
            return np.asarray(v, dtype=float).tolist()

        rec = {
            "value": plain(self.value),
            "window_means": [plain(m) for m in self.window_means],
            "tail_variation": float(self.tail_variation),
            "T": float(self.T_used),
            "h": float(self.step),
        }
        if self.seed is not None:
            rec["seed"] = int(self.seed)
        return rec


def _tail(means) -> float:
    half = means[len(means) // 2:]
    worst = 0.0
    for i in range(len(half)):
        for j in range(i + 1, len(half)):
            worst = max(worst, float(np.max(np.abs(np.asarray(half[i]) - np.asarray(half[j])))))
    return worst


def _quarters(n: int) -> list[int]:
    return [max(1, round(k * n / 4)) for k in (1, 2, 3, 4)]


def _check_regime(p: Potential, s0, band):
    cls = classify(p, s0, band=band)
    if cls.tag is Regime.NEAR_CRITICAL:
        raise CriticalEnergyError(f"state energy {cls.energy} lies in the critical band")
    return cls


def time_average(p: Potential, s0, F: Observable, T: float, h: float,
                 band: float | None = None) -> ErgodicEstimate:
    """``(1/T) int_0^T F(Y(t), Xi(t)) dt`` by the trapezoid rule on every step."""
    s0 = as_point(s0)
    _check_regime(p, s0, band)
    n, hh = _steps(T, h)
    marks = _quarters(n)
    means = []
    acc = 0.0
    offset = 0
    for ys, xis, _ in stream(p, s0, T, h):
        vals = np.asarray(F.evaluate(p, ys, xis), dtype=float)
        m = vals.shape[0] - 1
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]))]) * hh
        for q in marks:
            if offset < q <= offset + m:
                means.append((acc + cum[q - offset]) / (q * hh))
        acc += cum[-1]
        offset += m
    value = means[-1]
    return ErgodicEstimate(value, tuple(means), _tail(means), n * hh, hh)


def xsharp_empirical(p: Potential, s0, T: float, h: float, band: float | None = None
                     ) -> tuple[np.ndarray, ErgodicEstimate]:
    """Effective velocity ``-(Y(T) - y) / T`` with quarter-window diagnostics."""
    s0 = as_point(s0)
    _check_regime(p, s0, band)
    _validate(p, T, h)
    n, hh = _steps(T, h)
    marks = _quarters(n)
    y, xi = s0.y.copy(), s0.xi.copy()
    done = 0
    means = []
    for q in marks:
        y, xi = advance(p, y, xi, q - done, hh)
        done = q
        means.append(-(y - s0.y) / (q * hh))
    value = means[-1]
    est = ErgodicEstimate(value, tuple(means), _tail(means), n * hh, hh)
    return value, est


def xsharp_quadrature(p: Potential, s0, T: float, h: float) -> np.ndarray:
    """Effective velocity as the trapezoid time average of each momentum component."""
    from .observables import coord_xi

    s0 = as_point(s0)
    return np.array([time_average(p, s0, coord_xi(i), T, h).value for i in range(p.dim)])


def project_empirical(p: Potential, s0, F: Observable, T: float, h: float,
                      ball: float | None = None, n_ball: int = 8, seed: int = 0,
                      band: float | None = None) -> ErgodicEstimate:
    """Projection of ``F`` at ``s0`` as a Birkhoff average.

    With ``ball`` set, the estimate is the mean over ``n_ball`` states drawn
    uniformly from the phase-space cube of half-width ``ball`` around ``s0``
    (guards against ``s0`` sitting on an exceptional orbit).
    """
    s0 = as_point(s0)
    if not ball:
        return time_average(p, s0, F, T, h, band)
    rng = np.random.default_rng(seed)
    z0 = s0.as_array()
    ests = []
    for _ in range(n_ball):
        z = z0 + rng.uniform(-ball, ball, size=z0.shape)
        ests.append(time_average(p, z, F, T, h, band))
    means = tuple(np.mean([e.window_means[k] for e in ests], axis=0) for k in range(4))
    return ErgodicEstimate(means[-1], means, _tail(means), ests[0].T_used, ests[0].step, seed)


# ------------------------------------------------------------ projections on tables

@dataclass
class ProjectionTable:
    """Closed-form projection of a 1-D observable tabulated against energy.

    Running shells are tabulated for both directions, trapped shells for the
    well around ``anchor``; values are interpolated monotonically-piecewise
    (PCHIP) in ``log |E - u_max|``. The observable must be 1-periodic in
    ``y`` so that every well and every cell carry the same values, and the
    potential must have one well per period at trapped energies.
    """

    pot: Potential
    F: Observable
    e_max: float
    n: int = 160
    anchor: float | None = None
    _run: dict = field(default_factory=dict, init=False, repr=False)
    _trap: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        p = self.pot
        if p.dim != 1 or not p.periodic:
            raise ProjectionUnavailable("energy tables need a 1-D periodic potential")
        band = p.critical_band
        if self.anchor is None:
            self.anchor = (p.argmax + 0.5) % 1.0 if p.kind != CONSTANT else 0.0
        top = max(self.e_max - p.u_max, 4.0 * max(band, 1e-12))
        d = np.geomspace(max(band, 1e-12) * 0.5, top, self.n)
        self._x_run = np.log(d)
        for eta in (1.0, -1.0):
            vals = [cf.project_running(p, self.F, eta, p.u_max + di, band=0.0) for di in d]
            self._run[eta] = PchipInterpolator(self._x_run, vals, extrapolate=True)
        if p.u_max > 0:
            Es = p.u_max - np.geomspace(max(band, 1e-12) * 0.5, p.u_max * (1 - 1e-3), self.n)[::-1]
            for E in (Es[0], Es[len(Es) // 2], Es[-1]):
                if len(wells(p, E)) > 1:
                    raise ProjectionUnavailable("potential has several wells per period")
            vals = [cf.project_trapped(p, self.F, E, self.anchor, band=0.0) for E in Es]
            self._x_trap = np.log(p.u_max - Es)
            self._trap = PchipInterpolator(self._x_trap[::-1], np.asarray(vals)[::-1], extrapolate=True)

    def __call__(self, y, xi) -> np.ndarray:
        p = self.pot
        y = np.asarray(y, dtype=float)
        xi = np.asarray(xi, dtype=float)
        E = 0.5 * xi * xi + eval_u(p, y)
        out = np.full(np.shape(E), np.nan)
        band = p.critical_band
        run = E > p.u_max + band
        trap = E < p.u_max - band
        if np.any(run):
            x = np.log(E[run] - p.u_max)
            sg = np.where(xi[run] >= 0, 1.0, -1.0)
            out[run] = np.where(sg > 0, self._run[1.0](x), self._run[-1.0](x))
        if np.any(trap) and self._trap is not None:
            out[trap] = self._trap(np.log(p.u_max - E[trap]))
        return out


class Projected(Observable):
    """``P(F)`` read from a :class:`ProjectionTable`."""

    invariant = True

    def __init__(self, table: ProjectionTable):
        self.table = table

    def ev(self, y, xi, p):
        return self.table(y[..., 0], xi[..., 0])

    def axes(self):
        return frozenset({0})

    def __str__(self):
        return f"P[{self.table.F}]"


class Defect(Observable):
    """``F - P(F)``."""

    def __init__(self, F: Observable, PF: Observable):
        self.F = F
        self.PF = PF

    def ev(self, y, xi, p):
        return self.F.ev(y, xi, p) - self.PF.ev(y, xi, p)

    def axes(self):
        return self.F.axes()

    def __str__(self):
        return f"({self.F} - {self.PF})"


def projected_observable(F: Observable, table: ProjectionTable | None = None) -> Observable:
    if F.invariant:
        return F
    if table is None:
        raise ProjectionUnavailable(f"no projection available for {F}")
    return Projected(table)


def defect_observable(F: Observable, table: ProjectionTable | None = None) -> Observable:
    """``F - P(F)``: zero for flow-invariant ``F``; needs a projection table otherwise."""
    if F.invariant:
        return Const(0.0)
    return Defect(F, projected_observable(F, table))


# ------------------------------------------------------------------ ensembles

@dataclass(frozen=True)
class EnsembleEstimate:
    mean: float
    stderr: float
    values: tuple
    seeds: tuple
    energies: tuple
    skipped: int


def _seed_task(args):
    model, seed, xi0, F, T, h = args
    p = realize(model, seed)
    s0 = ((0.0,), (xi0,))
    cls = classify(p, s0)
    if cls.tag is not Regime.RUNNING:
        return seed, None, cls.energy
    return seed, float(time_average(p, s0, F, T, h).value), cls.energy


def ensemble_project(model: RandomPhaseModel, xi: float, F: Observable, n_seeds: int,
                     T: float, h: float, seeds: Sequence[int] | None = None,
                     jobs: int = 1) -> EnsembleEstimate:
    """Mean and standard error over realizations of the projection of ``F`` at ``(0, xi)``.

    Realizations whose state is not running are skipped and counted.
    """
    if n_seeds < 2:
        raise ValueError("n_seeds must be at least 2 to report a standard error")
    seeds = list(range(n_seeds)) if seeds is None else list(seeds)[:n_seeds]
    tasks = [(model, s, float(xi), F, T, h) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_seed_task, tasks))
    else:
        results = [_seed_task(t) for t in tasks]
    kept = [(s, v, e) for s, v, e in results if v is not None]
    skipped = len(results) - len(kept)
    if skipped:
        warnings.warn(f"{skipped} of {len(results)} realizations were not running and were skipped")
    vals = np.array([v for _, v, _ in kept])
    if vals.size == 0:
        raise KinhomError("no running realizations")
    err = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    return EnsembleEstimate(float(np.mean(vals)), err, tuple(vals.tolist()),
                            tuple(s for s, _, _ in kept), tuple(e for _, _, e in kept), skipped)


def xsharp_ergodic_formula(p: Potential, E: float, eta: float = 1.0, L: float = 1e3) -> float:
    """``eta sqrt(2) / E[(E - u)^(-1/2)]`` with the expectation taken as a
    windowed spatial average over ``[0, L]`` of one realization."""
    from .potential import inverse_sqrt_weight, spatial_average

    return math.copysign(math.sqrt(2.0) / spatial_average(p, inverse_sqrt_weight(E), E, L), eta)
