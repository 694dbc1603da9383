"""Hamiltonian characteristics ``dY/dt = -Xi``, ``dXi/dt = grad u(Y)``.

The minus sign on the position equation is deliberate: free transport
moves ``y`` to ``y - t xi``. Every function here integrates with the
fixed-step two-stage leapfrog splitting in :mod:`kinhom._kernels`, which
is second order, symplectic and time reversible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as K
from .errors import CriticalEnergyError, DimensionError, StepSizeError
from .potential import (CONSTANT, SEPARABLE, Potential, curvature_bound, eval_u,
                        lipschitz_bound, stability_step, well_containing,
                        well_integral)
from .quadrature import singular_quadrature

CHUNK_STEPS = 1 << 18


@dataclass(frozen=True, eq=False)
class PhasePoint:
    y: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float)).copy()
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float)).copy()
        if y.ndim != 1 or y.shape != xi.shape:
            raise DimensionError(f"position {y.shape} and momentum {xi.shape} must be matching vectors")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(xi))):
            raise ValueError("phase point has non-finite components")
        y.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return self.y.shape[0]

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.y, self.xi])

    def __iter__(self):
        yield self.y
        yield self.xi


def as_point(s, xi=None) -> PhasePoint:
    if isinstance(s, PhasePoint):
        return s
    if xi is not None:
        return PhasePoint(s, xi)
    # a pair (y, xi) or a flat vector (y_1..y_N, xi_1..xi_N)
    try:
        flat = np.asarray(s, dtype=float)
    except ValueError:
        y, xi = s
        return PhasePoint(y, xi)
    if flat.ndim == 1 and flat.shape[0] % 2 == 0:
        n = flat.shape[0] // 2
        return PhasePoint(flat[:n], flat[n:])
    if flat.ndim == 2 and flat.shape[0] == 2:
        return PhasePoint(flat[0], flat[1])
    raise DimensionError(f"cannot read a phase point from shape {flat.shape}")


def _check_dim(p: Potential, s: PhasePoint):
    if s.dim != p.dim:
        raise DimensionError(f"phase point has dimension {s.dim}, potential has {p.dim}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Strided flow history. ``y`` and ``xi`` have shape ``(n_records, N)``."""

    times: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    step: float
    energy0: float
    stride: int = 1
    final: PhasePoint | None = None

    def __len__(self):
        return self.times.shape[0]

    @property
    def states(self) -> list[PhasePoint]:
        return [PhasePoint(a, b) for a, b in zip(self.y, self.xi)]

    def energies(self, p: Potential) -> np.ndarray:
        return energy_array(p, self.y, self.xi)


class Regime(str, enum.Enum):
    TRAPPED = "Trapped"
    RUNNING = "Running"
    NEAR_CRITICAL = "NearCritical"


@dataclass(frozen=True)
class EnergyClass:
    tag: Regime
    energy: float


def energy_array(p: Potential, y, xi) -> np.ndarray:
    """``H = |xi|^2 / 2 + u(y)`` for arrays with a trailing coordinate axis."""
    y = np.asarray(y, dtype=float)
    xi = np.asarray(xi, dtype=float)
    u = eval_u(p, y) if p.dim > 1 else eval_u(p, y[..., 0])
    return 0.5 * np.sum(xi * xi, axis=-1) + u


def energy(p: Potential, s, xi=None) -> float:
    s = as_point(s, xi)
    _check_dim(p, s)
    return float(energy_array(p, s.y, s.xi))


def energy_tolerance(p: Potential, h: float, E: float) -> float:
    """A priori bound on the leapfrog energy oscillation at step ``h`` and energy ``E``."""
    m2 = curvature_bound(p)
    lip = lipschitz_bound(p)
    return h * h * (2.0 * abs(E) * m2 + p.dim * lip * lip) / 4.0 + 1e-12 * (1.0 + abs(E))


def classify(p: Potential, s, xi=None, band: float | None = None) -> EnergyClass:
    E = energy(p, s, xi)
    return classify_energy(p, E, band)


def classify_energy(p: Potential, E: float, band: float | None = None) -> EnergyClass:
    band = p.critical_band if band is None else band
    if E < p.u_max - band:
        return EnergyClass(Regime.TRAPPED, E)
    if E > p.u_max + band:
        return EnergyClass(Regime.RUNNING, E)
    return EnergyClass(Regime.NEAR_CRITICAL, E)


# ------------------------------------------------------------ integration

def _steps(T: float, h: float) -> tuple[int, float]:
    """Number of steps and the adjusted step that lands exactly on ``T``."""
    n = max(1, math.ceil(abs(T) / h - 1e-9))
    return n, T / n


def _validate(p: Potential, T: float, h: float, allow_zero: bool = False):
    if not h > 0:
        raise StepSizeError(f"step must be positive, got {h}")
    if not allow_zero and not T > 0:
        raise ValueError(f"duration must be positive, got {T}")
    if h > stability_step(p):
        raise StepSizeError(
            f"step {h} exceeds the leapfrog stability bound {stability_step(p):.6g} "
            f"(2 / sqrt(max|u''|))"
        )


def integrate(p: Potential, s0, T: float, h: float, stride: int = 1) -> Trajectory:
    """Leapfrog trajectory from ``s0`` over ``[0, T]``.

    The step is shrunk to ``T / ceil(T / h)`` so the last step lands on ``T``.
    Every ``stride``-th state is stored.
    """
    s0 = as_point(s0)
    _check_dim(p, s0)
    _validate(p, T, h)
    if h > T:
        raise StepSizeError(f"step {h} longer than duration {T}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n, hh = _steps(T, h)
    nrec = n // stride + 1
    ys = np.empty((nrec, p.dim))
    xis = np.empty((nrec, p.dim))
    yf = np.empty(p.dim)
    xf = np.empty(p.dim)
    for i, ax in enumerate(p.axes()):
        oy = np.empty(nrec)
        ox = np.empty(nrec)
        yf[i], xf[i] = K.leapfrog_record(*K.axis_params(ax), float(s0.y[i]), float(s0.xi[i]),
                                         hh, n, stride, oy, ox)
        ys[:, i] = oy
        xis[:, i] = ox
    times = np.arange(nrec) * (stride * hh)
    for a in (times, ys, xis):
        a.setflags(write=False)
    return Trajectory(times, ys, xis, hh, energy(p, s0), stride, PhasePoint(yf, xf))


def stream(p: Potential, s0, T: float, h: float, chunk_steps: int = CHUNK_STEPS
           ) -> Iterator[tuple[np.ndarray, np.ndarray, float]]:
    """Yield ``(y, xi, step)`` blocks covering ``[0, T]`` without storing the whole orbit.

    Consecutive blocks share their boundary state, so block ``j`` holds
    ``m_j + 1`` records for ``m_j`` steps.
    """
    s0 = as_point(s0)
    _check_dim(p, s0)
    _validate(p, T, h)
    n, hh = _steps(T, h)
    y = s0.y.astype(float).copy()
    xi = s0.xi.astype(float).copy()
    params = [K.axis_params(ax) for ax in p.axes()]
    done = 0
    while done < n:
        m = min(chunk_steps, n - done)
        oy = np.empty((m + 1, p.dim))
        ox = np.empty((m + 1, p.dim))
        for i, prm in enumerate(params):
            by = np.empty(m + 1)
            bx = np.empty(m + 1)
            y[i], xi[i] = K.leapfrog_record(*prm, y[i], xi[i], hh, m, 1, by, bx)
            oy[:, i] = by
            ox[:, i] = bx
        done += m
        yield oy, ox, hh


def flow(p: Potential, y, xi, t: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Time-``t`` flow map applied to arrays of states with shape ``(..., N)``.

    ``t`` may be negative (the scheme is reversible) or zero.
    """
    _validate(p, t, h, allow_zero=True)
    y = np.array(y, dtype=float)
    xi = np.array(xi, dtype=float)
    if y.shape != xi.shape or y.ndim == 0 or y.shape[-1] != p.dim:
        raise DimensionError(f"states must have trailing axis {p.dim}; got {y.shape}, {xi.shape}")
    if t == 0:
        return y, xi
    n, hh = _steps(t, h)
    shape = y.shape
    y2 = y.reshape(-1, p.dim)
    x2 = xi.reshape(-1, p.dim)
    for i, ax in enumerate(p.axes()):
        cy = np.ascontiguousarray(y2[:, i])
        cx = np.ascontiguousarray(x2[:, i])
        K.leapfrog_many(*K.axis_params(ax), cy, cx, hh, n)
        y2[:, i] = cy
        x2[:, i] = cx
    return y2.reshape(shape), x2.reshape(shape)


def flow_records(p: Potential, y, xi, t: float, h: float, stride: int = 1
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flow a batch ``(n, N)`` of states and keep every ``stride``-th record.

    Returns ``(times, Y, XI)`` with ``Y`` of shape ``(n, n_records, N)``.
    """
    _validate(p, t, h)
    y = np.array(y, dtype=float, ndmin=2)
    xi = np.array(xi, dtype=float, ndmin=2)
    n, hh = _steps(t, h)
    nrec = n // stride + 1
    Y = np.empty((y.shape[0], nrec, p.dim))
    X = np.empty_like(Y)
    for i, ax in enumerate(p.axes()):
        oy = np.empty((y.shape[0], nrec))
        ox = np.empty_like(oy)
        cy = np.ascontiguousarray(y[:, i])
        cx = np.ascontiguousarray(xi[:, i])
        K.leapfrog_many_record(*K.axis_params(ax), cy, cx, hh, n, stride, oy, ox)
        Y[:, :, i] = oy
        X[:, :, i] = ox
    return np.arange(nrec) * (stride * hh), Y, X


def scaled_flow(p: Potential, eps: float, t: float, x, xi, h: float = 1e-3
                ) -> tuple[np.ndarray, np.ndarray]:
    """``(eps Y(t/eps, x/eps, xi), Xi(t/eps, x/eps, xi))``.

    ``x`` and ``xi`` are arrays with trailing coordinate axis (a scalar is
    accepted for 1-D potentials). ``h`` is the step in the fast time.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    scalar = x.ndim == 0
    if scalar:
        x = x[None]
        xi = xi[None]
    Y, X = flow(p, x / eps, xi, t / eps, h)
    out_y, out_xi = eps * Y, X
    if t == 0:
        out_y = x.copy()
    if scalar:
        return out_y[0], out_xi[0]
    return out_y, out_xi


# ----------------------------------------------------------------- periods

def period_1d(p: Potential, E: float, y_anchor: float = 0.0, band: float | None = None) -> float:
    """Period of the 1-D orbit at energy ``E``.

    Running: ``t0 = <1 / sqrt(2(E - u))>`` over one cell, with nodes clustered
    toward the cell ends (the maximum of ``u``). Trapped: twice the transit
    time between the turning points of the well containing ``y_anchor``.
    """
    if p.kind == SEPARABLE:
        raise DimensionError("period_1d needs a 1-D potential")
    cls = classify_energy(p, E, band)
    if cls.tag is Regime.NEAR_CRITICAL:
        raise CriticalEnergyError(f"E={E} is within the critical band of u_max={p.u_max}")

    def g(s):
        return 1.0 / np.sqrt(2.0 * np.maximum(E - eval_u(p, s), 1e-300))

    if cls.tag is Regime.RUNNING:
        if p.kind == CONSTANT:
            return 1.0 / math.sqrt(2.0 * (E - p.u_max))
        a = p.argmax
        return singular_quadrature(g, a, a + 1.0, (True, True))
    zm, zp = well_containing(p, E, y_anchor)
    return 2.0 * well_integral(p, zm, zp, lambda s, d: 1.0 / np.sqrt(2.0 * d))


# ---------------------------------------------------------------- Liouville

def flow_jacobian(p: Potential, s0, T: float, h: float, delta: float = 1e-5) -> np.ndarray:
    """Central finite-difference Jacobian of the time-``T`` flow map (``2N x 2N``)."""
    s0 = as_point(s0)
    _check_dim(p, s0)
    N = p.dim
    z0 = s0.as_array()
    pert = np.repeat(z0[None, :], 4 * N, axis=0)
    for j in range(2 * N):
        pert[2 * j, j] += delta
        pert[2 * j + 1, j] -= delta
    Y, X = flow(p, pert[:, :N], pert[:, N:], T, h)
    Z = np.concatenate([Y, X], axis=1)
    return ((Z[0::2] - Z[1::2]) / (2.0 * delta)).T


def liouville_determinant(p: Potential, s0, T: float, h: float, delta: float = 1e-5) -> float:
    return float(np.linalg.det(flow_jacobian(p, s0, T, h, delta)))


def advance(p: Potential, y, xi, nsteps: int, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Exactly ``nsteps`` steps of size ``step`` from one state (no step adjustment)."""
    y = np.array(y, dtype=float, ndmin=1)
    xi = np.array(xi, dtype=float, ndmin=1)
    for i, ax in enumerate(p.axes()):
        cy = y[i:i + 1].copy()
        cx = xi[i:i + 1].copy()
        K.leapfrog_many(*K.axis_params(ax), cy, cx, step, int(nsteps))
        y[i], xi[i] = cy[0], cx[0]
    return y, xi
