"""Multi-axis projections for separable periodic potentials.

Each axis of ``u(y) = u_1(y_1) + ... + u_N(y_N)`` is an independent 1-D
periodic orbit with its own period. When no nontrivial integer combination
of the inverse periods vanishes, the joint time average of a product
observable factors into per-axis averages. When the periods are resonant
(e.g. all axes harmonic with a common period), only the Fourier modes with
``k_1 + ... + k_N = 0`` survive and the factorization fails.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import closedform as cf
from .dynamics import as_point, flow_records, period_1d
from .errors import ResonantState
from .observables import Observable
from .potential import SEPARABLE, Potential, eval_u

DEFAULT_K = 50
DEFAULT_TOL = 1e-9


def _axes(pots) -> tuple[Potential, ...]:
    if isinstance(pots, Potential):
        return pots.axes() if pots.kind == SEPARABLE else (pots,)
    return tuple(pots)


@dataclass(frozen=True)
class PeriodVector:
    thetas: tuple[float, ...]
    energies: tuple[float, ...]

    def __post_init__(self):
        if any(not (t > 0) for t in self.thetas):
            raise ValueError(f"periods must be positive, got {self.thetas}")


def period_vector(pots, state) -> PeriodVector:
    """Per-axis energies and orbit periods of ``state``."""
    axes = _axes(pots)
    s = as_point(state)
    Es, Ts = [], []
    for i, p in enumerate(axes):
        E = 0.5 * s.xi[i] ** 2 + float(eval_u(p, s.y[i]))
        Es.append(E)
        Ts.append(period_1d(p, E, y_anchor=float(s.y[i])))
    return PeriodVector(tuple(Ts), tuple(Es))


def resonance_witness(thetas, K: int = DEFAULT_K, tol: float = DEFAULT_TOL):
    """Smallest-norm integer vector ``0 < max|k| <= K`` with ``|sum k_i/theta_i| <= tol``, or None."""
    if K < 1:
        raise ValueError("K must be at least 1")
    th = np.asarray(getattr(thetas, "thetas", thetas), dtype=float)
    inv = 1.0 / th
    n = th.size
    if n == 1:
        return None
    rng = np.arange(-K, K + 1)
    # enumerate all but the last axis, vectorize over the last
    best = None
    for head in itertools.product(rng, repeat=n - 1):
        partial = float(np.dot(head, inv[:-1]))
        vals = np.abs(partial + rng * inv[-1])
        for j in np.nonzero(vals <= tol)[0]:
            k = tuple(int(v) for v in head) + (int(rng[j]),)
            if any(k) and (best is None or max(map(abs, k)) < max(map(abs, best))):
                best = k
    return best


def noncommensurate(thetas, K: int = DEFAULT_K, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``|sum k_i / theta_i| > tol`` for every integer ``0 < max|k_i| <= K``."""
    return resonance_witness(thetas, K, tol) is None


def project_separable(pots, F_axes: Sequence[Observable], state, K: int = DEFAULT_K,
                      tol: float = DEFAULT_TOL) -> float:
    """Product of per-axis closed-form projections of ``F_1(y_1, xi_1) ... F_N(y_N, xi_N)``."""
    axes = _axes(pots)
    if len(F_axes) != len(axes):
        raise ValueError(f"need one observable per axis ({len(axes)}), got {len(F_axes)}")
    s = as_point(state)
    pv = period_vector(axes, s)
    k = resonance_witness(pv.thetas, K, tol)
    if k is not None:
        raise ResonantState(f"periods {pv.thetas} are resonant (k={k}); use resonant_limit or a time average")
    out = 1.0
    for i, (p, F) in enumerate(zip(axes, F_axes)):
        if F.invariant:
            out *= float(F.evaluate(p, s.y[i:i + 1], s.xi[i:i + 1]))
            continue
        out *= cf.project_state(p, F, float(s.y[i]), float(s.xi[i]))
    return out


# ----------------------------------------------------------- resonant limit

def orbit_fourier(p: Potential, F: Observable, y0: float, xi0: float, T0: float | None = None,
                  n: int = 4096, h: float = 1e-4) -> np.ndarray:
    """Fourier coefficients ``a_l = (1/T0) int_0^T0 F(t) exp(-2 i pi l t / T0) dt`` of ``F`` along
    one period of the 1-D orbit from ``(y0, xi0)``, for ``l = -n/2 .. n/2 - 1``.

    The orbit is sampled at ``n`` equispaced times with the step refined so
    that it divides ``T0 / n`` exactly.
    """
    if T0 is None:
        E = 0.5 * xi0 * xi0 + float(eval_u(p, y0))
        T0 = period_1d(p, E, y_anchor=y0)
    sub = max(1, int(math.ceil(T0 / n / h)))
    _, Y, X = flow_records(p, np.array([[y0]]), np.array([[xi0]]), T0 * (n - 1) / n,
                           T0 / n / sub, sub)
    vals = np.asarray(F.evaluate(p, Y[0, :n], X[0, :n]), dtype=float)
    return np.fft.fftshift(np.fft.fft(vals)) / n


@dataclass(frozen=True)
class ResonantLimit:
    value: float
    truncation_bound: float
    cutoff: int


def resonant_limit(coeffs: Sequence[np.ndarray], cutoff: int | None = None) -> ResonantLimit:
    """``sum over k_1 + ... + k_N = 0`` of ``a_{1,k_1} ... a_{N,k_N}``.

    Each entry of ``coeffs`` holds ``a_l`` for ``l = -m .. m`` or ``l = -m .. m - 1``
    (centered, as returned by :func:`orbit_fourier`). Modes with ``|l| > cutoff``
    are dropped; the reported bound is the mass of the retained outer half
    of each spectrum times the full mass of the others, an estimate of the
    dropped tail when coefficients decay geometrically.
    """
    spectra = []
    for a in coeffs:
        a = np.asarray(a, dtype=complex)
        m = a.size // 2
        ls = np.arange(a.size) - m
        spectra.append((ls, a))
    L = min(int(np.max(np.abs(ls))) for ls, _ in spectra)
    if cutoff is not None:
        L = min(L, int(cutoff))
    spectra = [(ls[np.abs(ls) <= L], a[np.abs(ls) <= L]) for ls, a in spectra]
    # convolve all but the last axis into a distribution over sum of modes
    conv = {0: 1.0 + 0j}
    for ls, a in spectra[:-1]:
        nxt: dict[int, complex] = {}
        for s, c in conv.items():
            for l, al in zip(ls, a):
                nxt[s + int(l)] = nxt.get(s + int(l), 0j) + c * al
        conv = nxt
    ls_last, a_last = spectra[-1]
    last = {int(l): al for l, al in zip(ls_last, a_last)}
    total = sum(c * last.get(-s, 0j) for s, c in conv.items())
    mass = [float(np.sum(np.abs(a))) for _, a in spectra]
    tails = [float(np.sum(np.abs(a[np.abs(ls) > L // 2]))) for ls, a in spectra]
    bound = 0.0
    for j, t in enumerate(tails):
        bound += t * math.prod(mass[:j] + mass[j + 1:])
    return ResonantLimit(float(total.real), bound, L)


# -------------------------------------------------------- sequential projection

def _axis_rule(p: Potential, y: float, xi: float, panels: int):
    E = 0.5 * xi * xi + float(eval_u(p, y))
    eta = 1.0 if xi >= 0 else -1.0
    return cf.shell_rule(p, E, eta if E > p.u_max else None, y_anchor=y, panels=panels)


def projection_composition(pot: Potential, F: Observable, state, order: Sequence[int] | None = None,
                           K: int = DEFAULT_K, tol: float = DEFAULT_TOL, panels: int = 32) -> float:
    """Apply the per-axis projections of ``F`` one axis at a time, in ``order``.

    ``F`` is evaluated on the tensor grid of per-axis shell quadrature nodes;
    each projection contracts one axis of that grid against its weights.
    """
    axes = _axes(pot)
    n = len(axes)
    order = list(range(n)) if order is None else [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"order must be a permutation of 0..{n - 1}, got {order}")
    s = as_point(state)
    pv = period_vector(axes, s)
    k = resonance_witness(pv.thetas, K, tol)
    if k is not None:
        raise ResonantState(f"periods {pv.thetas} are resonant (k={k})")
    rules = [_axis_rule(p, float(s.y[i]), float(s.xi[i]), panels) for i, p in enumerate(axes)]
    grids_y = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    grids_xi = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    Y = np.stack(grids_y, axis=-1)
    X = np.stack(grids_xi, axis=-1)
    vals = np.asarray(F.evaluate(pot, Y, X), dtype=float)
    alive = list(range(n))
    for i in order:
        pos = alive.index(i)
        vals = np.tensordot(vals, rules[i][2], axes=([pos], [0]))
        alive.pop(pos)
    return float(vals)


# --------------------------------------------------------------- reports

@dataclass(frozen=True)
class ResonanceReport:
    thetas: tuple
    energies: tuple
    resonant: bool
    witness: tuple | None
    joint_average: float
    product_of_projections: float
    fourier_prediction: float | None
    fourier_bound: float | None
    K: int
    tol: float

    def to_record(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def resonance_report(pot: Potential, F_axes: Sequence[Observable], state, T: float, h: float,
                     K: int = DEFAULT_K, tol: float = DEFAULT_TOL) -> ResonanceReport:
    """Joint time average of ``prod F_i`` against the per-axis projections, and in the
    resonant case against the constrained Fourier sum."""
    from .ergodic import time_average
    from .observables import on_axis

    axes = _axes(pot)
    s = as_point(state)
    pv = period_vector(axes, s)
    k = resonance_witness(pv.thetas, K, tol)
    prod_obs = on_axis(F_axes[0], 0)
    for i, F in enumerate(F_axes[1:], start=1):
        prod_obs = prod_obs * on_axis(F, i)
    joint = float(time_average(pot, s, prod_obs, T, h).value)
    singles = math.prod(cf.project_state(p, F, float(s.y[i]), float(s.xi[i]))
                        for i, (p, F) in enumerate(zip(axes, F_axes)))
    pred = bound = None
    if k is not None and np.allclose(pv.thetas, pv.thetas[0], rtol=1e-9):
        coeffs = [orbit_fourier(p, F, float(s.y[i]), float(s.xi[i]), pv.thetas[0])
                  for i, (p, F) in enumerate(zip(axes, F_axes))]
        lim = resonant_limit(coeffs)
        pred, bound = lim.value, lim.truncation_bound
    return ResonanceReport(pv.thetas, pv.energies, k is not None, k, joint, singles, pred, bound, K, tol)
