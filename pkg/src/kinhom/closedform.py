"""Explicit one-dimensional formulas.

For a 1-periodic potential ``u`` with maximum ``u_max``:

* running speed ``phi(E) = sqrt(2) / <(E - u)^(-1/2)>`` for ``E > u_max``, 0 below;
* ``theta(lam) = <sqrt(2 (u_max - u) + lam)>`` and the effective Hamiltonian
  ``Hbar(p) = u_max + theta^{-1}(|p|) / 2`` (flat at ``u_max`` for ``|p| <= theta(0)``);
* shell averages of observables on running and trapped energy levels.

``<.>`` is the cell average for periodic potentials and the phase-torus
expectation for quasi-periodic random-phase fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .dynamics import Regime, classify_energy, period_1d
from .errors import (CriticalEnergyError, EnergyBelowCritical, KinkError, WellNotFound)
from .observables import Observable
from .potential import (CONSTANT, Potential, WeightFunctional, cell_average, eval_u,
                        inverse_sqrt_weight, well_containing, well_integral,
                        well_rule)
from .quadrature import composite_nodes, singular_quadrature, substituted_rule

KINK_TOL = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _regime(p: Potential, E: float, band: float | None):
    cls = classify_energy(p, E, band)
    if cls.tag is Regime.NEAR_CRITICAL:
        raise CriticalEnergyError(f"E={E} lies in the critical band around u_max={p.u_max}")
    return cls.tag


# ----------------------------------------------------------------- speeds

def phi(p: Potential, E: float, band: float | None = None) -> float:
    """Mean running speed on the energy shell ``E``; zero for trapped energies."""
    if _regime(p, E, band) is Regime.TRAPPED:
        return 0.0
    if p.kind == CONSTANT:
        return math.sqrt(2.0 * (E - p.u_max))
    return math.sqrt(2.0) / cell_average(p, inverse_sqrt_weight(E), E)


def theta(p: Potential, lam: float) -> float:
    if p.kind == CONSTANT:
        return math.sqrt(lam)
    um = p.u_max
    w = WeightFunctional.of_u(lambda u: np.sqrt(np.maximum(2.0 * (um - u) + lam, 0.0)))
    return cell_average(p, w)


def theta_prime(p: Potential, lam: float) -> float:
    if lam <= 0.0:
        return math.inf
    if p.kind == CONSTANT:
        return 0.5 / math.sqrt(lam)
    um = p.u_max
    w = WeightFunctional.of_u(lambda u: 1.0 / np.sqrt(2.0 * (um - u) + lam))
    return 0.5 * cell_average(p, w)


@dataclass
class HomogenizedHamiltonian:
    """``Hbar`` of a 1-D potential with a cached ``theta(0)`` and inverse."""

    pot: Potential
    theta0: float = field(init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.theta0 = theta(self.pot, 0.0)

    @property
    def u_max(self) -> float:
        return self.pot.u_max

    def lam(self, q: float) -> float:
        """``theta^{-1}(|q|)`` for ``|q| >= theta(0)``."""
        a = abs(float(q))
        if a <= self.theta0:
            return 0.0
        if a in self._cache:
            return self._cache[a]
        if self.pot.kind == CONSTANT:
            val = a * a
        else:
            # theta(lam) >= sqrt(lam), so the root lies below q^2
            hi = a * a
            val = brentq(lambda l: theta(self.pot, l) - a, 0.0, hi, xtol=1e-15 * max(1.0, hi),
                         maxiter=200)
        self._cache[a] = val
        return val

    def value(self, q: float) -> float:
        if abs(q) <= self.theta0:
            return self.u_max
        return self.u_max + 0.5 * self.lam(q)

    def derivative(self, q: float) -> float:
        a = abs(q)
        if abs(a - self.theta0) <= KINK_TOL * max(1.0, self.theta0):
            raise KinkError(f"|p|={a} sits at the kink theta(0)={self.theta0}")
        if a < self.theta0:
            return 0.0
        return math.copysign(0.5 / theta_prime(self.pot, self.lam(q)), q)

    def legendre(self, v: float, tol: float = 1e-11) -> tuple[float, float]:
        """``Lbar(v) = sup_Q (Q v - Hbar(Q))`` by golden-section search; returns (value, argmax).

        The maximiser satisfies ``Hbar'(Q) = v``. Because ``Hbar(Q) >= Q^2/2``
        forces ``Hbar'(Q) >= sqrt(Q^2 - 2 u_max)``, it lies between
        ``theta(0)`` and ``sqrt(v^2 + 2 u_max)`` (with the sign of ``v``).
        """
        s = 1.0 if v >= 0 else -1.0
        a = s * self.theta0
        b = s * math.sqrt(v * v + 2.0 * self.u_max)
        return golden_max(lambda q: q * v - self.value(q), a, b, tol)


def golden_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-11
               ) -> tuple[float, float]:
    """Maximum of a unimodal ``f`` on ``[a, b]``; returns ``(max value, location)``."""
    if a > b:
        a, b = b, a
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    cands = [(f(a), a), (fc, c), (fd, d), (f(b), b)]
    return max(cands)


_HH: dict[int, HomogenizedHamiltonian] = {}


def homogenized(pot: Potential) -> HomogenizedHamiltonian:
    key = id(pot)
    hh = _HH.get(key)
    if hh is None or hh.pot is not pot:
        hh = HomogenizedHamiltonian(pot)
        _HH[key] = hh
    return hh


def hbar(p_momentum: float, pot: Potential) -> float:
    return homogenized(pot).value(p_momentum)


def hbar_prime(p_momentum: float, pot: Potential) -> float:
    return homogenized(pot).derivative(p_momentum)


def p_of_state(pot: Potential, y: float, xi: float) -> float:
    """Momentum ``P`` with ``Hbar(P) = H(y, xi)`` and ``sgn P = sgn xi``."""
    E = 0.5 * xi * xi + float(eval_u(pot, y))
    if E <= pot.u_max:
        raise EnergyBelowCritical(f"H={E} <= u_max={pot.u_max}")
    return math.copysign(theta(pot, 2.0 * (E - pot.u_max)), xi)


def xsharp_closed(pot: Potential, y: float, xi: float, band: float | None = None) -> float:
    E = 0.5 * xi * xi + float(eval_u(pot, y))
    if _regime(pot, E, band) is Regime.TRAPPED:
        return 0.0
    return math.copysign(phi(pot, E, band), xi)


# -------------------------------------------------------------- projections

def _as_function(F, p: Potential) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    if isinstance(F, Observable):
        return lambda s, v: F.evaluate(p, s, v)
    return F


def project_running(pot: Potential, F, eta: float, E: float, band: float | None = None) -> float:
    """Average of ``F(s, eta sqrt(2(E - u(s))))`` over a cell, weighted by ``(E - u)^(-1/2)``.

    ``F`` is an :class:`Observable` or a callable ``(y, xi) -> array``.
    """
    if _regime(pot, E, band) is not Regime.RUNNING:
        raise EnergyBelowCritical(f"E={E} is not a running energy (u_max={pot.u_max})")
    f = _as_function(F, pot)
    eta = 1.0 if eta >= 0 else -1.0
    if pot.kind == CONSTANT:
        return float(np.mean(f(np.array([0.0]), np.array([eta * math.sqrt(2.0 * (E - pot.u_max))]))))
    if not pot.periodic:
        return _project_torus(pot, f, eta, E)
    a = pot.argmax

    def wt(s):
        return 1.0 / np.sqrt(E - eval_u(pot, s))

    def num(s):
        v = np.sqrt(2.0 * (E - eval_u(pot, s)))
        return f(s, eta * v) * wt(s)

    return singular_quadrature(num, a, a + 1.0, (True, True)) / \
        singular_quadrature(wt, a, a + 1.0, (True, True))


def _project_torus(pot, f, eta, E):
    # quasi-periodic field: expectation over the phase torus at y = 0
    from .potential import _torus_average

    wden = WeightFunctional.of_u(lambda u: 1.0 / np.sqrt(E - u))
    wnum = WeightFunctional.of_u(
        lambda u: f(np.zeros_like(u), eta * np.sqrt(2.0 * (E - u))) / np.sqrt(E - u))
    return _torus_average(pot, wnum) / _torus_average(pot, wden)


def project_trapped(pot: Potential, F, E: float, y_anchor: float = 0.0,
                    band: float | None = None) -> float:
    """Time average of ``F`` over the trapped orbit at energy ``E`` in the well of ``y_anchor``.

    Both momentum branches ``+-sqrt(2(E - u))`` are averaged over the well
    with weight ``(E - u)^(-1/2)``; the turning points are flagged singular.
    """
    if _regime(pot, E, band) is not Regime.TRAPPED:
        raise WellNotFound(f"E={E} is above u_max={pot.u_max}: no bounded well")
    f = _as_function(F, pot)
    zm, zp = well_containing(pot, E, y_anchor)

    def num(s, d):
        v = np.sqrt(2.0 * d)
        return 0.5 * (f(s, v) + f(s, -v)) / np.sqrt(d)

    return well_integral(pot, zm, zp, num) / well_integral(pot, zm, zp, lambda s, d: 1.0 / np.sqrt(d))


def shell_rule(pot: Potential, E: float, eta: float | None = None, y_anchor: float = 0.0,
               panels: int = 64) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed quadrature rule ``(s, v, w)`` for the invariant measure on a 1-D shell.

    ``sum w * F(s, v)`` approximates the projection of ``F`` on the shell
    (running with direction ``eta``, or trapped in the well of ``y_anchor``
    with both branches). Weights sum to 1.
    """
    tag = _regime(pot, E, None)
    if tag is Regime.RUNNING:
        if pot.kind == CONSTANT:
            return np.zeros(1), np.array([math.copysign(math.sqrt(2.0 * (E - pot.u_max)), eta)]), np.ones(1)
        s, w = substituted_rule(pot.argmax, pot.argmax + 1.0, (True, True), panels)
        d = E - eval_u(pot, s)
        w = w / np.sqrt(d)
        v = math.copysign(1.0, eta) * np.sqrt(2.0 * d)
    else:
        zm, zp = well_containing(pot, E, y_anchor)
        s, d, w = well_rule(pot, zm, zp, panels)
        w = w / np.sqrt(d)
        v = np.sqrt(2.0 * d)
        s = np.concatenate([s, s])
        v = np.concatenate([v, -v])
        w = np.concatenate([w, w])
    return s, v, w / np.sum(w)


def project_state(pot: Potential, F, y: float, xi: float, band: float | None = None) -> float:
    """Closed-form projection of ``F`` at the state ``(y, xi)`` (running or trapped)."""
    E = 0.5 * xi * xi + float(eval_u(pot, y))
    if _regime(pot, E, band) is Regime.RUNNING:
        return project_running(pot, F, 1.0 if xi >= 0 else -1.0, E, band)
    return project_trapped(pot, F, E, y, band)


# ------------------------------------------------------------ identities

def lagrangian_identity_check(pot: Potential, y: float, xi: float) -> tuple[float, float]:
    """``(P(L), Lbar(xi_sharp))`` for ``L = xi^2/2 - u`` at a running state."""
    E = 0.5 * xi * xi + float(eval_u(pot, y))
    if E <= pot.u_max:
        raise EnergyBelowCritical(f"H={E} <= u_max={pot.u_max}")
    eta = 1.0 if xi >= 0 else -1.0

    def lag(s, v):
        return 0.5 * v * v - eval_u(pot, s)

    lhs = project_running(pot, lag, eta, E)
    v = xsharp_closed(pot, y, xi)
    rhs, _ = homogenized(pot).legendre(v)
    return lhs, rhs


@dataclass(frozen=True)
class CorrectorProfile:
    y: np.ndarray
    v: np.ndarray
    sublinearity_ratio: float
    length: float
    P: float
    hbar: float


def corrector_profile(pot: Potential, P: float, y_grid) -> CorrectorProfile:
    """``v(y) = sgn(P) int_0^y sqrt(2(Hbar(P) - u)) dz - P y`` on ``y_grid``.

    The sublinearity ratio is ``max |v(y)| / (1 + |y|)`` over the outer half
    of the grid (``|y| >= max|y| / 2``).
    """
    hh = homogenized(pot)
    if abs(P) <= hh.theta0:
        raise ValueError(f"|P|={abs(P)} must exceed theta(0)={hh.theta0}")
    Hb = hh.value(P)
    yg = np.asarray(y_grid, dtype=float)
    order = np.argsort(yg)
    ys = yg[order]
    knots = np.union1d(ys, [0.0])
    lo, hi = knots[:-1], knots[1:]
    x, w = composite_nodes(-1.0, 1.0, 1, 4)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = np.sqrt(np.maximum(2.0 * (Hb - eval_u(pot, pts)), 0.0))
    seg = half * (vals @ w)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    cum -= cum[np.searchsorted(knots, 0.0)]
    integral = np.interp(ys, knots, cum)
    v_sorted = math.copysign(1.0, P) * integral - P * ys
    v = np.empty_like(v_sorted)
    v[order] = v_sorted
    Lmax = float(np.max(np.abs(yg)))
    outer = np.abs(yg) >= 0.5 * Lmax
    ratio = float(np.max(np.abs(v[outer]) / (1.0 + np.abs(yg[outer]))))
    return CorrectorProfile(yg, v, ratio, float(np.ptp(yg)), float(P), float(Hb))


# ------------------------------------------------------------------ tables

@dataclass(frozen=True)
class EffectiveVelocityTable:
    """``phi`` tabulated on energies outside the critical band.

    Running values are interpolated monotonically in ``log(E - u_max)``;
    energies below ``u_max`` map to 0.
    """

    pot_u_max: float
    energies: np.ndarray
    phi_values: np.ndarray
    band: float

    @classmethod
    def build(cls, pot: Potential, e_min: float, e_max: float, n: int = 200,
              band: float | None = None) -> "EffectiveVelocityTable":
        band = pot.critical_band if band is None else band
        lo = max(e_min, pot.u_max + band * 1.0000001)
        if pot.kind == CONSTANT:
            lo = max(e_min, pot.u_max + max(band, 1e-12))
        Es = pot.u_max + np.geomspace(lo - pot.u_max, e_max - pot.u_max, n)
        vals = np.array([phi(pot, E, band) for E in Es])
        return cls(pot.u_max, Es, vals, band)

    def __call__(self, E):
        E = np.asarray(E, dtype=float)
        out = np.zeros(E.shape)
        run = E > self.pot_u_max + self.band
        if np.any(run):
            x = np.log(self.energies - self.pot_u_max)
            interp = PchipInterpolator(x, self.phi_values, extrapolate=True)
            out[run] = interp(np.log(E[run] - self.pot_u_max))
        near = np.abs(E - self.pot_u_max) <= self.band
        out[near] = np.nan
        return out

    def to_rows(self):
        return [(float(e), float(v)) for e, v in zip(self.energies, self.phi_values)]


def consistency_triangle(pot: Potential, E: float) -> tuple[float, float, float]:
    """``(phi(E), 1 / t0(E), Hbar'(P))`` with ``Hbar(P) = E``; all three should agree."""
    hh = homogenized(pot)
    P = theta(pot, 2.0 * (E - pot.u_max))
    return phi(pot, E), 1.0 / period_1d(pot, E), hh.derivative(P)
