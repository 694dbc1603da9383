"""Two-scale profiles for the oscillatory transport equation and their residuals.

For separable initial data ``f0(x, y, xi) = a(x) b(y, xi)`` the exact
solution is read off the characteristics,

    f_eps(t, x, xi) = a(eps Y) b(Y, Xi),   (Y, Xi) = flow of (x/eps, xi) for time t/eps,

and is compared with the two-scale profile

    f(t, x, y, xi)      = a(x - t xsharp(y, xi)) P(b)(y, xi)
    g(t, x; tau, y, xi) = a(x - t xsharp(y, xi)) (b - P(b))(flow of (y, xi) for time tau).

Norms over ``(x, xi)`` boxes are estimated with scrambled Sobol points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .closedform import EffectiveVelocityTable
from .dynamics import flow, flow_records
from .ergodic import ProjectionTable, defect_observable, projected_observable
from .errors import ProjectionUnavailable
from .observables import Observable
from .potential import CONSTANT, Potential, eval_u

FAST_STEP = 2e-3


@dataclass(frozen=True)
class InitialData:
    """``f0 = a(x) b(y, xi)`` with a bounded Lipschitz macroscopic factor ``a``."""

    a: Callable[[np.ndarray], np.ndarray]
    b: Observable
    a_lipschitz: float
    a_sup: float = 1.0
    label: str = ""

    def __call__(self, p: Potential, x, y, xi):
        return self.a(np.asarray(x, dtype=float)) * self.b.evaluate(p, y, xi)


def bump(center: float = 0.0, radius: float = 1.0, height: float = 1.0) -> tuple[Callable, float]:
    """Smooth compactly supported ``height * exp(1 - 1/(1 - r^2))``, ``r = |x - c| / radius``.

    Returns the function and its Lipschitz constant.
    """
    def a(x):
        r2 = ((np.asarray(x, dtype=float) - center) / radius) ** 2
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    s = np.linspace(0.0, 1.0, 20001)[1:-1]
    f = np.exp(1.0 - 1.0 / (1.0 - s * s))
    lip = float(np.max(f * 2.0 * s / (1.0 - s * s) ** 2)) * abs(height) / radius
    return a, lip


def bump_data(b: Observable, center: float = 0.0, radius: float = 1.0) -> InitialData:
    a, lip = bump(center, radius)
    return InitialData(a, b, lip, 1.0, f"bump(c={center}, r={radius})")


@dataclass
class TwoScaleProfile:
    """``xsharp``, ``P(b)`` and ``b - P(b)`` for a 1-D periodic potential."""

    pot: Potential
    b: Observable
    e_max: float = 50.0
    n_table: int = 160
    xsharp_table: EffectiveVelocityTable = field(init=False)
    b_projected: Observable = field(init=False)
    b_defect: Observable = field(init=False)

    def __post_init__(self):
        p = self.pot
        if p.dim != 1 or not p.periodic:
            raise ProjectionUnavailable("two-scale profiles are tabulated for 1-D periodic potentials")
        self.xsharp_table = EffectiveVelocityTable.build(p, p.u_max, self.e_max, self.n_table)
        table = None if self.b.invariant else ProjectionTable(p, self.b, self.e_max, self.n_table)
        self.b_projected = projected_observable(self.b, table)
        self.b_defect = defect_observable(self.b, table)

    def xsharp(self, y, xi) -> np.ndarray:
        """``sgn(xi) phi(H)``; NaN inside the critical band."""
        y = np.asarray(y, dtype=float)
        xi = np.asarray(xi, dtype=float)
        E = 0.5 * xi * xi + eval_u(self.pot, y)
        if self.pot.kind == CONSTANT:
            return xi.copy()
        return np.where(xi >= 0, 1.0, -1.0) * self.xsharp_table(E)


def eval_f_eps(p: Potential, f0: InitialData, eps: float, t: float, x, xi, h: float = FAST_STEP):
    """Exact solution ``a(eps Y) b(Y, Xi)`` along the characteristic through ``(x/eps, xi)``."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    Y, X = flow(p, x[..., None] / eps, xi[..., None], t / eps, h)
    out = f0.a(eps * Y[..., 0]) * f0.b.evaluate(p, Y, X)
    if t == 0:
        out = f0.a(x) * f0.b.evaluate(p, Y, X)
    return out


def eval_f_profile(profile: TwoScaleProfile, f0: InitialData, t: float, x, y, xi):
    xs = profile.xsharp(y, xi)
    x = np.asarray(x, dtype=float)
    return f0.a(x - t * xs) * profile.b_projected.evaluate(profile.pot, y, xi)


def eval_g_profile(profile: TwoScaleProfile, f0: InitialData, t: float, x, tau: float, y, xi,
                   h: float = FAST_STEP):
    p = profile.pot
    y = np.asarray(y, dtype=float)
    xi = np.asarray(xi, dtype=float)
    xs = profile.xsharp(y, xi)
    Y, X = flow(p, y[..., None], xi[..., None], tau, h)
    return f0.a(np.asarray(x, dtype=float) - t * xs) * profile.b_defect.evaluate(p, Y, X)


@dataclass(frozen=True)
class Box:
    """Sampling region ``[x_lo, x_hi] x [xi_lo, xi_hi]``."""

    x_lo: float
    x_hi: float
    xi_lo: float
    xi_hi: float

    @property
    def volume(self) -> float:
        return (self.x_hi - self.x_lo) * (self.xi_hi - self.xi_lo)

    def sample(self, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        m = max(1, int(math.ceil(math.log2(max(n, 2)))))
        pts = qmc.Sobol(d=2, scramble=True, seed=seed).random_base2(m)[:n]
        x = self.x_lo + (self.x_hi - self.x_lo) * pts[:, 0]
        xi = self.xi_lo + (self.xi_hi - self.xi_lo) * pts[:, 1]
        return x, xi


@dataclass(frozen=True)
class SampledNorm:
    value: float
    stderr: float
    n_used: int
    n_excluded: int


def _norm(vals: np.ndarray, n_total: int) -> SampledNorm:
    ok = np.isfinite(vals)
    v = np.abs(vals[ok])
    err = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return SampledNorm(float(np.mean(v)) if v.size else math.nan, err, int(v.size), int(n_total - v.size))


def residual_values(profile: TwoScaleProfile, f0: InitialData, eps: float, t: float,
                    x: np.ndarray, xi: np.ndarray, h: float = FAST_STEP) -> np.ndarray:
    """``r_eps = f_eps - f(t, x, x/eps, xi) - g(t, x; t/eps, x/eps, xi)`` at sample points.

    Samples with energy inside the critical band give NaN.
    """
    p = profile.pot
    y0 = x / eps
    if t == 0:
        f_eps = f0.a(x) * f0.b.evaluate(p, y0, xi)
        Y, X = y0[..., None], xi[..., None]
    else:
        Y, X = flow(p, y0[..., None], xi[..., None], t / eps, h)
        f_eps = f0.a(eps * Y[..., 0]) * f0.b.evaluate(p, Y, X)
    xs = profile.xsharp(y0, xi)
    a_drift = f0.a(x - t * xs)
    f_prof = a_drift * profile.b_projected.evaluate(p, y0, xi)
    g_prof = a_drift * profile.b_defect.evaluate(p, Y, X)
    return f_eps - f_prof - g_prof


def residual_norm(p: Potential, f0: InitialData, eps: float, t: float, region: Box,
                  n_samples: int = 1024, seed: int = 0, profile: TwoScaleProfile | None = None,
                  h: float = FAST_STEP) -> SampledNorm:
    """Mean of ``|r_eps|`` over Sobol samples of ``region``."""
    profile = profile or TwoScaleProfile(p, f0.b)
    x, xi = region.sample(n_samples, seed)
    return _norm(residual_values(profile, f0, eps, t, x, xi, h), x.size)


def weak_time_average_g(p: Potential, f0: InitialData, eps: float, T: float, region: Box,
                        n_samples: int = 1024, seed: int = 0,
                        profile: TwoScaleProfile | None = None, h: float = FAST_STEP
                        ) -> SampledNorm:
    """Mean over ``region`` of ``|int_0^T g(t, x; t/eps, x/eps, xi) dt|``.

    The time integral is a composite trapezoid rule with spacing at most ``eps/20``.
    """
    profile = profile or TwoScaleProfile(p, f0.b)
    x, xi = region.sample(n_samples, seed)
    tau = T / eps
    stride = max(1, int(math.floor((1.0 / 20.0) / h)))
    times, Y, X = flow_records(p, (x / eps)[:, None], xi[:, None], tau, h, stride)
    # append the final time if the stride skipped it
    tt = eps * times
    if abs(tt[-1] - T) > 1e-12 * max(1.0, T):
        Yf, Xf = flow(p, (x / eps)[:, None], xi[:, None], tau, h)
        Y = np.concatenate([Y, Yf[:, None, :]], axis=1)
        X = np.concatenate([X, Xf[:, None, :]], axis=1)
        tt = np.append(tt, T)
    xs = profile.xsharp(x / eps, xi)
    a_vals = f0.a(x[:, None] - tt[None, :] * xs[:, None])
    bd = profile.b_defect.evaluate(p, Y, X)
    integrand = a_vals * bd
    dt = np.diff(tt)
    integral = np.sum(0.5 * (integrand[:, 1:] + integrand[:, :-1]) * dt[None, :], axis=1)
    return _norm(integral, x.size)


def drift_defect(p: Potential, eps: float, t: float, x, xi, profile: TwoScaleProfile,
                 h: float = FAST_STEP) -> np.ndarray:
    """``eps Y(t/eps, x/eps, xi) - (x - t xsharp(x/eps, xi))``."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    Y, _ = flow(p, x[..., None] / eps, xi[..., None], t / eps, h)
    return eps * Y[..., 0] - (x - t * profile.xsharp(x / eps, xi))


@dataclass(frozen=True)
class PropagationCheck:
    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 3.0 * (self.lhs_stderr + self.rhs_stderr)


def propagation_check(p: Potential, f0: InitialData, eps: float, t: float, R: float, Rp: float,
                      n_samples: int = 4096, seed: int = 0, h: float = FAST_STEP) -> PropagationCheck:
    """Mass of ``|f_eps(t)|`` on ``|x| <= R, |xi| <= R'`` against the initial mass on the
    backward domain of dependence ``|x| <= R + t sqrt(R'^2 + 2 u_max)``, ``|xi| <= sqrt(R'^2 + 2 u_max)``.
    """
    inner = Box(-R, R, -Rp, Rp)
    x, xi = inner.sample(n_samples, seed)
    vals = np.abs(eval_f_eps(p, f0, eps, t, x, xi, h)) * inner.volume
    vmax = math.sqrt(Rp * Rp + 2.0 * p.u_max)
    outer = Box(-(R + t * vmax), R + t * vmax, -vmax, vmax)
    xo, xio = outer.sample(n_samples, seed + 1)
    vals0 = np.abs(f0(p, xo, xo / eps, xio)) * outer.volume
    se = lambda v: float(np.std(v, ddof=1) / math.sqrt(v.size))
    return PropagationCheck(float(np.mean(vals)), float(np.mean(vals0)), se(vals), se(vals0))


@dataclass(frozen=True)
class LadderRow:
    eps: float
    residual: float
    residual_stderr: float
    weak_avg: float
    weak_stderr: float
    n_samples: int
    n_excluded: int
    seed: int


def convergence_ladder(p: Potential, f0: InitialData, eps_list, t: float, region: Box,
                       n_samples: int = 1024, seed: int = 0, T: float | None = None,
                       h: float = FAST_STEP) -> list[LadderRow]:
    """Residual and weak time average of ``g`` along a list of ``eps`` values."""
    profile = TwoScaleProfile(p, f0.b)
    T = t if T is None else T
    rows = []
    for eps in eps_list:
        r = residual_norm(p, f0, eps, t, region, n_samples, seed, profile, h)
        w = weak_time_average_g(p, f0, eps, T, region, n_samples, seed, profile, h)
        rows.append(LadderRow(float(eps), r.value, r.stderr, w.value, w.stderr, n_samples,
                              r.n_excluded, seed))
    return rows
