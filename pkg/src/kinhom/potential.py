"""Stationary potentials u(y) built from finite trigonometric sums.

All potentials are shifted so that ``min u = 0``. One-dimensional kinds are
evaluated elementwise on arrays of any shape; the separable kind expects a
trailing axis holding the coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DimensionError, NoRunningRegion
from .quadrature import singular_quadrature

CONSTANT = "constant"
PERIODIC = "periodic"
RANDOM_PHASE = "random_phase"
SEPARABLE = "separable"
HARMONIC_WELL = "harmonic_well"
KINDS = (CONSTANT, PERIODIC, RANDOM_PHASE, SEPARABLE, HARMONIC_WELL)

# width of the critical energy band, relative to u_max
BAND_FRACTION = 1e-3

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class Potential:
    """Immutable potential description.

    ``terms`` holds ``(amplitude, wavenumber, phase)`` triples of
    ``offset + sum a cos(2 pi k y + phase)``. ``origin`` translates the
    harmonic well (trigonometric kinds absorb translations into phases).
    """

    kind: str
    terms: tuple[tuple[float, float, float], ...] = ()
    offset: float = 0.0
    components: tuple["Potential", ...] = ()
    seed: int | None = None
    u_max: float = 0.0
    argmax: float = 0.0
    well_radius: float = 0.0
    origin: float = 0.0
    periodic: bool = True
    band_fraction: float = BAND_FRACTION
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.components) if self.kind == SEPARABLE else 1

    @property
    def critical_band(self) -> float:
        return self.band_fraction * self.u_max

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([t[0] for t in self.terms], dtype=float)

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.array([t[1] for t in self.terms], dtype=float)

    @property
    def phases(self) -> np.ndarray:
        return np.array([t[2] for t in self.terms], dtype=float)

    def axis(self, i: int) -> "Potential":
        if self.kind == SEPARABLE:
            return self.components[i]
        if i != 0:
            raise DimensionError(f"axis {i} requested from a 1-D potential")
        return self

    def axes(self) -> tuple["Potential", ...]:
        return self.components if self.kind == SEPARABLE else (self,)

    def __call__(self, y):
        return eval_u(self, y)


# ---------------------------------------------------------------- evaluation

def _trig_u(terms, offset, y):
    y = np.asarray(y, dtype=float)
    out = np.full(y.shape, offset, dtype=float)
    for a, k, ph in terms:
        out += a * np.cos(TWO_PI * k * y + ph)
    return out


def _trig_du(terms, y):
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape, dtype=float)
    for a, k, ph in terms:
        out -= a * TWO_PI * k * np.sin(TWO_PI * k * y + ph)
    return out


def _well_parts(radius: float):
    d = 0.5 - radius
    c = -1.0 / (d * d)
    return d, c


def _well_u(p: Potential, y):
    w = np.asarray(y, dtype=float) - p.origin
    w = w - np.round(w)
    a = np.abs(w)
    r = p.well_radius
    _, c = _well_parts(r)
    s = a - r
    outer = r * r + 2.0 * r * s + s * s + c * s ** 3 / 3.0
    return np.where(a < r, a * a, outer)


def _well_du(p: Potential, y):
    w = np.asarray(y, dtype=float) - p.origin
    w = w - np.round(w)
    a = np.abs(w)
    r = p.well_radius
    _, c = _well_parts(r)
    s = a - r
    outer = 2.0 * r + 2.0 * s + c * s * s
    return np.sign(w) * np.where(a < r, 2.0 * a, outer)


def _check_nd(p: Potential, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 0 or y.shape[-1] != p.dim:
        raise DimensionError(
            f"expected trailing axis of length {p.dim}, got shape {y.shape}"
        )
    return y


def eval_u(p: Potential, y):
    """Value ``u(y)``; scalar in, scalar out."""
    if p.kind == SEPARABLE:
        y = _check_nd(p, y)
        return sum(eval_u(c, y[..., i]) for i, c in enumerate(p.components))
    if p.kind == HARMONIC_WELL:
        out = _well_u(p, y)
    else:
        out = _trig_u(p.terms, p.offset, y)
    # rounding can push the minimum a hair below zero
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def grad_u(p: Potential, y):
    """Exact derivative of :func:`eval_u` (componentwise for separable potentials)."""
    if p.kind == SEPARABLE:
        y = _check_nd(p, y)
        return np.stack([grad_u(c, y[..., i]) for i, c in enumerate(p.components)], axis=-1)
    if p.kind == HARMONIC_WELL:
        out = _well_du(p, y)
    else:
        out = _trig_du(p.terms, y)
    return float(out) if np.ndim(out) == 0 else out


def curvature_bound(p: Potential) -> float:
    """Upper bound on ``max |u''|`` (maximum over axes for separable potentials)."""
    if p.kind == SEPARABLE:
        return max(curvature_bound(c) for c in p.components)
    if p.kind == HARMONIC_WELL:
        d, _ = _well_parts(p.well_radius)
        return max(2.0, 2.0 / d - 2.0)
    return float(sum(abs(a) * (TWO_PI * k) ** 2 for a, k, _ in p.terms))


def lipschitz_bound(p: Potential) -> float:
    """Upper bound on ``max |u'|`` for a 1-D potential."""
    if p.kind == SEPARABLE:
        return max(lipschitz_bound(c) for c in p.components)
    if p.kind == HARMONIC_WELL:
        d, c = _well_parts(p.well_radius)
        # g' peaks where g'' = 0, i.e. s = d^2
        s = min(d * d, d)
        return 2.0 * p.well_radius + 2.0 * s + c * s * s
    return float(sum(abs(a) * TWO_PI * k for a, k, _ in p.terms))


def third_derivative_bound(p: Potential) -> float:
    if p.kind == SEPARABLE:
        return max(third_derivative_bound(c) for c in p.components)
    if p.kind == HARMONIC_WELL:
        d, _ = _well_parts(p.well_radius)
        return 2.0 / (d * d)
    return float(sum(abs(a) * (TWO_PI * k) ** 3 for a, k, _ in p.terms))


def stability_step(p: Potential) -> float:
    """Largest leapfrog step that is linearly stable for this potential."""
    m = curvature_bound(p)
    return math.inf if m == 0.0 else 2.0 / math.sqrt(m)


# ------------------------------------------------------------ construction

def _extremum(terms, sign: float, n: int | None = None) -> tuple[float, float]:
    """Global ``sign``-extremum of a 1-periodic trig sum (no offset): (value, location)."""
    kmax = max(k for _, k, _ in terms)
    n = n or max(4096, int(256 * kmax))
    ys = np.arange(n) / n
    vals = sign * _trig_u(terms, 0.0, ys)
    order = np.argsort(vals)[::-1][:8]
    dx = 1.0 / n
    best_v, best_y = -math.inf, 0.0
    for i in order:
        res = minimize_scalar(lambda t: -sign * float(_trig_u(terms, 0.0, t)),
                              bounds=(ys[i] - dx, ys[i] + dx), method="bounded",
                              options={"xatol": 1e-14})
        v = -float(res.fun)
        if v > best_v:
            best_v, best_y = v, float(res.x) % 1.0
    return sign * best_v, best_y


def _single_term_extrema(a: float, k: float, ph: float) -> tuple[float, float, float]:
    """Exact (min, max, argmax) for ``a cos(2 pi k y + ph)``."""
    target = 0.0 if a > 0 else math.pi
    y_max = ((target - ph) / (TWO_PI * k)) % (1.0 / k)
    return -abs(a), abs(a), y_max


def _trig_potential(kind: str, terms, seed=None, periodic=True, meta=None) -> Potential:
    terms = tuple((float(a), float(k), float(ph) % TWO_PI) for a, k, ph in terms if a != 0.0)
    if not terms:
        return Potential(kind=CONSTANT, offset=0.0, u_max=0.0, seed=seed, meta=meta or {})
    if not periodic:
        # rationally independent frequencies: the orbit of phases is dense in the torus
        lo = -sum(abs(a) for a, _, _ in terms)
        hi = -lo
        arg = 0.0
    elif len(terms) == 1:
        lo, hi, arg = _single_term_extrema(*terms[0])
    else:
        lo, _ = _extremum(terms, -1.0)
        hi, arg = _extremum(terms, 1.0)
    return Potential(kind=kind, terms=terms, offset=-lo, u_max=hi - lo, argmax=arg,
                     seed=seed, periodic=periodic, meta=meta or {})


def constant(value: float = 0.0) -> Potential:
    value = float(value)
    return Potential(kind=CONSTANT, offset=value, u_max=value)


def trig_sum(terms: Sequence[tuple[float, float, float]]) -> Potential:
    """1-periodic potential ``sum a cos(2 pi k y + phase)`` shifted to ``min u = 0``."""
    for a, k, _ in terms:
        if k < 1 or float(k) != int(k):
            raise ValueError(f"periodic wavenumbers must be integers >= 1, got {k}")
    return _trig_potential(PERIODIC, terms)


def cos_well() -> Potential:
    """``u(y) = (1 - cos 2 pi y) / 2``: minimum 0 at y = 0, maximum 1 at y = 1/2."""
    return trig_sum([(0.5, 1, math.pi)])


def harmonic_well(radius: float = 0.25) -> Potential:
    """Periodic well equal to ``y^2`` for ``|y| < radius``.

    Outside the quadratic cap ``u`` follows a cubic in ``s = |y| - radius``
    chosen so that ``u`` is C^2 on the circle and peaks at ``y = 1/2``.
    Orbits inside the cap have period ``pi sqrt(2)`` at every energy below
    ``radius^2``.
    """
    if not 0.0 < radius < 0.5:
        raise ValueError("well radius must lie in (0, 1/2)")
    d, _ = _well_parts(radius)
    u_max = 0.25 - d / 3.0
    return Potential(kind=HARMONIC_WELL, u_max=u_max, argmax=0.5, well_radius=float(radius))


def separable(components: Sequence[Potential]) -> Potential:
    comps = tuple(components)
    if not comps:
        raise DimensionError("separable potential needs at least one component")
    for c in comps:
        if c.kind == SEPARABLE:
            raise ValueError("components of a separable potential must be 1-D")
    return Potential(kind=SEPARABLE, components=comps, u_max=sum(c.u_max for c in comps))


def shift(p: Potential, z) -> Potential:
    """Potential ``y -> u(y + z)``; for random-phase fields this is the action of the shift group."""
    if p.kind == SEPARABLE:
        z = np.broadcast_to(np.asarray(z, dtype=float), (p.dim,))
        return replace(p, components=tuple(shift(c, zi) for c, zi in zip(p.components, z)))
    if p.kind == CONSTANT:
        return p
    if p.kind == HARMONIC_WELL:
        return replace(p, origin=(p.origin - z) % 1.0, argmax=(p.argmax - z) % 1.0)
    z = float(z)
    terms = tuple((a, k, (ph + TWO_PI * k * z) % TWO_PI) for a, k, ph in p.terms)
    arg = (p.argmax - z) % 1.0 if p.periodic else p.argmax
    return replace(p, terms=terms, argmax=arg)


def random_translate(p: Potential, seed: int) -> Potential:
    """Uniformly random translate of a periodic potential (its stationary ensemble)."""
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, size=p.dim)
    return replace(shift(p, z if p.dim > 1 else z[0]), seed=seed)


def _rationally_independent(ks: Sequence[float], max_den: int = 64) -> bool:
    from fractions import Fraction

    for i in range(len(ks)):
        for j in range(i + 1, len(ks)):
            r = ks[i] / ks[j]
            if abs(float(Fraction(r).limit_denominator(max_den)) - r) < 1e-12:
                return False
    return True


@dataclass(frozen=True)
class RandomPhaseModel:
    """Random field ``sum a_j cos(2 pi k_j y + phi_j)`` with i.i.d. uniform phases.

    Integer wavenumbers give a periodic field (ergodic only under the random
    translate); rationally independent wavenumbers give a quasi-periodic
    field whose shifts are ergodic.
    """

    amplitudes: tuple[float, ...] = (0.3, 0.2)
    wavenumbers: tuple[float, ...] = (1.0, math.sqrt(2.0))

    def __post_init__(self):
        if len(self.amplitudes) != len(self.wavenumbers) or not self.amplitudes:
            raise ValueError("amplitudes and wavenumbers must be non-empty and of equal length")
        if any(k <= 0 for k in self.wavenumbers):
            raise ValueError("wavenumbers must be positive")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("amplitudes must be finite")

    @property
    def is_periodic(self) -> bool:
        return all(float(k).is_integer() for k in self.wavenumbers)

    @property
    def u_max(self) -> float:
        """Supremum shared by all realizations (quasi-periodic case)."""
        return 2.0 * float(np.sum(np.abs(self.amplitudes)))

    def realize(self, seed: int) -> Potential:
        return realize(self, seed)


def realize(model: RandomPhaseModel, seed: int) -> Potential:
    """Deterministic realization; phases i.i.d. uniform on ``[0, 2 pi)``."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, TWO_PI, size=len(model.amplitudes))
    periodic = model.is_periodic
    if not periodic and not _rationally_independent(model.wavenumbers):
        raise ValueError("non-integer wavenumbers must be rationally independent")
    terms = list(zip(model.amplitudes, model.wavenumbers, phases))
    p = _trig_potential(RANDOM_PHASE, terms, seed=int(seed), periodic=periodic)
    return p


# ---------------------------------------------------------------- supremum

def supremum(p: Potential) -> float:
    """``sup u``: exact for single terms, the harmonic well and quasi-periodic fields,
    grid search polished by a bounded scalar optimizer otherwise."""
    return p.u_max


def grid_supremum(p: Potential, n: int, lo: float = 0.0, hi: float = 1.0) -> tuple[float, float]:
    """Max of ``u`` on an ``n``-point grid of ``[lo, hi]`` and a guaranteed upper bound.

    The bound adds ``L * dx / 2`` where ``L`` bounds ``|u'|``.
    """
    ys = np.linspace(lo, hi, n)
    val = float(np.max(eval_u(p, ys)))
    dx = (hi - lo) / (n - 1)
    return val, val + 0.5 * lipschitz_bound(p) * dx


# ------------------------------------------------------------ averaging

@dataclass(frozen=True)
class WeightFunctional:
    """Integrand ``w(u, y)`` for averages ``<w(u(.), .)>``.

    ``singular`` marks integrands that blow up like ``(E - u)^(-1/2)`` at
    ``u = E``; those averages are taken over ``{u < E}`` only.
    """

    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray]
    singular: bool = False

    @classmethod
    def of_u(cls, fn: Callable[[np.ndarray], np.ndarray], singular: bool = False) -> "WeightFunctional":
        return cls(lambda u, y: fn(u), singular)

    def __add__(self, other: "WeightFunctional") -> "WeightFunctional":
        f, g = self.integrand, other.integrand
        return WeightFunctional(lambda u, y: f(u, y) + g(u, y), self.singular or other.singular)


def inverse_sqrt_weight(E: float, scale: float = 1.0) -> WeightFunctional:
    """``w(u) = 1 / sqrt(scale * (E - u))``."""
    return WeightFunctional.of_u(lambda u: 1.0 / np.sqrt(scale * np.maximum(E - u, 1e-300)), True)


def _cell_breakpoints(p: Potential) -> np.ndarray:
    """Sorted points in one period starting at the global maximum of ``u``."""
    start = p.argmax
    pts = [start, start + 1.0]
    if p.kind == HARMONIC_WELL:
        for c in (p.origin - p.well_radius, p.origin, p.origin + p.well_radius):
            pts.append(start + (c - start) % 1.0)
    return np.unique(np.array(pts))


def wells(p: Potential, E: float, n: int | None = None) -> list[tuple[float, float]]:
    """Connected components ``(z-, z+)`` of ``{u < E}`` inside the cell starting at ``argmax``.

    Returns an empty list if ``E <= min u``; a single full cell if ``E > u_max``.
    """
    if p.kind == SEPARABLE or not p.periodic:
        raise DimensionError("wells are defined for 1-D periodic potentials")
    if E > p.u_max:
        return [(p.argmax, p.argmax + 1.0)]
    if E <= 0.0:
        return []
    if p.kind == CONSTANT:
        return []
    kmax = max((k for _, k, _ in p.terms), default=1.0)
    n = n or max(2048, int(128 * kmax))
    ys = p.argmax + np.arange(n + 1) / n
    f = eval_u(p, ys) - E
    f[0] = f[-1] = max(f[0], 0.0) + 1e-300
    g = lambda t: float(eval_u(p, t)) - E
    out = []
    lo = None
    for i in range(n):
        if f[i] >= 0.0 > f[i + 1]:
            lo = brentq(g, ys[i], ys[i + 1], xtol=1e-15)
        elif f[i] < 0.0 <= f[i + 1] and lo is not None:
            out.append((lo, brentq(g, ys[i], ys[i + 1], xtol=1e-15)))
            lo = None
    return out


def well_containing(p: Potential, E: float, anchor: float) -> tuple[float, float]:
    """Turning points ``z- < anchor < z+`` with ``u(z+-) = E`` bounding the anchor's well."""
    from .errors import WellNotFound

    if p.kind == SEPARABLE:
        raise DimensionError("wells are defined for 1-D potentials")
    anchor = float(anchor)
    if eval_u(p, anchor) >= E:
        raise WellNotFound(f"u({anchor}) >= E={E}: anchor is not inside a well")
    kmax = max((k for _, k, _ in p.terms), default=1.0)
    dx = 1.0 / (64.0 * kmax)
    g = lambda t: float(eval_u(p, t)) - E
    ends = []
    for direction in (-1.0, 1.0):
        a = anchor
        for _ in range(int(2.0 / dx) + 2):
            b = a + direction * dx
            if g(b) >= 0.0:
                lo, hi = (b, a) if direction < 0 else (a, b)
                ends.append(brentq(g, lo, hi, xtol=1e-15))
                break
            a = b
        else:
            raise WellNotFound(f"no turning point within two periods of {anchor} at E={E}")
    return ends[0], ends[1]


def drop_from(p: Potential, z: float, delta) -> np.ndarray:
    """``u(z) - u(z + delta)`` computed without cancellation for small ``delta``."""
    delta = np.asarray(delta, dtype=float)
    if p.kind == HARMONIC_WELL:
        a0 = z - p.origin
        a0 = a0 - round(a0)
        w1 = a0 + delta
        r = p.well_radius
        _, c = _well_parts(r)
        direct = eval_u(p, z) - eval_u(p, z + delta)
        same_side = np.sign(w1) == np.sign(a0)
        x0, x1 = abs(a0), np.abs(w1)
        # x0^2 - x1^2 = (x0 - x1)(x0 + x1) with x0 - x1 = -sign(a0) delta
        dx = -np.sign(a0) * delta
        cap = dx * (x0 + x1)
        s0, s1 = x0 - r, x1 - r
        outer = dx * (2.0 * r + s0 + s1 + c * (s0 * s0 + s0 * s1 + s1 * s1) / 3.0)
        both_cap = same_side & (x0 < r) & (x1 < r)
        both_out = same_side & (x0 >= r) & (x1 >= r) & (x1 <= 0.5)
        return np.where(both_cap, cap, np.where(both_out, outer, direct))
    out = np.zeros(delta.shape)
    for a, k, ph in p.terms:
        th = TWO_PI * k * z + ph
        out += 2.0 * a * np.sin(th + math.pi * k * delta) * np.sin(math.pi * k * delta)
    return out


def well_rule(p: Potential, zm: float, zp: float, panels: int
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes ``s``, gaps ``E - u(s)`` and weights for integrals over a well ``[zm, zp]``.

    Uses ``s = zm + (zp - zm) sin^2 t``; each gap is measured from the
    nearer turning point with :func:`drop_from`, so it stays accurate where
    ``E - u`` is tiny. ``sum w g(s, gap)`` integrates ``g`` over the well.
    """
    from .quadrature import composite_nodes

    width = zp - zm
    t, wt = composite_nodes(0.0, 0.5 * math.pi, panels)
    left = t < 0.25 * math.pi
    dl = width * np.sin(t) ** 2
    dr = width * np.cos(t) ** 2
    s = np.where(left, zm + dl, zp - dr)
    gap = np.where(left, drop_from(p, zm, dl), drop_from(p, zp, -dr))
    return s, np.maximum(gap, 0.0), wt * width * np.sin(2.0 * t)


def well_integral(p: Potential, zm: float, zp: float, g: Callable, rtol: float = 1e-11,
                  max_panels: int = 2 ** 14) -> float:
    """``int_zm^zp g(s, E - u(s)) ds`` with panel doubling (see :func:`well_rule`)."""
    from .errors import QuadratureError

    panels, prev = 4, None
    while panels <= max_panels:
        s, gap, w = well_rule(p, zm, zp, panels)
        vals = g(s, gap)
        val = float(np.dot(w, vals))
        scale = float(np.dot(w, np.abs(vals)))
        if prev is not None and abs(val - prev) <= max(1e-15, rtol * scale):
            return val
        prev = val
        panels *= 2
    raise QuadratureError(f"well integral on [{zm}, {zp}] did not stabilise")


def cell_average(p: Potential, w: WeightFunctional, E: float | None = None) -> float:
    """``<w>`` over one period (periodic kinds) or over the phase torus (quasi-periodic).

    Singular weights with ``E <= u_max`` are integrated over ``{u < E}``
    well by well with both turning points flagged.
    """
    if p.kind == SEPARABLE:
        raise DimensionError("cell_average acts on 1-D potentials")
    singular = w.singular and E is not None
    if not p.periodic:
        if singular and E <= p.u_max:
            raise NoRunningRegion(f"E={E} does not exceed u_max={p.u_max} of a quasi-periodic field")
        return _torus_average(p, w)

    def g(y):
        return w.integrand(eval_u(p, y), y)

    if p.kind == CONSTANT:
        if singular and E <= p.u_max:
            raise NoRunningRegion(f"E={E} <= u={p.u_max} everywhere")
        return float(np.mean(g(np.linspace(0.0, 1.0, 5)[:-1])))
    if singular and E <= p.u_max:
        ws = wells(p, E)
        if not ws:
            raise NoRunningRegion(f"no admissible region: E={E} <= min u")
        # w depends on u only through E - u near the turning points
        return float(sum(well_integral(p, a, b, lambda s, d: w.integrand(E - d, s)) for a, b in ws))
    pts = _cell_breakpoints(p)
    return float(sum(singular_quadrature(g, a, b) for a, b in zip(pts[:-1], pts[1:])))


def _torus_average(p: Potential, w: WeightFunctional, max_n: int = 1024) -> float:
    """Expectation of ``w(u(0, omega))`` over uniform phases by the tensor trapezoid rule."""
    m = len(p.terms)
    if m > 4:
        raise NotImplementedError("torus quadrature limited to four random phases; use spatial_average")
    amps = p.amplitudes
    n = 16
    prev = None
    while n <= max_n and n ** m <= 2 ** 24:
        grids = np.meshgrid(*([np.arange(n) * TWO_PI / n] * m), indexing="ij")
        u = p.offset + sum(a * np.cos(g) for a, g in zip(amps, grids))
        val = float(np.mean(w.integrand(u, np.zeros_like(u))))
        if prev is not None and abs(val - prev) <= 1e-13 * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    return prev


def _bump(s):
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def spatial_average(p: Potential, w: WeightFunctional, E: float | None = None,
                    L: float = 1e3, start: float = 0.0, per_unit: int = 64) -> float:
    """Smoothly windowed average of ``w(u(y), y)`` over ``[start, start + L]``.

    The bump window makes the Birkhoff average converge faster than any
    power of ``1/L`` for quasi-periodic fields.
    """
    if w.singular and E is not None and E <= p.u_max:
        raise NoRunningRegion(f"E={E} <= u_max={p.u_max}")
    n = max(64, int(per_unit * L * max(1.0, float(np.max(p.wavenumbers, initial=1.0)))))
    s = (np.arange(n) + 0.5) / n
    wt = _bump(s)
    acc = 0.0
    chunk = 1 << 20
    for i in range(0, n, chunk):
        y = start + L * s[i:i + chunk]
        acc += float(np.dot(wt[i:i + chunk], w.integrand(eval_u(p, y), y)))
    return acc / float(np.sum(wt))


def ensemble_average(model: RandomPhaseModel, w: WeightFunctional, seeds: Sequence[int],
                     E: float | None = None) -> tuple[float, float]:
    """Mean and standard error of ``w(u(0, omega))`` over realizations."""
    vals = np.array([float(w.integrand(np.asarray(eval_u(realize(model, s), 0.0)), np.zeros(())))
                     for s in seeds])
    if w.singular and E is not None and np.any(E <= model.u_max):
        raise NoRunningRegion(f"E={E} <= u_max={model.u_max}")
    err = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
    return float(np.mean(vals)), err
