"""Quadrature with inverse-square-root endpoint singularities.

Every average of the form ``<1/sqrt(E - u)>`` in the library ends up here.
Flagged endpoints are removed with the substitution ``s = a + (b-a) sin^2(t)``
(both ends) or ``s = a + (b-a) t^2`` (one end), after which a composite
Gauss-Legendre rule is refined by panel doubling until it stabilises.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureError

ORDER = 16


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(a: float, b: float, panels: int, order: int = ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = _gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _substitution(a: float, b: float, left: bool, right: bool):
    """Map from the reference variable to ``s`` and its Jacobian, plus the reference interval."""
    width = b - a
    if left and right:
        def s_of(t):
            return a + width * np.sin(t) ** 2

        def jac(t):
            return width * np.sin(2.0 * t)

        return s_of, jac, (0.0, 0.5 * np.pi)
    if left:
        def s_of(t):
            return a + width * t * t

        def jac(t):
            return 2.0 * width * t

        return s_of, jac, (0.0, 1.0)
    if right:
        def s_of(t):
            return b - width * t * t

        def jac(t):
            return 2.0 * width * t

        return s_of, jac, (0.0, 1.0)

    def s_of(t):
        return t

    def jac(t):
        return np.ones_like(t)

    return s_of, jac, (a, b)


def substituted_rule(a: float, b: float, singular_ends: tuple[bool, bool], panels: int,
                     order: int = ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Fixed rule ``(s, w)`` on ``[a, b]`` with flagged ends desingularised.

    ``sum(w * g(s))`` approximates ``int_a^b g`` for ``g`` with at worst
    inverse-square-root singularities at the flagged ends.
    """
    s_of, jac, (lo, hi) = _substitution(a, b, *singular_ends)
    t, wt = composite_nodes(lo, hi, panels, order)
    return s_of(t), wt * jac(t)


def singular_quadrature(g: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                        singular_ends: tuple[bool, bool] = (False, False), *,
                        rtol: float = 1e-11, atol: float = 1e-15,
                        min_panels: int = 4, max_panels: int = 2 ** 15) -> float:
    """Integrate ``g`` over ``[a, b]`` allowing ``1/sqrt`` blow-up at flagged ends.

    ``g`` must accept a numpy array of abscissae. Raises
    :class:`QuadratureError` if successive panel doublings never agree,
    which is how a non-integrable singularity shows up.
    """
    if b == a:
        return 0.0
    if b < a:
        return -singular_quadrature(g, b, a, singular_ends[::-1], rtol=rtol, atol=atol,
                                    min_panels=min_panels, max_panels=max_panels)
    panels = min_panels
    prev = None
    while panels <= max_panels:
        s, w = substituted_rule(a, b, singular_ends, panels)
        gs = g(s)
        val = float(np.dot(w, gs))
        if not np.isfinite(val):
            raise QuadratureError(f"non-finite integrand on [{a}, {b}]")
        # cancellation: judge relative error against the integral of |g|
        scale = float(np.dot(np.abs(w), np.abs(gs)))
        if prev is not None and abs(val - prev) <= max(atol, rtol * scale):
            return val
        prev = val
        panels *= 2
    raise QuadratureError(
        f"quadrature on [{a}, {b}] did not stabilise with {max_panels} panels "
        f"(last two values {prev!r})"
    )


def piecewise_quadrature(g: Callable[[np.ndarray], np.ndarray], breakpoints: np.ndarray,
                         **kwargs) -> float:
    """Sum of :func:`singular_quadrature` over consecutive breakpoint intervals (no flags)."""
    pts = np.asarray(breakpoints, dtype=float)
    return float(sum(singular_quadrature(g, lo, hi, **kwargs) for lo, hi in zip(pts[:-1], pts[1:])))
