from __future__ import annotations

import math

import numpy as np
import pytest

from kinhom import closedform as cf
from kinhom import observables as O
from kinhom import potential as P
from kinhom.dynamics import period_1d
from kinhom.errors import CriticalEnergyError, EnergyBelowCritical, KinkError, WellNotFound
from oracles import cos_well_u, midpoint_mean


def riemann_phi(E):
    # dense midpoint sum of the cell average; the integrand is smooth for E > u_max
    return math.sqrt(2.0) / midpoint_mean(lambda s: 1.0 / np.sqrt(E - cos_well_u(s)))


def riemann_theta(lam):
    return midpoint_mean(lambda s: np.sqrt(2.0 * (1.0 - cos_well_u(s)) + lam))


# ------------------------------------------------------------------ phi

def test_phi_examples(cw):
    assert cf.phi(P.constant(0.0), 2.0) == pytest.approx(2.0, abs=1e-14)
    assert cf.phi(cw, 0.5) == 0.0
    assert cf.phi(cw, 2.0) == pytest.approx(1.0 / period_1d(cw, 2.0), abs=1e-10)
    assert cf.phi(cw, 2.0) == pytest.approx(riemann_phi(2.0), abs=1e-9)
    with pytest.raises(CriticalEnergyError):
        cf.phi(cw, 1.0)


def test_phi_table_invariants(cw):
    tab = cf.EffectiveVelocityTable.build(cw, 1.0, 20.0, 60)
    v = tab.phi_values
    assert np.all(v > 0) and np.all(np.diff(v) > 0)
    assert np.all(v <= np.sqrt(2.0 * tab.energies))
    E = np.array([0.5, 3.3, 7.77])
    got = tab(E)
    assert got[0] == 0.0
    assert got[1] == pytest.approx(cf.phi(cw, 3.3), rel=1e-5)  # interpolation on 60 nodes
    assert np.isnan(tab(np.array([1.0]))[0])


# ------------------------------------------------------------------ Hbar

def test_hbar_examples(cw):
    assert cf.hbar(3.0, P.constant(0.0)) == pytest.approx(4.5)
    hh = cf.homogenized(cw)
    assert cf.hbar(0.5 * hh.theta0, cw) == 1.0
    v = cf.hbar(3.0, cw)
    # defining equation <sqrt(2(1 - u) + 2(v - 1))> = 3, evaluated independently
    assert riemann_theta(2.0 * (v - 1.0)) == pytest.approx(3.0, abs=1e-8)


def test_theta0_against_riemann(cw):
    assert cf.homogenized(cw).theta0 == pytest.approx(riemann_theta(0.0), abs=1e-9)
    assert cf.homogenized(cw).theta0 == pytest.approx(2.0 * math.sqrt(2.0) / math.pi, abs=1e-9)


def test_hbar_prime_examples(cw):
    assert cf.hbar_prime(3.0, P.constant(0.0)) == pytest.approx(3.0)
    th0 = cf.homogenized(cw).theta0
    assert cf.hbar_prime(0.9 * th0, cw) == 0.0
    assert cf.hbar_prime(3.0, cw) == pytest.approx(cf.phi(cw, cf.hbar(3.0, cw)), abs=1e-8)
    assert cf.hbar_prime(-3.0, cw) == pytest.approx(-cf.hbar_prime(3.0, cw))
    with pytest.raises(KinkError):
        cf.hbar_prime(th0, cw)


def test_flat_piece_is_exact(cw, hw):
    for p in (cw, hw):
        hh = cf.homogenized(p)
        for q in np.linspace(-hh.theta0 + 1e-9, hh.theta0 - 1e-9, 41):
            assert hh.value(q) == p.u_max


def test_hbar_convex_even_and_quadratic_tails(cw):
    hh = cf.homogenized(cw)
    q = np.linspace(hh.theta0 + 0.05, 8.0, 60)
    vals = np.array([hh.value(x) for x in q])
    d = q[1] - q[0]
    assert np.min(np.diff(vals, 2) / d ** 2) >= -1e-6
    assert np.all(np.diff(vals) > 0)
    assert all(hh.value(-x) == hh.value(x) for x in q[::10])
    for p in (10.0, 30.0):
        assert abs(hh.value(p) - 0.5 * p * p) / (0.5 * p * p) <= 2 * cw.u_max / p ** 2


def test_p_of_state(cw):
    assert cf.p_of_state(P.constant(0.0), 0.7, 2.0) == pytest.approx(2.0)
    Pm = cf.p_of_state(cw, 0.0, 2.0)
    assert cf.hbar(Pm, cw) == pytest.approx(2.0, abs=1e-8)
    assert cf.p_of_state(cw, 0.0, -2.0) == -Pm
    with pytest.raises(EnergyBelowCritical):
        cf.p_of_state(cw, 0.0, 0.5)


def test_xsharp_closed(cw):
    assert cf.xsharp_closed(cw, 0.0, 0.5) == 0.0
    assert cf.xsharp_closed(P.constant(0.0), 0.0, -1.5) == pytest.approx(-1.5)
    want = cf.hbar_prime(cf.p_of_state(cw, 0.0, 2.0), cw)
    assert cf.xsharp_closed(cw, 0.0, 2.0) == pytest.approx(want, abs=1e-8)


@pytest.mark.parametrize("E", np.linspace(1.2, 10.0, 20))
def test_consistency_triangle(cw, E):
    a, b, c = cf.consistency_triangle(cw, E)
    assert abs(a - b) <= 1e-6 and abs(a - c) <= 1e-6


# ------------------------------------------------------------ projections

def test_project_running_examples(cw):
    assert cf.project_running(cw, O.Const(1.0), 1.0, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert cf.project_running(cw, O.xi, -1.0, 2.0) == pytest.approx(-cf.phi(cw, 2.0), abs=1e-8)
    # independent Riemann sum of the weighted cell average
    E = 2.0
    w = lambda s: 1.0 / np.sqrt(E - cos_well_u(s))
    ref = midpoint_mean(lambda s: np.sin(2 * np.pi * s) ** 2 * w(s)) / midpoint_mean(w)
    got = cf.project_running(cw, O.sin(2 * math.pi * O.y) ** 2, 1.0, E)
    assert got == pytest.approx(ref, abs=1e-9)
    with pytest.raises(EnergyBelowCritical):
        cf.project_running(cw, O.xi, 1.0, 0.5)


def test_project_trapped_examples(cw):
    assert cf.project_trapped(cw, O.Const(1.0), 0.5) == pytest.approx(1.0, abs=1e-12)
    assert cf.project_trapped(cw, O.xi, 0.5) == 0.0
    with pytest.raises(WellNotFound):
        cf.project_trapped(cw, O.Const(1.0), 2.0)


@pytest.mark.parametrize("F", [O.xi, O.xi ** 3, O.sin(O.xi) * O.y, O.xi * O.H, O.tanh(O.xi)])
@pytest.mark.parametrize("E", [0.05, 0.5, 0.9])
def test_trapped_parity(cw, F, E):
    assert abs(cf.project_trapped(cw, F, E)) <= 1e-14


def test_trapped_harmonic_position_moment(hw):
    # inside the quadratic cap the orbit is y = A sin(w t) with 2 A^2 ... u = y^2
    E = 0.04
    A = math.sqrt(E)
    assert cf.project_trapped(hw, O.y ** 2, E) == pytest.approx(0.5 * A * A, rel=1e-10)


def test_projection_reproduces_xsharp(cw):
    for E in (1.5, 3.0, 8.0):
        for eta in (1.0, -1.0):
            assert cf.project_running(cw, O.xi, eta, E) == pytest.approx(
                math.copysign(cf.phi(cw, E), eta), abs=1e-8)


def test_shell_rule_matches_projection(cw):
    F = O.cos(2 * math.pi * O.y) * O.xi ** 2
    for E, eta in ((2.0, 1.0), (0.5, None)):
        s, v, w = cf.shell_rule(cw, E, eta)
        assert np.sum(w) == pytest.approx(1.0)
        got = float(np.dot(w, F.evaluate(cw, s, v)))
        assert got == pytest.approx(cf.project_state(cw, F, 0.0, math.sqrt(2 * E)), abs=1e-9)


# -------------------------------------------------------------- identities

def test_lagrangian_identity_free():
    lhs, rhs = cf.lagrangian_identity_check(P.constant(0.0), 0.0, 2.0)
    assert lhs == pytest.approx(2.0) and rhs == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("y,xi", [(0.0, 2.0), (0.3, -2.0)])
def test_lagrangian_identity(cw, y, xi):
    lhs, rhs = cf.lagrangian_identity_check(cw, y, xi)
    assert abs(lhs - rhs) <= 1e-6


def test_corrector_free_is_zero():
    prof = cf.corrector_profile(P.constant(0.0), 2.0, np.linspace(-10, 10, 201))
    assert np.max(np.abs(prof.v)) <= 1e-12


def test_corrector_sublinear_cos_well(cw):
    Pm = cf.p_of_state(cw, 0.0, 2.0)
    r50 = cf.corrector_profile(cw, Pm, np.linspace(-50, 50, 6401)).sublinearity_ratio
    r100 = cf.corrector_profile(cw, Pm, np.linspace(-100, 100, 12801)).sublinearity_ratio
    assert r100 < r50


def test_corrector_is_periodic_for_periodic_potential(cw):
    # v(y + 1) = v(y) because the cell average of sqrt(2(Hbar - u)) equals |P|
    Pm = cf.p_of_state(cw, 0.0, 2.5)
    y = np.linspace(-3, 3, 601)
    prof = cf.corrector_profile(cw, Pm, y)
    np.testing.assert_allclose(prof.v[100:], prof.v[:-100], atol=1e-9)
