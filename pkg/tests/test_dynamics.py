from __future__ import annotations

import math

import numpy as np
import pytest

from kinhom import dynamics as D
from kinhom import potential as P
from kinhom.errors import CriticalEnergyError, StepSizeError
from oracles import cos_well_du, first_return_time, midpoint_mean, rk_eps_flow, rk_flow, cos_well_u


@pytest.mark.parametrize("y,xi,E", [(0.0, 2.0, 2.0), (0.5, 0.0, 1.0), (0.0, 1.0, 0.5)])
def test_energy(cw, y, xi, E):
    p = P.constant(0.0) if (y, xi) == (0.0, 2.0) else cw
    assert D.energy(p, (y, xi)) == pytest.approx(E)


def test_free_transport_sign_convention():
    tr = D.integrate(P.constant(0.0), (0.0, 1.0), 1.0, 1e-3)
    assert tr.final.y[0] == pytest.approx(-1.0, abs=1e-12)
    assert tr.final.xi[0] == pytest.approx(1.0, abs=1e-12)


def test_equilibrium_stays_put(cw):
    tr = D.integrate(cw, (0.0, 0.0), 5.0, 1e-3)
    assert np.max(np.abs(tr.y)) < 1e-12 and np.max(np.abs(tr.xi)) < 1e-12


def test_trajectory_times_and_energy(cw):
    tr = D.integrate(cw, (0.0, 2.0), 100.0, 1e-3, stride=50)
    assert np.allclose(np.diff(tr.times), 0.05)
    E = tr.energies(cw)
    assert np.max(np.abs(E - 2.0)) <= 1e-6
    assert np.max(np.abs(E - 2.0)) <= D.energy_tolerance(cw, 1e-3, 2.0)


def test_against_runge_kutta(cw):
    y, xi = D.flow(cw, np.array([[0.1]]), np.array([[1.7]]), 7.0, 1e-3)
    ry, rxi = rk_flow(cos_well_du, 0.1, 1.7, 7.0)
    assert y[0, 0] == pytest.approx(ry, abs=1e-5)
    assert xi[0, 0] == pytest.approx(rxi, abs=1e-5)


def test_step_too_large(cw):
    with pytest.raises(StepSizeError):
        D.integrate(cw, (0.0, 2.0), 1.0, 0.5)
    with pytest.raises(StepSizeError):
        D.integrate(cw, (0.0, 2.0), 1e-4, 1e-3)


@pytest.mark.parametrize("xi,tag", [(0.5, D.Regime.TRAPPED), (2.0, D.Regime.RUNNING),
                                    (math.sqrt(2.0), D.Regime.NEAR_CRITICAL)])
def test_classify(cw, xi, tag):
    assert D.classify(cw, (0.0, xi)).tag is tag


def test_period_examples(cw):
    assert D.period_1d(P.constant(0.0), 2.0) == pytest.approx(0.5)
    ref = midpoint_mean(lambda s: 1 / np.sqrt(2 * (2.0 - cos_well_u(s))))
    assert D.period_1d(cw, 2.0) == pytest.approx(ref, abs=1e-8)
    T = D.period_1d(cw, 0.125, y_anchor=0.0)
    assert T == pytest.approx(first_return_time(cos_well_du, 0.0, 0.5, 10.0), abs=1e-4)
    with pytest.raises(CriticalEnergyError):
        D.period_1d(cw, 1.0)


def test_harmonic_period_is_energy_independent(hw):
    for E in (0.001, 0.02, 0.06):
        assert D.period_1d(hw, E) == pytest.approx(math.pi * math.sqrt(2.0), rel=1e-10)


def test_liouville(cw, cw2):
    assert D.liouville_determinant(P.constant(0.0), (0.3, 1.2), 3.0, 1e-3) == pytest.approx(1.0, abs=1e-9)
    assert D.liouville_determinant(cw, (0.0, 2.0), 10.0, 1e-3, 1e-5) == pytest.approx(1.0, abs=1e-4)
    assert D.liouville_determinant(cw2, ((0, 0), (2, 1.5)), 10.0, 1e-3) == pytest.approx(1.0, abs=1e-4)


def test_scaled_flow_examples(cw):
    x, xi = D.scaled_flow(P.constant(0.0), 0.1, 1.0, 0.0, 1.0)
    assert (float(x), float(xi)) == pytest.approx((-1.0, 1.0), abs=1e-12)
    x, xi = D.scaled_flow(cw, 0.1, 0.0, 0.3, 2.0)
    assert (float(x), float(xi)) == pytest.approx((0.3, 2.0))
    x, xi = D.scaled_flow(cw, 0.05, 1.0, 0.0, 2.0, h=1e-4)
    rx, rxi = rk_eps_flow(cos_well_du, 0.05, 0.0, 2.0, 1.0)
    assert float(x) == pytest.approx(rx, abs=1e-5)
    assert float(xi) == pytest.approx(rxi, abs=1e-5)


def test_stream_matches_integrate(cw):
    tr = D.integrate(cw, (0.2, 1.1), 3.0, 1e-3)
    ys = np.concatenate([c[0][(1 if i else 0):] for i, c in enumerate(D.stream(cw, (0.2, 1.1), 3.0, 1e-3, chunk_steps=700))])
    np.testing.assert_allclose(ys, tr.y, atol=1e-14)


def test_negative_time_inverts_flow(cw):
    y, xi = D.flow(cw, np.array([[0.1]]), np.array([[0.9]]), 4.0, 1e-3)
    y2, xi2 = D.flow(cw, y, xi, -4.0, 1e-3)
    assert y2[0, 0] == pytest.approx(0.1, abs=1e-12)
    assert xi2[0, 0] == pytest.approx(0.9, abs=1e-12)


def test_as_point_forms():
    a = D.as_point((0.0, 2.0))
    b = D.as_point(np.array([[0.0, 1.0], [2.0, 3.0]]))
    assert a.dim == 1 and b.dim == 2
    np.testing.assert_array_equal(D.as_point([1.0, 2.0, 3.0, 4.0]).xi, [3.0, 4.0])
