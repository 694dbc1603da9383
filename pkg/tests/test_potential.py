from __future__ import annotations

import math

import numpy as np
import pytest

from kinhom import potential as P
from kinhom.errors import DimensionError, NoRunningRegion
from oracles import cos_well_u, midpoint_mean


def test_constant_is_zero():
    assert P.eval_u(P.constant(0.0), 0.3) == 0.0


@pytest.mark.parametrize("y,val", [(0.0, 0.0), (0.5, 1.0), (0.25, 0.5)])
def test_cos_well_values(cw, y, val):
    assert float(P.eval_u(cw, y)) == pytest.approx(val, abs=1e-15)


def test_gradients(cw, cw2):
    assert float(P.grad_u(P.constant(2.0), 0.7)) == 0.0
    assert float(P.grad_u(cw, 0.25)) == pytest.approx(math.pi, rel=1e-14)
    np.testing.assert_allclose(P.grad_u(cw2, np.array([0.0, 0.25])), [0.0, math.pi], atol=1e-14)


def test_separable_needs_matching_dimension(cw2):
    with pytest.raises(DimensionError):
        P.eval_u(cw2, np.array([0.1, 0.2, 0.3]))


def test_supremum_exact_cases(cw):
    assert P.supremum(cw) == 1.0
    assert P.supremum(P.constant(0.7)) == 0.7


def test_random_phase_supremum_grid_refinement():
    # periodic random-phase field: extremum search vs a 10x finer grid
    model = P.RandomPhaseModel((0.3, 0.2), (1.0, 2.0))
    p = model.realize(3)
    coarse, bound = P.grid_supremum(p, 20001)
    fine, _ = P.grid_supremum(p, 200001)
    assert abs(fine - P.supremum(p)) <= 1e-6
    assert abs(fine - coarse) <= 1e-6
    assert bound >= fine


def test_quasi_periodic_supremum_is_total_amplitude():
    p = P.realize(P.RandomPhaseModel(), 5)
    assert P.supremum(p) == pytest.approx(1.0)
    assert float(np.min(P.eval_u(p, np.linspace(0, 200, 200001)))) >= 0.0


def test_harmonic_well_shape(hw):
    ys = np.linspace(-0.24, 0.24, 101)
    np.testing.assert_allclose(P.eval_u(hw, ys), ys ** 2, atol=1e-15)
    assert P.supremum(hw) == pytest.approx(1.0 / 6.0)
    assert float(P.eval_u(hw, 0.5)) == pytest.approx(1.0 / 6.0)
    # C^1 across the cap edge
    r = hw.well_radius
    d = 1e-7
    left = (P.eval_u(hw, r) - P.eval_u(hw, r - d)) / d
    right = (P.eval_u(hw, r + d) - P.eval_u(hw, r)) / d
    assert float(left) == pytest.approx(float(right), rel=1e-5)


def test_cell_average_examples(cw):
    E = 2.0
    w = P.inverse_sqrt_weight(E)
    assert P.cell_average(P.constant(0.0), w, E) == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert P.cell_average(cw, P.WeightFunctional.of_u(lambda u: u)) == pytest.approx(0.5, abs=1e-13)
    ref = midpoint_mean(lambda s: 1.0 / np.sqrt(E - cos_well_u(s)))
    assert P.cell_average(cw, w, E) == pytest.approx(ref, abs=1e-8)


def test_cell_average_linear(cw):
    w1 = P.WeightFunctional.of_u(lambda u: np.cos(u))
    w2 = P.inverse_sqrt_weight(3.0)
    total = P.cell_average(cw, w1 + w2, 3.0)
    assert total == pytest.approx(P.cell_average(cw, w1) + P.cell_average(cw, w2, 3.0), rel=1e-11)


def test_no_running_region_for_flat_potential():
    with pytest.raises(NoRunningRegion):
        P.cell_average(P.constant(1.0), P.inverse_sqrt_weight(0.5), 0.5)


def test_realize_deterministic():
    m = P.RandomPhaseModel()
    assert P.realize(m, 7).terms == P.realize(m, 7).terms
    assert P.realize(m, 7).phases.tolist() != P.realize(m, 8).phases.tolist()


def test_rationally_dependent_wavenumbers_rejected():
    with pytest.raises(ValueError):
        P.realize(P.RandomPhaseModel((0.3, 0.2), (1.5, 3.0)), 0)


def test_realization_long_window_mean():
    # analytic mean of sum a cos(...) is zero, so u averages to the offset
    p = P.realize(P.RandomPhaseModel(), 11)
    L = 1e4
    ys = np.linspace(0.0, L, 2_000_001)
    u = P.eval_u(p, ys)
    # batch means over unit windows for the standard error
    blocks = u[:-1].reshape(-1, 200).mean(axis=1)
    se = blocks.std(ddof=1) / math.sqrt(blocks.size)
    assert abs(u.mean() - p.offset) <= 3 * se + 1e-4


def test_stationarity_histograms():
    p = P.realize(P.RandomPhaseModel(), 2)
    bins = np.linspace(0, 1, 21)
    a, _ = np.histogram(P.eval_u(p, np.linspace(0, 5000, 500001)), bins, density=True)
    b, _ = np.histogram(P.eval_u(p, np.linspace(123.4, 5123.4, 500001)), bins, density=True)
    assert np.max(np.abs(a - b)) < 0.05


def test_ensemble_matches_spatial_average():
    m = P.RandomPhaseModel()
    E = 3.0
    w = P.inverse_sqrt_weight(E)
    mean, se = P.ensemble_average(m, w, range(400), E)
    spatial = P.spatial_average(P.realize(m, 0), w, E, L=2000.0)
    assert abs(mean - spatial) <= 4 * se


def test_shift_moves_the_well(cw):
    s = P.shift(cw, 0.2)
    np.testing.assert_allclose(P.eval_u(s, np.array([0.1, 0.3])), P.eval_u(cw, np.array([0.3, 0.5])), atol=1e-14)
    hs = P.shift(P.harmonic_well(), 0.1)
    assert float(P.eval_u(hs, -0.1)) == pytest.approx(0.0, abs=1e-15)


def test_stability_step(cw):
    assert P.stability_step(cw) == pytest.approx(2.0 / math.sqrt(2 * math.pi ** 2))
