from __future__ import annotations

import math

import numpy as np
import pytest

from kinhom.errors import QuadratureError
from kinhom.potential import eval_u, well_containing
from kinhom.quadrature import composite_nodes, singular_quadrature
from oracles import adaptive_integral, cos_well_u


def test_gauss_rule_integrates_polynomials():
    x, w = composite_nodes(0.0, 2.0, 3)
    assert float(np.dot(w, x ** 7)) == pytest.approx(2.0 ** 8 / 8, rel=1e-14)


def test_one_sided_inverse_sqrt():
    val = singular_quadrature(lambda s: 1 / np.sqrt(1 - s), 0.0, 1.0, (False, True))
    assert val == pytest.approx(2.0, abs=1e-10)


def test_two_sided_inverse_sqrt():
    val = singular_quadrature(lambda s: 1 / np.sqrt(s * (1 - s)), 0.0, 1.0, (True, True))
    assert val == pytest.approx(math.pi, abs=1e-10)


def test_trapped_half_period_against_adaptive_oracle(cw):
    E = 0.5
    zm, zp = well_containing(cw, E, 0.0)
    g = lambda s: 1 / np.sqrt(2 * np.maximum(E - cos_well_u(s), 1e-300))
    ours = singular_quadrature(g, zm, zp, (True, True))
    ref = adaptive_integral(g, zm, zp)
    assert ours == pytest.approx(ref, abs=1e-8)
    # both turning points solve u = E
    assert float(eval_u(cw, zm)) == pytest.approx(E, abs=1e-14)


def test_non_integrable_blowup_detected():
    with pytest.raises(QuadratureError):
        singular_quadrature(lambda s: 1 / (1 - s) ** 1.2, 0.0, 1.0, (False, True), max_panels=256)


def test_zero_by_symmetry_converges():
    val = singular_quadrature(lambda s: np.sin(2 * np.pi * s) / np.sqrt(s * (1 - s)), 0.0, 1.0, (True, True))
    assert abs(val) < 1e-12
