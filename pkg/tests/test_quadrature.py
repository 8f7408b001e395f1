import math

import numpy as np
import pytest

from weakslip import quadrature
from weakslip.errors import UnsupportedError


def exact_monomial(a, b):
    # int_T x^a y^b over the unit reference triangle.
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(1, 11))
def test_triangle_rules_exact_and_positive(degree):
    pts, wts = quadrature.triangle_rule(degree)
    assert np.all(wts > 0)
    assert np.sum(wts) == pytest.approx(0.5, rel=1e-14)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            approx = np.sum(wts * pts[:, 0] ** a * pts[:, 1] ** b)
            assert approx == pytest.approx(exact_monomial(a, b), rel=1e-12), \
                (degree, a, b)


def test_degree_one_is_centroid():
    pts, wts = quadrature.triangle_rule(1)
    assert pts.shape == (1, 2)
    assert np.allclose(pts[0], [1 / 3, 1 / 3])
    assert wts[0] == pytest.approx(0.5)


def test_degree_four_integrates_x2y2():
    pts, wts = quadrature.triangle_rule(4)
    val = np.sum(wts * pts[:, 0] ** 2 * pts[:, 1] ** 2)
    assert val == pytest.approx(1.0 / 180.0, rel=1e-13)


def test_points_inside_reference_triangle():
    for degree in range(1, 11):
        pts, _ = quadrature.triangle_rule(degree)
        assert np.all(pts >= 0)
        assert np.all(pts.sum(axis=1) <= 1 + 1e-14)


def test_unsupported_degree_raises():
    with pytest.raises(UnsupportedError):
        quadrature.triangle_rule(11)
    with pytest.raises(UnsupportedError):
        quadrature.triangle_rule(0)


@pytest.mark.parametrize("degree", range(1, 13))
def test_edge_rules(degree):
    t, w = quadrature.edge_rule(degree)
    assert np.all(w > 0)
    assert np.all((t >= 0) & (t <= 1))
    for k in range(degree + 1):
        assert np.sum(w * t ** k) == pytest.approx(1 / (k + 1), rel=1e-13)
