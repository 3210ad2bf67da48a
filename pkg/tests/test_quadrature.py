from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdivstokes.quadrature import MAX_EXACTNESS, edge_quadrature, physical_points, quadrature


def monomial(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def integrate(rule, fn):
    x, y = rule.xy.T
    return float(rule.weights @ fn(x, y))


def test_constant():
    assert integrate(quadrature(1), lambda x, y: 1 + 0 * x) == pytest.approx(0.5, abs=1e-16)


def test_x_squared():
    assert integrate(quadrature(2), lambda x, y: x**2) == pytest.approx(1 / 12, abs=1e-15)


def test_x2y2():
    assert integrate(quadrature(4), lambda x, y: x**2 * y**2) == pytest.approx(1 / 180, abs=1e-15)


@pytest.mark.parametrize("deg", range(1, MAX_EXACTNESS + 1))
def test_exactness_all_monomials(deg):
    rule = quadrature(deg)
    assert rule.exactness == deg
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 0.5) < 1e-15
    assert np.all(rule.points > 0)
    np.testing.assert_allclose(rule.points.sum(axis=1), 1.0, atol=1e-15)
    for a in range(deg + 1):
        for b in range(deg + 1 - a):
            got = integrate(rule, lambda x, y: x**a * y**b)
            assert abs(got - monomial(a, b)) < 1e-14, (a, b)


def test_rule_is_not_overstated():
    # a degree 3 rule must miss some degree 5 monomial, otherwise the bookkeeping is off
    rule = quadrature(3)
    errs = [abs(integrate(rule, lambda x, y: x**a * y**(6 - a)) - monomial(a, 6 - a))
            for a in range(7)]
    assert max(errs) > 1e-8


@pytest.mark.parametrize("bad", [0, 15, -1])
def test_unsupported_degree(bad):
    with pytest.raises(ValueError, match="1..14"):
        quadrature(bad)


@given(st.integers(0, 9))
def test_edge_rule(k):
    t, w = edge_quadrature()
    assert abs(w @ t**k - 1 / (k + 1)) < 1e-15


def test_physical_points_integrate_area():
    coords = np.array([[[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]])
    rule = quadrature(4)
    x = physical_points(coords, rule)[0]
    # the centroid is the mean of x over the triangle
    np.testing.assert_allclose(2 * rule.weights @ x, coords[0].mean(axis=0), atol=1e-15)
