from itertools import product
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rda.quad import (
    MAX_DEGREE,
    face_rule,
    map_simplex,
    polygon_area,
    polygon_centroid,
    polygon_rule,
    simplex_rule,
)


def simplex_moment(alpha):
    """Exact integral of x^alpha over the unit reference simplex."""
    num = np.prod([factorial(a) for a in alpha])
    return num / factorial(sum(alpha) + len(alpha))


def monomial_exponents(dim, degree):
    return [a for a in product(range(degree + 1), repeat=dim) if sum(a) <= degree]


@pytest.mark.parametrize("dim,degree", [(d, k) for d in (2, 3) for k in range(MAX_DEGREE[d] + 1)])
def test_simplex_exactness_sweep(dim, degree):
    rule = simplex_rule(dim, degree)
    assert rule.degree >= degree
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(1 / factorial(dim), abs=1e-14)
    for alpha in monomial_exponents(dim, degree):
        val = rule.integrate(lambda x: np.prod(x ** np.array(alpha), axis=1))
        assert val == pytest.approx(simplex_moment(alpha), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("degree", range(0, 22))
def test_segment_exactness_sweep(degree):
    rule = face_rule(2, degree)
    assert rule.weights.sum() == pytest.approx(2.0, abs=1e-14)
    for k in range(degree + 1):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert rule.integrate(lambda x: x[:, 0] ** k) == pytest.approx(exact, abs=1e-13)


def test_centroid_rule():
    rule = simplex_rule(2, 1)
    assert len(rule) == 1
    np.testing.assert_allclose(rule.points, [[1 / 3, 1 / 3]])
    assert rule.weights[0] == 0.5


def test_three_point_rule_moments():
    rule = simplex_rule(2, 2)
    assert len(rule) == 3
    assert rule.integrate(lambda x: x[:, 0] ** 2) == pytest.approx(1 / 12, abs=1e-15)
    assert rule.integrate(lambda x: x[:, 0] * x[:, 1]) == pytest.approx(1 / 24, abs=1e-15)
    assert rule.integrate(lambda x: x[:, 1] ** 2) == pytest.approx(1 / 12, abs=1e-15)


def test_tet_second_moment():
    assert simplex_rule(3, 2).integrate(lambda x: x[:, 0] ** 2) == pytest.approx(1 / 60, abs=1e-15)


def test_face_rule_examples():
    r = face_rule(2, 3)
    np.testing.assert_allclose(np.sort(r.points[:, 0]), [-1 / np.sqrt(3), 1 / np.sqrt(3)],
                               atol=1e-15)
    r = face_rule(2, 1)
    assert len(r) == 1 and r.points[0, 0] == pytest.approx(0.0) and r.weights[0] == 2.0
    r = face_rule(3, 2)
    assert len(r) == 3 and r.weights.sum() == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("dim,degree", [(2, 11), (3, 9), (2, -1), (4, 1)])
def test_unsupported_degree(dim, degree):
    with pytest.raises(ValueError):
        simplex_rule(dim, degree)


UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_polygon_rule_square():
    assert polygon_rule(UNIT_SQUARE, 2).weights.sum() == pytest.approx(1.0, abs=1e-14)
    rule = polygon_rule(UNIT_SQUARE, 3)
    assert rule.integrate(lambda x: x[:, 0] ** 2 * x[:, 1]) == pytest.approx(1 / 6, abs=1e-12)


def test_polygon_rule_hexagon():
    t = np.arange(6) * np.pi / 3
    hexagon = np.column_stack([np.cos(t), np.sin(t)])
    rule = polygon_rule(hexagon, 2)
    assert rule.weights.sum() == pytest.approx(3 * np.sqrt(3) / 2, abs=1e-12)


def test_polygon_rule_degenerate():
    with pytest.raises(ValueError):
        polygon_rule(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), 2)


def test_polygon_centroid_and_area():
    assert polygon_area(UNIT_SQUARE) == pytest.approx(1.0)
    np.testing.assert_allclose(polygon_centroid(UNIT_SQUARE), [0.5, 0.5])
    assert polygon_area(UNIT_SQUARE[::-1]) == pytest.approx(-1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6), st.integers(0, 6))
def test_mapped_triangle_integrates_linear_exactly(coords, degree):
    tri = np.array(coords).reshape(1, 3, 2)
    area = 0.5 * abs(np.linalg.det(tri[0, 1:] - tri[0, :1]))
    pts, w = map_simplex(simplex_rule(2, degree), tri)
    assert w.sum() == pytest.approx(area, abs=1e-12)
    centroid = tri[0].mean(axis=0)
    np.testing.assert_allclose((w[0, :, None] * pts[0]).sum(axis=0), area * centroid,
                               atol=1e-12)
