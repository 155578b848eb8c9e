from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfwg.mesh import GridFamily, generate
from sfwg.quadrature import fan_rule, line_rule, polygon_rule, triangle_rule


def ref_triangle_moment(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(0, 17))
def test_line_rule_exact(degree):
    s, w = line_rule(degree)
    assert np.all(w > 0)
    for p in range(degree + 1):
        assert np.sum(w * s**p) == pytest.approx(1 / (p + 1), rel=1e-13)


@pytest.mark.parametrize("degree", range(0, 19))
def test_triangle_rule_exact(degree):
    xi, eta, w = triangle_rule(degree)
    assert np.all(w > 0)
    assert np.sum(w) == pytest.approx(0.5, rel=1e-14)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = np.sum(w * xi**a * eta**b)
            assert abs(got - ref_triangle_moment(a, b)) <= 1e-12 * ref_triangle_moment(a, b)


def test_triangle_rule_not_exact_beyond_degree():
    xi, eta, w = triangle_rule(4)
    got = np.sum(w * xi**8)
    assert abs(got - ref_triangle_moment(8, 0)) > 1e-8


@settings(max_examples=25, deadline=None)
@given(
    x0=st.floats(-2, 2), y0=st.floats(-2, 2),
    wd=st.floats(0.1, 3), ht=st.floats(0.1, 3),
    a=st.integers(0, 6), b=st.integers(0, 6),
)
def test_rectangle_monomials(x0, y0, wd, ht, a, b):
    rect = np.array([[x0, y0], [x0 + wd, y0], [x0 + wd, y0 + ht], [x0, y0 + ht]])
    pts, w = polygon_rule(rect, a + b)
    got = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b)
    exact = ((x0 + wd) ** (a + 1) - x0 ** (a + 1)) / (a + 1) * ((y0 + ht) ** (b + 1) - y0 ** (b + 1)) / (b + 1)
    scale = max(abs(x0), abs(x0 + wd)) ** a * max(abs(y0), abs(y0 + ht)) ** b * wd * ht
    assert abs(got - exact) <= 1e-12 * max(scale, 1e-300)


@pytest.mark.parametrize("kind", ["triangle", "pentagon"])
@pytest.mark.parametrize("a,b", [(0, 0), (3, 1), (2, 5), (7, 0), (4, 4)])
def test_unit_square_tiling(kind, a, b):
    m = generate(GridFamily(kind, 2))
    total = 0.0
    for size in np.unique(m.cell_sizes()):
        ids = [c for c in range(m.n_cells) if len(m.cells[c]) == size]
        verts = np.stack([m.vertices[m.cells[c]] for c in ids])
        pts, w = fan_rule(verts, m.centroids[ids], a + b)
        total += np.sum(w * pts[..., 0] ** a * pts[..., 1] ** b)
    assert total == pytest.approx(1 / ((a + 1) * (b + 1)), rel=1e-12)


def test_weights_sum_to_area():
    m = generate(GridFamily("pentagon", 1))
    for c in range(m.n_cells):
        _, w = polygon_rule(m.vertices[m.cells[c]], 6)
        assert np.all(w > 0)
        assert w.sum() == pytest.approx(m.areas[c], rel=1e-14)
