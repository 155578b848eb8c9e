"""Gauss rules on segments, triangles, and convex polygons (fan from the centroid)."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def line_rule(degree):
    """Gauss-Legendre rule on [0, 1] exact for polynomials of ``degree``."""
    n = max(1, (degree + 2) // 2)
    x, w = roots_legendre(n)
    return (x + 1) / 2, w / 2


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Collapsed Gauss rule on the reference triangle (0,0), (1,0), (0,1).

    Gauss-Jacobi(1, 0) in the collapsed direction and Gauss-Legendre in the
    other; all weights are positive and sum to 1/2.  Returns ``(xi, eta, w)``.
    """
    n = max(1, (degree + 2) // 2)
    xl, wl = roots_legendre(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = (xj + 1) / 2
    t = (xl + 1) / 2
    xi = np.outer(s, np.ones(n)).ravel()
    eta = np.outer(1 - s, t).ravel()
    w = np.outer(wj, wl).ravel() / 8
    return xi, eta, w


def fan_rule(verts, center, degree):
    """Quadrature on a batch of convex polygons by fanning from ``center``.

    ``verts`` is ``(C, nv, 2)`` (counter-clockwise), ``center`` is ``(C, 2)``.
    Triangles are integrated directly rather than fanned.  Returns points
    ``(C, Q, 2)`` and weights ``(C, Q)``.
    """
    verts = np.asarray(verts, dtype=float)
    C, nv, _ = verts.shape
    xi, eta, w = triangle_rule(degree)
    if nv == 3:
        a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
        tris = [(a, b, c)]
    else:
        nxt = np.roll(verts, -1, axis=1)
        tris = [(center, verts[:, i], nxt[:, i]) for i in range(nv)]
    pts, wts = [], []
    for a, b, c in tris:
        e1, e2 = b - a, c - a
        jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        pts.append(a[:, None, :] + xi[None, :, None] * e1[:, None, :] + eta[None, :, None] * e2[:, None, :])
        wts.append(jac[:, None] * w[None, :])
    return np.concatenate(pts, axis=1), np.concatenate(wts, axis=1)


def polygon_rule(points, degree):
    """Quadrature on one convex polygon; returns ``(Q, 2)`` points and ``(Q,)`` weights."""
    from .mesh import polygon_area_centroid

    p = np.asarray(points, dtype=float)
    _, center = polygon_area_centroid(p)
    x, w = fan_rule(p[None], center[None], degree)
    return x[0], w[0]
