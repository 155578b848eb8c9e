"""Scaled monomial bases on cells and edges, batched cell geometry, L2 projections.

Cell basis of degree ``d``: ``((x - x_T)/h_T)^a ((y - y_T)/h_T)^b`` for
``a + b <= d``, ordered by total degree so that the first ``dim P_k`` entries
of a degree-``j`` basis are exactly the degree-``k`` basis.

Edge basis of degree ``d``: ``t^a``, ``a <= d``, where
``t = 2 (x - m_e) . t_e / |e|`` runs over ``[-1, 1]`` along the edge's stored
orientation.  Both neighbours of an edge therefore see the same functions.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg

from .exceptions import ConditioningError, GeometryError
from .quadrature import fan_rule, line_rule


def dim_cell(d):
    return (d + 1) * (d + 2) // 2 if d >= 0 else 0


def dim_edge(d):
    return d + 1 if d >= 0 else 0


@lru_cache(maxsize=None)
def exponents(d):
    """``(n, 2)`` array of exponent pairs ``(a, b)`` ordered by total degree."""
    return np.array([(deg - b, b) for deg in range(d + 1) for b in range(deg + 1)], dtype=np.int64)


def _powers(t, d):
    out = np.empty(t.shape + (d + 1,))
    out[..., 0] = 1.0
    for p in range(1, d + 1):
        out[..., p] = out[..., p - 1] * t
    return out


def monomials(pts, center, h, d, grad=False, lap=False):
    """Evaluate the scaled monomial basis of degree ``d``.

    ``pts`` has shape ``(..., 2)``; ``center`` (``(..., 2)``) and ``h``
    (``(...)``) must broadcast against ``pts[..., 0]``.  Returns values of
    shape ``(..., n)``, plus gradients ``(..., n, 2)`` and Laplacians
    ``(..., n)`` on request, in that order.
    """
    pts = np.asarray(pts, dtype=float)
    center = np.asarray(center, dtype=float)
    h = np.asarray(h, dtype=float)
    X = _powers((pts[..., 0] - center[..., 0]) / h, d)
    Y = _powers((pts[..., 1] - center[..., 1]) / h, d)
    e = exponents(d)
    a, b = e[:, 0], e[:, 1]
    val = X[..., a] * Y[..., b]
    if not (grad or lap):
        return val
    out = [val]
    hh = h[..., None]
    if grad:
        am1, bm1 = np.maximum(a - 1, 0), np.maximum(b - 1, 0)
        gx = a * X[..., am1] * Y[..., b] / hh
        gy = b * X[..., a] * Y[..., bm1] / hh
        out.append(np.stack([gx, gy], axis=-1))
    if lap:
        am2, bm2 = np.maximum(a - 2, 0), np.maximum(b - 2, 0)
        lv = (a * (a - 1) * X[..., am2] * Y[..., b] + b * (b - 1) * X[..., a] * Y[..., bm2]) / hh**2
        out.append(lv)
    return tuple(out)


def edge_monomials(t, d):
    """Edge basis ``t^a``, ``a <= d``, at parameter values ``t``; shape ``t.shape + (d+1,)``."""
    return _powers(np.asarray(t, dtype=float), d)


# --------------------------------------------------------------------------
# batched cell geometry
# --------------------------------------------------------------------------

class CellBatch:
    """Geometry and quadrature for cells sharing one vertex count.

    Arrays have a leading batch axis of length ``C``:

    - ``verts (C, nv, 2)``, ``center (C, 2)`` (centroid), ``h (C,)`` (diameter), ``area (C,)``
    - ``edges (C, nv)`` global edge ids and ``signs (C, nv)`` = ``n_e . n_T``
    - ``normals (C, nv, 2)`` outward normals, ``lengths (C, nv)``
    - ``qp (C, Q, 2)``, ``qw (C, Q)`` cell quadrature
    - ``ep (C, nv, G, 2)``, ``ew (C, nv, G)`` edge quadrature, ``et (C, nv, G)``
      the global edge parameter of each edge point
    """

    def __init__(self, mesh, cells, degree, edge_degree=None):
        cells = np.asarray(cells, dtype=np.int64)
        nv = len(mesh.cells[cells[0]])
        self.cells = cells
        self.nv = nv
        self.degree = degree
        conn = np.array([mesh.cells[c] for c in cells])
        self.verts = mesh.vertices[conn]
        self.center = mesh.centroids[cells]
        self.h = mesh.diameters[cells]
        self.area = mesh.areas[cells]
        if np.any(self.area <= 0):
            raise GeometryError("degenerate cell with non-positive area")
        self.edges = np.array([mesh.cell_edges[c] for c in cells])
        self.signs = np.array([mesh.cell_edge_signs[c] for c in cells])
        self.normals = mesh.edge_normals[self.edges] * self.signs[..., None]
        self.lengths = mesh.edge_lengths[self.edges]
        self.qp, self.qw = fan_rule(self.verts, self.center, degree)

        s, w = line_rule(degree if edge_degree is None else edge_degree)
        a = self.verts
        b = np.roll(self.verts, -1, axis=1)
        self.ep = a[:, :, None, :] + s[None, None, :, None] * (b - a)[:, :, None, :]
        self.ew = self.lengths[..., None] * w[None, None, :]
        self.et = self.signs[..., None] * (2 * s - 1)[None, None, :]

    def __len__(self):
        return len(self.cells)

    def cell_basis(self, d, **kw):
        return monomials(self.qp, self.center[:, None, :], self.h[:, None], d, **kw)

    def edge_cell_basis(self, d, **kw):
        return monomials(self.ep, self.center[:, None, None, :], self.h[:, None, None], d, **kw)


def cell_batches(mesh, degree, edge_degree=None, size=1024):
    """Split the mesh into :class:`CellBatch` chunks grouped by vertex count."""
    sizes = mesh.cell_sizes()
    out = []
    for nv in np.unique(sizes):
        ids = np.flatnonzero(sizes == nv)
        for start in range(0, len(ids), size):
            out.append(CellBatch(mesh, ids[start:start + size], degree, edge_degree))
    return out


def evaluate_field(f, pts):
    return np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:-1])


def _cholesky(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("mass matrix is not numerically positive definite") from exc


def batch_projection(f, batch, d):
    """Coefficients ``(C, n)`` of the cellwise L2 projection of ``f`` onto ``P_d``."""
    P = batch.cell_basis(d)
    M = np.einsum("cq,cqi,cqj->cij", batch.qw, P, P)
    rhs = np.einsum("cq,cq,cqi->ci", batch.qw, evaluate_field(f, batch.qp), P)
    L = _cholesky(M)
    y = np.linalg.solve(L, rhs[..., None])
    return np.linalg.solve(np.swapaxes(L, 1, 2), y)[..., 0]


# --------------------------------------------------------------------------
# single-cell / single-edge operations
# --------------------------------------------------------------------------

def default_degree(target):
    """Quadrature exactness for projecting non-polynomial data onto ``P_target``.

    ``2 j + 4`` with the lifting degree ``j = target + 2``; a space projects
    with its own ``quad_degree`` instead.
    """
    return 2 * (target + 2) + 4


def _single(mesh, cell, degree):
    return CellBatch(mesh, [cell], degree)


def cell_mass_matrix(mesh, cell, d):
    """Gram matrix of the degree-``d`` scaled monomials on ``cell``."""
    b = _single(mesh, cell, 2 * d)
    P = b.cell_basis(d)[0]
    M = np.einsum("q,qi,qj->ij", b.qw[0], P, P)
    return 0.5 * (M + M.T)


@lru_cache(maxsize=None)
def _unit_edge_gram(d):
    # int_{-1}^{1} t^(a+b) dt / 2, the edge Gram matrix for |e| = 1
    p = np.add.outer(np.arange(d + 1), np.arange(d + 1))
    return np.where(p % 2 == 0, 1.0 / (p + 1), 0.0)


def edge_mass_matrix(mesh, edge, d):
    """Gram matrix of ``t^a`` on ``edge``."""
    return mesh.edge_lengths[edge] * _unit_edge_gram(d)


def edge_points(mesh, edge, degree):
    """Quadrature points, weights and parameters ``t`` on a global edge."""
    s, w = line_rule(degree)
    t = 2 * s - 1
    half = 0.5 * mesh.edge_lengths[edge]
    pts = mesh.edge_midpoints[edge] + (t * half)[:, None] * mesh.edge_tangents[edge]
    return pts, w * mesh.edge_lengths[edge], t


def project_Q0(f, mesh, cell, k, degree=None):
    """L2 projection of the field ``f(x, y)`` onto ``P_k(T)``; returns basis coefficients."""
    b = _single(mesh, cell, default_degree(k) if degree is None else degree)
    return batch_projection(f, b, k)[0]


def project_lift(f, mesh, cell, j, degree=None):
    """L2 projection onto the lifting space ``P_j(T)`` (the projection paired with the weak Laplacian)."""
    return project_Q0(f, mesh, cell, j, degree)


def project_edge(f, mesh, edge, d, degree=None):
    pts, w, t = edge_points(mesh, edge, default_degree(d) if degree is None else degree)
    psi = edge_monomials(t, d)
    rhs = psi.T @ (w * evaluate_field(f, pts))
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(edge_mass_matrix(mesh, edge, d)), rhs)


def project_Qb(f, mesh, edge, k, degree=None):
    """L2 projection of a trace onto ``P_k(e)``."""
    return project_edge(f, mesh, edge, k, degree)


def project_Qn(g, mesh, edge, d, degree=None):
    """L2 projection of a normal-derivative datum onto ``P_d(e)`` (``d = k - 1``)."""
    return project_edge(g, mesh, edge, d, degree)


def eval_cell(coeffs, mesh, cell, pts):
    """Evaluate a cell polynomial given by scaled-monomial coefficients."""
    pts = np.asarray(pts, dtype=float)
    d = int(round((np.sqrt(8 * len(coeffs) + 1) - 3) / 2))
    return monomials(pts, mesh.centroids[cell], mesh.diameters[cell], d) @ coeffs


def eval_edge(coeffs, mesh, edge, pts):
    pts = np.asarray(pts, dtype=float)
    t = 2 * (pts - mesh.edge_midpoints[edge]) @ mesh.edge_tangents[edge] / mesh.edge_lengths[edge]
    return edge_monomials(t, len(coeffs) - 1) @ coeffs


def interpolate_Qh(u, grad, space):
    """The projection ``Q_h u = {Q_0 u, Q_b u, Q_n(grad u . n_e)}`` as a :class:`WgFunction`.

    ``grad(x, y)`` must return the pair ``(u_x, u_y)``.  The normal component
    uses each edge's stored normal ``n_e``, not a cell's outward normal.
    """
    from .space import WgFunction

    mesh, k, dm = space.mesh, space.k, space.dofmap
    x = np.zeros(dm.total)
    qdeg = space.quad_degree
    for batch in cell_batches(mesh, qdeg):
        c = batch_projection(u, batch, k)
        x[dm.cell_dofs(batch.cells)] = c

    s, w = line_rule(qdeg)
    t = 2 * s - 1
    L = mesh.edge_lengths
    pts = mesh.edge_midpoints[:, None, :] + (0.5 * L[:, None, None] * t[None, :, None]) * mesh.edge_tangents[:, None, :]
    wts = L[:, None] * w[None, :]
    uval = evaluate_field(u, pts)
    gx, gy = grad(pts[..., 0], pts[..., 1])
    dn = (np.asarray(gx) * mesh.edge_normals[:, None, 0] + np.asarray(gy) * mesh.edge_normals[:, None, 1])
    dn = dn * np.ones(pts.shape[:-1])
    for d, vals, dofs in ((k, uval, dm.vb_dofs(np.arange(mesh.n_edges))),
                          (k - 1, dn, dm.vn_dofs(np.arange(mesh.n_edges)))):
        psi = edge_monomials(t, d)
        rhs = np.einsum("eq,eq,qa->ea", wts, vals, psi) / L[:, None]
        x[dofs] = scipy.linalg.cho_solve(scipy.linalg.cho_factor(_unit_edge_gram(d)), rhs.T).T
    return WgFunction(space, x)
