"""Local weak Laplacian lifting and the stabilizer-free element stiffness.

For ``v = {v_0, v_b, v_n n_e}`` the weak Laplacian on a cell ``T`` is the
polynomial ``w in P_j(T)`` with, for every ``phi in P_j(T)``::

    (w, phi)_T = (v_0, lap phi)_T - <v_b, grad phi . n>_dT + <v_n (n_e . n), phi>_dT

In matrix form ``M_j c = B v``; the element stiffness is
``K = B^T M_j^{-1} B = G^T G`` with ``G = L^{-1} B`` and ``M_j = L L^T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ConditioningError, InvalidArgumentError
from .polybasis import CellBatch, dim_cell, edge_monomials


def element_matrices(batch, k, j, flip_sign_fault=False):
    """Lifted mass matrices ``M (C, nj, nj)`` and lifting matrices ``B (C, nj, n_loc)``."""
    C, nv = len(batch), batch.nv
    nk = dim_cell(k)
    P, lapP = batch.cell_basis(j, lap=True)
    M = np.einsum("cq,cqi,cqj->cij", batch.qw, P, P)
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    B0 = np.einsum("cq,cqi,cqa->cia", batch.qw, lapP, P[..., :nk])

    Pe, gPe = batch.edge_cell_basis(j, grad=True)
    dn = np.einsum("cegid,ced->cegi", gPe, batch.normals)
    psi_b = edge_monomials(batch.et, k)
    psi_n = edge_monomials(batch.et, k - 1)
    signs = np.ones_like(batch.signs) if flip_sign_fault else batch.signs
    Bb = -np.einsum("ceg,cegi,cega->ciea", batch.ew, dn, psi_b).reshape(C, -1, nv * (k + 1))
    Bn = np.einsum("ce,ceg,cegi,cega->ciea", signs, batch.ew, Pe, psi_n).reshape(C, -1, nv * k)
    return M, np.concatenate([B0, Bb, Bn], axis=2)


def _factor(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("lifted mass matrix is not numerically positive definite") from exc


class ElementBlock:
    """Element operators of one :class:`~sfwg.polybasis.CellBatch`.

    ``L`` is the Cholesky factor of ``M_j``, ``G = L^{-1} B`` so that
    ``||Delta_w v||_T^2 = |G v_loc|^2`` and ``K = G^T G``.  ``dofs`` maps local
    to global DOF indices.
    """

    def __init__(self, batch, dofs, k, j, flip_sign_fault=False):
        self.batch = batch
        self.dofs = dofs
        self.k, self.j = k, j
        M, self.B = element_matrices(batch, k, j, flip_sign_fault)
        self.L = _factor(M)
        self.G = np.linalg.solve(self.L, self.B)
        self.K = np.einsum("cia,cib->cab", self.G, self.G)

    def lift(self, v_loc):
        """Weak Laplacian coefficients ``(C, nj, ...)`` of local vectors ``(C, n_loc, ...)``."""
        y = np.einsum("cij,cj...->ci...", self.G, v_loc)
        Lt = np.swapaxes(self.L, 1, 2)
        shape = y.shape
        y = y.reshape(shape[0], shape[1], -1)
        return np.linalg.solve(Lt, y).reshape(shape)


def build_blocks(space):
    dm = space.dofmap
    return [
        ElementBlock(b, dm.batch_dofs(b.cells, b.edges), space.k, space.j, space.flip_sign_fault)
        for b in space.batches
    ]


@dataclass(frozen=True)
class ElementOperator:
    """Operators of a single cell.

    Local DOF order is ``[v_0 | v_b per edge | v_n per edge]`` with edges in
    the cell's counter-clockwise order.
    """

    cell: int
    k: int
    j: int
    M: np.ndarray
    B: np.ndarray
    K: np.ndarray
    chol: np.ndarray

    @property
    def n_local(self):
        return self.B.shape[1]

    def lift(self, v_local):
        return lift_weak_laplacian(v_local, self)


def element_stiffness(mesh, cell, k, j, *, flip_sign_fault=False):
    """Build the :class:`ElementOperator` of ``cell`` for degrees ``k`` and ``j > k``."""
    if j <= k:
        raise InvalidArgumentError(f"weak Laplacian degree j={j} must exceed k={k}")
    if k < 1:
        raise InvalidArgumentError(f"k must be positive, got {k}")
    batch = CellBatch(mesh, [cell], 2 * j)
    M, B = element_matrices(batch, k, j, flip_sign_fault)
    L = _factor(M[0])
    G = scipy.linalg.solve_triangular(L, B[0], lower=True)
    return ElementOperator(cell, k, j, M[0], B[0], G.T @ G, L)


def lift_weak_laplacian(v_local, op):
    """Coefficients ``c`` in ``P_j(T)`` solving ``M_j c = B v_local``."""
    return scipy.linalg.cho_solve((op.chol, True), op.B @ np.asarray(v_local, dtype=float))


def local_interpolant(u, grad, mesh, cell, k, degree=None):
    """Restriction of ``Q_h u`` to one cell, in local DOF order."""
    from .polybasis import project_edge, project_Q0

    edges = mesh.cell_edges[cell]
    n = mesh.edge_normals
    v0 = project_Q0(u, mesh, cell, k, degree)
    vb = [project_edge(u, mesh, e, k, degree) for e in edges]

    def normal_derivative(e):
        def g(x, y):
            gx, gy = grad(x, y)
            return gx * n[e, 0] + gy * n[e, 1]
        return g

    vn = [project_edge(normal_derivative(e), mesh, e, k - 1, degree) for e in edges]
    return np.concatenate([v0, *vb, *vn])


def commuting_identity_check(u, grad, lap, mesh, cell, k, j):
    """``|| Delta_w(Q_h u) - Q_j(lap u) ||_{L2(T)}`` on one cell.

    Zero up to round-off when ``u`` is a polynomial of degree at most ``k``.
    """
    from .polybasis import batch_projection

    op = element_stiffness(mesh, cell, k, j)
    c = lift_weak_laplacian(local_interpolant(u, grad, mesh, cell, k), op)
    q = batch_projection(lap, CellBatch(mesh, [cell], 2 * j + 4), j)[0]
    d = c - q
    return float(np.sqrt(max(d @ op.M @ d, 0.0)))
