"""Global assembly of the stabilizer-free system and essential boundary conditions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .polybasis import evaluate_field, dim_cell
from .space import WgSpace


@dataclass(frozen=True)
class LinearSystem:
    """Assembled system ``A x = b`` with optionally fixed DOFs.

    After :func:`apply_boundary`, ``fixed`` holds the constrained indices and
    ``fixed_values`` their values; ``free`` is the complement.
    """

    space: WgSpace
    A: sp.csr_matrix
    b: np.ndarray
    fixed: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    fixed_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def free(self):
        mask = np.ones(len(self.b), dtype=bool)
        mask[self.fixed] = False
        return np.flatnonzero(mask)

    def reduced(self):
        """``(A_ff, b_f - A_fc x_c)`` after symmetric elimination of the fixed DOFs."""
        free = self.free
        A_ff = self.A[free][:, free].tocsr()
        rhs = self.b[free]
        if len(self.fixed):
            rhs = rhs - self.A[free][:, self.fixed] @ self.fixed_values
        return A_ff, rhs

    def expand(self, x_free):
        x = np.empty(len(self.b))
        x[self.free] = x_free
        x[self.fixed] = self.fixed_values
        return x


def stiffness_matrix(space: WgSpace) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    n = space.ndof
    for blk in space.blocks:
        d = blk.dofs
        assert d.min() >= 0 and d.max() < n, "local-to-global map out of range"
        rows.append(np.repeat(d, d.shape[1], axis=1).ravel())
        cols.append(np.tile(d, (1, d.shape[1])).ravel())
        vals.append(blk.K.ravel())
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    A = A.tocsr()
    A.sum_duplicates()
    return A


def load_vector(space: WgSpace, f) -> np.ndarray:
    """``b_i = (f, phi_i)_T`` on interior basis functions, zero on edge DOFs."""
    b = np.zeros(space.ndof)
    if f is None:
        return b
    nk = dim_cell(space.k)
    dm = space.dofmap
    for batch in space.batches:
        P = batch.cell_basis(space.k)
        b[dm.cell_dofs(batch.cells)] = np.einsum("cq,cq,cqa->ca", batch.qw, evaluate_field(f, batch.qp), P[..., :nk])
    return b


def assemble(space: WgSpace, f=None) -> LinearSystem:
    """Assemble ``(Delta_w u, Delta_w v)_{T_h} = (f, v_0)`` without constraints."""
    return LinearSystem(space, stiffness_matrix(space), load_vector(space, f))


def boundary_values(space: WgSpace, g=None, dudn=None, *, grad=None):
    """Constrained indices and values: ``v_b = Q_b g`` and ``v_n (n_e . n) = Q_n dudn``.

    ``dudn(x, y)`` is the outward normal derivative datum.  Alternatively pass
    ``grad(x, y) -> (u_x, u_y)`` and the datum is formed edge by edge with the
    outward normal.  Missing data means homogeneous constraints.
    """
    from .polybasis import project_edge

    mesh, k, dm = space.mesh, space.k, space.dofmap
    qdeg = space.quad_degree
    idx, val = [], []
    for e in np.flatnonzero(mesh.boundary):
        owner = mesh.edge_cells[e, 0]
        local = int(np.flatnonzero(mesh.cell_edges[owner] == e)[0])
        sign = mesh.cell_edge_signs[owner][local]
        outward = sign * mesh.edge_normals[e]
        if grad is not None:
            def datum(x, y, n=outward):
                gx, gy = grad(x, y)
                return gx * n[0] + gy * n[1]
        else:
            datum = dudn
        idx.append(dm.vb_dofs(e))
        val.append(np.zeros(k + 1) if g is None else project_edge(g, mesh, e, k, qdeg))
        idx.append(dm.vn_dofs(e))
        val.append(np.zeros(k) if datum is None else sign * project_edge(datum, mesh, e, k - 1, qdeg))
    idx = np.concatenate(idx) if idx else np.empty(0, dtype=np.int64)
    val = np.concatenate(val) if val else np.empty(0)
    order = np.argsort(idx)
    return idx[order], val[order]


def apply_boundary(system: LinearSystem, g=None, dudn=None, *, grad=None) -> LinearSystem:
    """Fix every boundary ``v_b`` / ``v_n`` block by symmetric elimination."""
    idx, val = boundary_values(system.space, g, dudn, grad=grad)
    return replace(system, fixed=idx, fixed_values=val)
