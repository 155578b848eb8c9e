"""Discrete weak Galerkin space: DOF numbering and discrete functions.

Global ordering puts every cell-interior block first, then the trace
blocks ``v_b`` of all edges, then the normal-derivative blocks ``v_n``.
"""
from __future__ import annotations

import numpy as np

from .exceptions import InvalidArgumentError
from .polybasis import cell_batches, dim_cell


class DofMap:
    """Numbering of the three DOF families for polynomial degree ``k``.

    Per cell ``dim P_k`` interior DOFs, per edge ``k + 1`` trace DOFs and
    ``k`` normal-derivative DOFs.
    """

    def __init__(self, mesh, k):
        self.mesh = mesh
        self.k = k
        self.n_cell = dim_cell(k)
        self.n_b = k + 1
        self.n_n = k
        self.vb_offset = mesh.n_cells * self.n_cell
        self.vn_offset = self.vb_offset + mesh.n_edges * self.n_b
        self.total = self.vn_offset + mesh.n_edges * self.n_n

    @property
    def n_interior(self):
        return self.vb_offset

    def cell_dofs(self, cells):
        cells = np.asarray(cells)
        return cells[..., None] * self.n_cell + np.arange(self.n_cell)

    def vb_dofs(self, edges):
        edges = np.asarray(edges)
        return self.vb_offset + edges[..., None] * self.n_b + np.arange(self.n_b)

    def vn_dofs(self, edges):
        edges = np.asarray(edges)
        return self.vn_offset + edges[..., None] * self.n_n + np.arange(self.n_n)

    def local_dofs(self, cell):
        """Global indices in local order ``[v_0 | v_b per edge | v_n per edge]``."""
        edges = self.mesh.cell_edges[cell]
        return np.concatenate([self.cell_dofs(cell), self.vb_dofs(edges).ravel(), self.vn_dofs(edges).ravel()])

    def batch_dofs(self, cells, edges):
        """Local-to-global map ``(C, n_loc)`` for cells with edge table ``edges (C, nv)``."""
        C = len(cells)
        return np.concatenate(
            [self.cell_dofs(cells), self.vb_dofs(edges).reshape(C, -1), self.vn_dofs(edges).reshape(C, -1)],
            axis=1,
        )

    def n_local(self, nv):
        return self.n_cell + nv * (self.n_b + self.n_n)

    def boundary_dofs(self):
        """All ``v_b`` and ``v_n`` DOFs on boundary edges (the constrained set)."""
        be = np.flatnonzero(self.mesh.boundary)
        return np.sort(np.concatenate([self.vb_dofs(be).ravel(), self.vn_dofs(be).ravel()]))


class WgSpace:
    """The space ``V_h`` of degree ``k`` on a mesh, with weak Laplacian degree ``j``.

    ``j`` defaults to ``k + 2`` on all-triangle meshes and ``k + 3`` otherwise.
    Local operators are built on first use and cached; the mesh is immutable
    so the cache never goes stale.
    """

    def __init__(self, mesh, k, j=None, *, flip_sign_fault=False, batch_size=1024):
        if int(k) != k or k < 2:
            raise InvalidArgumentError(f"polynomial degree k must be an integer >= 2, got {k!r}")
        if j is None:
            j = k + 2 if np.all(mesh.cell_sizes() == 3) else k + 3
        if int(j) != j or j <= k:
            raise InvalidArgumentError(f"weak Laplacian degree j must exceed k={k}, got {j!r}")
        self.mesh = mesh
        self.k = int(k)
        self.j = int(j)
        self.dofmap = DofMap(mesh, self.k)
        # fault injection for the property suite: ignore n_e . n in the lifting
        self.flip_sign_fault = flip_sign_fault
        self.quad_degree = 2 * self.j + 4
        self._batch_size = batch_size
        self._batches = None
        self._blocks = None

    @property
    def ndof(self):
        return self.dofmap.total

    @property
    def batches(self):
        if self._batches is None:
            self._batches = cell_batches(self.mesh, self.quad_degree, size=self._batch_size)
        return self._batches

    @property
    def blocks(self):
        """Per-batch :class:`~sfwg.weaklap.ElementBlock` operators, in batch order."""
        if self._blocks is None:
            from .weaklap import build_blocks

            self._blocks = build_blocks(self)
        return self._blocks

    def zero(self):
        return WgFunction(self, np.zeros(self.ndof))

    def __repr__(self):
        return f"WgSpace(k={self.k}, j={self.j}, ndof={self.ndof}, mesh={self.mesh!r})"


class WgFunction:
    """Coefficient vector over a :class:`DofMap`, i.e. ``v = {v_0, v_b, v_n n_e}``."""

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.ndof,):
            raise InvalidArgumentError(f"expected {space.ndof} coefficients, got shape {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs

    def v0(self, cell):
        return self.coeffs[self.space.dofmap.cell_dofs(cell)]

    def vb(self, edge):
        return self.coeffs[self.space.dofmap.vb_dofs(edge)]

    def vn(self, edge):
        return self.coeffs[self.space.dofmap.vn_dofs(edge)]

    def local(self, cell):
        return self.coeffs[self.space.dofmap.local_dofs(cell)]

    def _check(self, other):
        if other.space is not self.space:
            raise InvalidArgumentError("functions live in different spaces")

    def __add__(self, other):
        self._check(other)
        return WgFunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return WgFunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, alpha):
        return WgFunction(self.space, alpha * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return WgFunction(self.space, -self.coeffs)
