"""Sparse SPD solves for the reduced weak Galerkin system."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import InvalidArgumentError, IterativeFailureError, NotSPDError
from .space import WgFunction

log = logging.getLogger(__name__)

DIRECT_LIMIT = 200_000


class Method(enum.Enum):
    AUTO = "auto"
    CHOLESKY = "cholesky"
    CG = "cg"


class Preconditioner(enum.Enum):
    NONE = "none"
    JACOBI = "jacobi"


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.AUTO
    tol: float = 1e-12
    maxiter: int = 20000
    preconditioner: Preconditioner = Preconditioner.JACOBI
    condense: bool = False

    def __post_init__(self):
        for name, cls in (("method", Method), ("preconditioner", Preconditioner)):
            value = getattr(self, name)
            if isinstance(value, str):
                object.__setattr__(self, name, cls(value))
        if not 0.0 < self.tol < 1.0:
            raise InvalidArgumentError(f"tolerance must lie in (0, 1), got {self.tol}")
        if self.maxiter < 1:
            raise InvalidArgumentError(f"maxiter must be at least 1, got {self.maxiter}")


class SymmetricFactor:
    """LDL^T-type factorization of an SPD matrix by symmetric-mode SuperLU.

    Diagonal pivoting only (threshold 0) with a symmetric fill-reducing
    ordering, so the pivots are those of a Cholesky factorization of
    ``P A P^T`` squared; a non-positive pivot means ``A`` is not SPD.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        try:
            self.lu = spla.splu(
                A,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise NotSPDError(f"factorization broke down: {exc}") from exc
        if not np.array_equal(self.lu.perm_r, self.lu.perm_c):
            raise NotSPDError("factorization needed off-diagonal pivoting")
        self.pivots = self.lu.U.diagonal()
        if not np.all(self.pivots > 0):
            bad = int(np.sum(self.pivots <= 0))
            raise NotSPDError(f"{bad} non-positive pivot(s) in symmetric factorization")

    def solve(self, b):
        return self.lu.solve(b)


def cholesky_pivots(A):
    """Pivots of the symmetric factorization; raises :class:`NotSPDError` if any is <= 0."""
    return SymmetricFactor(A).pivots


def solve_spd(A, b, config=SolverConfig()):
    """Solve an SPD system, returning the solution and its relative residual."""
    A = sp.csr_matrix(A)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros_like(b), 0.0
    method = config.method
    if method is Method.AUTO:
        method = Method.CHOLESKY if A.shape[0] <= DIRECT_LIMIT else Method.CG

    if method is Method.CHOLESKY:
        fac = SymmetricFactor(A)
        x = fac.solve(b)
        res = np.linalg.norm(b - A @ x) / nb
        for _ in range(3):
            if res <= 1e-10:
                break
            x = x + fac.solve(b - A @ x)
            res = np.linalg.norm(b - A @ x) / nb
        if res > 1e-10:
            log.warning("direct solve residual %.3e above 1e-10 after refinement", res)
        return x, res

    M = None
    if config.preconditioner is Preconditioner.JACOBI:
        d = A.diagonal()
        if np.any(d <= 0):
            raise NotSPDError("non-positive diagonal entry")
        M = sp.diags(1.0 / d)
    x, info = spla.cg(A, b, rtol=config.tol, atol=0.0, maxiter=config.maxiter, M=M)
    res = np.linalg.norm(b - A @ x) / nb
    if info != 0 or res > config.tol * 10:
        raise IterativeFailureError(f"conjugate gradients did not converge (info={info})", res)
    return x, res


def _condense(A, b, n_interior, block):
    """Eliminate the block-diagonal leading ``n_interior`` unknowns.

    Returns the Schur complement system and a back-substitution closure.
    """
    A = sp.csr_matrix(A)
    A00 = A[:n_interior, :n_interior].tocoo()
    nc = n_interior // block
    blocks = np.zeros((nc, block, block))
    if np.any(A00.row // block != A00.col // block):
        raise InvalidArgumentError("interior block is not block diagonal")
    blocks[A00.row // block, A00.row % block, A00.col % block] = A00.data
    inv = np.linalg.inv(blocks)
    rows = np.repeat(np.arange(n_interior).reshape(nc, block), block, axis=1).ravel()
    cols = np.tile(np.arange(n_interior).reshape(nc, block), (1, block)).ravel()
    A00_inv = sp.csr_matrix((inv.ravel(), (rows, cols)), shape=(n_interior, n_interior))
    A0e = A[:n_interior, n_interior:]
    Ae0 = A[n_interior:, :n_interior]
    S = (A[n_interior:, n_interior:] - Ae0 @ A00_inv @ A0e).tocsr()
    S = 0.5 * (S + S.T)
    rhs = b[n_interior:] - Ae0 @ (A00_inv @ b[:n_interior])

    def back(xe):
        return np.concatenate([A00_inv @ (b[:n_interior] - A0e @ xe), xe])

    return S, rhs, back


def solve(system, config=SolverConfig()):
    """Solve a constrained :class:`~sfwg.assembly.LinearSystem` into a :class:`WgFunction`."""
    A, b = system.reduced()
    if config.condense:
        dm = system.space.dofmap
        n_int = dm.n_interior
        # interior DOFs are never constrained and lead the free ordering
        if len(system.fixed) and system.fixed.min() < n_int:
            raise InvalidArgumentError("condensation requires unconstrained interior DOFs")
        S, rhs, back = _condense(A, b, n_int, dm.n_cell)
        xe, _ = solve_spd(S, rhs, config)
        x = back(xe)
    else:
        x, res = solve_spd(A, b, config)
        log.debug("solved %d unknowns, relative residual %.3e", len(b), res)
    return WgFunction(system.space, system.expand(x))
