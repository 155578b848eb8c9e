"""Numerical checks of the structural properties of the discretization.

Four suites: the commuting identity of the weak Laplacian, equivalence of the
energy norm with the discrete H2 norm, positive definiteness of the reduced
system, and annihilation of linear functions by the unconstrained matrix.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import apply_boundary, assemble, stiffness_matrix
from .errors import h2_factor
from .exceptions import NotSPDError, SfwgError
from .mesh import FamilyKind, GridFamily, family_meshes, generate
from .polybasis import batch_projection, interpolate_Qh
from .solutions import polynomial_solution
from .solver import cholesky_pivots
from .space import WgSpace

COMMUTING_TOL = 1e-10
KERNEL_TOL = 1e-10
DEGENERATION_FACTOR = 0.7


@dataclass(frozen=True)
class PropertyConfig:
    families: tuple = ("triangle", "pentagon")
    ks: tuple = (2, 3)
    seed: int = 20240501
    n_polynomials: int = 50
    n_vectors: int = 100
    commuting_level: int = 2
    equivalence_levels: int = 4
    spd_levels: int = 5
    kernel_levels: int = 3
    flip_sign_fault: bool = False
    exploratory: bool = False


@dataclass
class SuiteResult:
    name: str
    passed: bool | None
    rows: list = field(default_factory=list)
    message: str = ""


@dataclass
class PropertyReport:
    config: PropertyConfig
    suites: list

    @property
    def passed(self):
        return all(s.passed is not False for s in self.suites)

    def failing(self):
        return [s.name for s in self.suites if s.passed is False]

    def to_json(self):
        return json.dumps(
            {"config": asdict(self.config), "passed": self.passed, "failing": self.failing(),
             "suites": [asdict(s) for s in self.suites]},
            indent=2, default=_jsonable,
        )

    def summary(self):
        lines = []
        for s in self.suites:
            status = "REPORT" if s.passed is None else ("PASS" if s.passed else "FAIL")
            lines.append(f"{status:6s} {s.name}: {s.message}")
        return "\n".join(lines)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return str(x)


def _space(mesh, k, cfg, j=None):
    return WgSpace(mesh, k, j, flip_sign_fault=cfg.flip_sign_fault)


def random_polynomial(rng, degree, name="random"):
    """Polynomial with standard-normal coefficients on all ``x^a y^b``, ``a + b <= degree``."""
    c = np.zeros((degree + 1, degree + 1))
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            c[a, b] = rng.standard_normal()
    return polynomial_solution(name, c)


def commuting_residuals(space, poly):
    """Per-cell ``|| Delta_w(Q_h p) - Q_j(lap p) ||_{L2(T)}`` for a polynomial record."""
    qh = interpolate_Qh(poly.value, poly.grad, space)
    out = np.empty(space.mesh.n_cells)
    for blk in space.blocks:
        c = blk.lift(qh.coeffs[blk.dofs])
        q = batch_projection(poly.laplacian, blk.batch, space.j)
        d = np.einsum("cji,cj->ci", blk.L, c - q)  # L^T d
        out[blk.batch.cells] = np.sqrt(np.sum(d**2, axis=1))
    return out


def commuting_suite(cfg, rng):
    rows, ok = [], True
    for fam in cfg.families:
        mesh = generate(GridFamily(fam, cfg.commuting_level))
        for k in cfg.ks:
            space = _space(mesh, k, cfg)
            worst = 0.0
            for _ in range(cfg.n_polynomials):
                p = random_polynomial(rng, int(rng.integers(0, k + 1)))
                worst = max(worst, float(commuting_residuals(space, p).max()))
            good = worst <= COMMUTING_TOL
            ok &= good
            rows.append({"family": fam, "k": k, "level": cfg.commuting_level, "max_residual": worst, "passed": good})
    worst = max(r["max_residual"] for r in rows)
    return SuiteResult("commuting_identity", ok, rows, f"max residual {worst:.3e} (tol {COMMUTING_TOL:g})")


def norm_ratios(space, vectors):
    """``|||v||| / ||v||_{2,h}`` for the columns of ``vectors`` ``(ndof, m)``."""
    num = np.zeros(vectors.shape[1])
    den = np.zeros(vectors.shape[1])
    for blk in space.blocks:
        v = vectors[blk.dofs]  # (C, n_loc, m)
        num += np.sum(np.einsum("cia,cam->cim", blk.G, v) ** 2, axis=(0, 1))
        den += np.sum(np.einsum("cra,cam->crm", h2_factor(blk, space.k), v) ** 2, axis=(0, 1))
    return np.sqrt(num / den)


def random_interior_vectors(space, rng, m):
    """Random members of the subspace with vanishing boundary ``v_b`` and ``v_n``."""
    x = rng.standard_normal((space.ndof, m))
    x[space.dofmap.boundary_dofs()] = 0.0
    return x


def equivalence_rows(cfg, rng, families, j_shift=None):
    rows = []
    for fam in families:
        for k in cfg.ks:
            for level, mesh in enumerate(family_meshes(GridFamily(fam, 1), cfg.equivalence_levels), start=1):
                j = None if j_shift is None else k + j_shift
                space = _space(mesh, k, cfg, j)
                r = norm_ratios(space, random_interior_vectors(space, rng, cfg.n_vectors))
                rows.append({"family": fam, "k": k, "j": space.j, "level": level,
                             "min": float(r.min()), "max": float(r.max())})
    return rows


def equivalence_suite(cfg, rng):
    rows = equivalence_rows(cfg, rng, cfg.families)
    ok = True
    base = {}
    for row in rows:
        key = (row["family"], row["k"])
        base.setdefault(key, row["min"])
        good = (math.isfinite(row["min"]) and math.isfinite(row["max"]) and row["min"] > 0.0
                and row["min"] >= DEGENERATION_FACTOR * base[key])
        row["passed"] = good
        ok &= good
    lo = min(r["min"] for r in rows)
    hi = max(r["max"] for r in rows)
    return SuiteResult("norm_equivalence", ok, rows, f"ratio range [{lo:.4g}, {hi:.4g}] over {len(rows)} meshes")


def reduced_matrix(space):
    A, _ = apply_boundary(assemble(space)).reduced()
    return A


def spd_suite(cfg, rng):
    rows, ok = [], True
    for fam in cfg.families:
        for k in cfg.ks:
            for level, mesh in enumerate(family_meshes(GridFamily(fam, 1), cfg.spd_levels), start=1):
                space = _space(mesh, k, cfg)
                try:
                    piv = cholesky_pivots(reduced_matrix(space))
                    row = {"min_pivot": float(piv.min()), "max_pivot": float(piv.max()), "passed": True}
                except NotSPDError as exc:
                    row = {"error": str(exc), "passed": False}
                    ok = False
                rows.append({"family": fam, "k": k, "level": level, "n": space.ndof, **row})
    bad = [f"{r['family']} k={r['k']} level {r['level']}" for r in rows if not r["passed"]]
    msg = "all pivots positive" if ok else "not positive definite: " + ", ".join(bad)
    return SuiteResult("spd", ok, rows, msg)


LINEAR = {"one": [[1.0, 0.0], [0.0, 0.0]], "x": [[0.0, 0.0], [1.0, 0.0]], "y": [[0.0, 1.0], [0.0, 0.0]]}


def kernel_defect(space, A=None, poly=None):
    """``||A v|| / (||A||_1 ||v||)`` for ``v = Q_h p`` and a linear ``p``."""
    if A is None:
        A = stiffness_matrix(space)
    v = interpolate_Qh(poly.value, poly.grad, space).coeffs
    return float(np.linalg.norm(A @ v) / (spla.norm(A, 1) * np.linalg.norm(v)))


def kernel_suite(cfg, rng):
    rows, ok = [], True
    polys = [polynomial_solution(n, c) for n, c in LINEAR.items()]
    a, b, c = rng.standard_normal(3)
    polys.append(polynomial_solution("random_linear", [[a, b], [c, 0.0]]))
    for fam in cfg.families:
        for k in cfg.ks:
            for level, mesh in enumerate(family_meshes(GridFamily(fam, 1), cfg.kernel_levels), start=1):
                space = _space(mesh, k, cfg)
                A = stiffness_matrix(space)
                worst = max(kernel_defect(space, A, p) for p in polys)
                good = worst <= KERNEL_TOL
                ok &= good
                rows.append({"family": fam, "k": k, "level": level, "max_defect": worst, "passed": good})
    worst = max(r["max_defect"] for r in rows)
    return SuiteResult("kernel", ok, rows, f"max relative defect {worst:.3e} (tol {KERNEL_TOL:g})")


def exploratory_suite(cfg, rng):
    """``j = k + 1``: norm-equivalence intervals on pentagons and SPD status on both families."""
    rows = equivalence_rows(cfg, rng, [f for f in cfg.families if FamilyKind(f) is FamilyKind.PENTAGON], 1)
    for fam in cfg.families:
        for k in cfg.ks:
            for level, mesh in enumerate(family_meshes(GridFamily(fam, 1), 3), start=1):
                space = _space(mesh, k, cfg, k + 1)
                try:
                    piv = cholesky_pivots(reduced_matrix(space))
                    status = f"spd (min pivot {piv.min():.3e})"
                except NotSPDError as exc:
                    status = f"not spd: {exc}"
                rows.append({"family": fam, "k": k, "j": k + 1, "level": level, "spd": status})
    return SuiteResult("exploratory_j_k_plus_1", None, rows, f"{len(rows)} rows reported, no assertion")


SUITES = {
    "commuting_identity": commuting_suite,
    "norm_equivalence": equivalence_suite,
    "spd": spd_suite,
    "kernel": kernel_suite,
}


def run_properties(cfg=PropertyConfig(), only=None):
    """Run the suites (all, or the names in ``only``) with one seeded generator each."""
    names = list(SUITES) if only is None else list(only)
    suites = []
    for i, name in enumerate(names):
        rng = np.random.default_rng([cfg.seed, i])
        try:
            suites.append(SUITES[name](cfg, rng))
        except SfwgError as exc:
            suites.append(SuiteResult(name, False, message=f"error: {exc}"))
    if cfg.exploratory:
        suites.append(exploratory_suite(cfg, np.random.default_rng([cfg.seed, len(SUITES)])))
    return PropertyReport(cfg, suites)
