"""Convergence studies over a grid family."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .assembly import apply_boundary, assemble
from .errors import convergence_rates, error_report
from .exceptions import ConfigurationError, SfwgError
from .mesh import DEFAULT_ALPHA, FamilyKind, GridFamily, family_meshes
from .solutions import get_solution
from .solver import SolverConfig, solve
from .space import WgSpace

log = logging.getLogger(__name__)

MAX_LEVEL = 8
FORMATS = ("csv", "md")


def parse_levels(text):
    """``"A..B"`` or ``"A"`` to an inclusive ``(A, B)`` pair."""
    parts = str(text).split("..")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ConfigurationError(f"level range must look like 'A..B', got {text!r}") from None
    return lo, hi


@dataclass(frozen=True)
class RunConfig:
    family: FamilyKind
    levels: tuple
    k: int = 2
    j: int | None = None
    solution: str = "exp_xy"
    solver: SolverConfig = field(default_factory=SolverConfig)
    format: str = "csv"
    out: str | None = None
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if isinstance(self.family, str):
            try:
                object.__setattr__(self, "family", FamilyKind(self.family))
            except ValueError:
                raise ConfigurationError(f"unknown family {self.family!r}") from None
        if isinstance(self.levels, str):
            object.__setattr__(self, "levels", parse_levels(self.levels))
        lo, hi = self.levels
        if not 1 <= lo <= hi <= MAX_LEVEL:
            raise ConfigurationError(f"level range {lo}..{hi} must be nonempty within 1..{MAX_LEVEL}")
        if self.k < 2:
            raise ConfigurationError(f"k must be at least 2, got {self.k}")
        if self.j is not None and self.j <= self.k:
            raise ConfigurationError(f"j must exceed k, got j={self.j}, k={self.k}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}, got {self.format!r}")
        get_solution(self.solution)

    @property
    def default_j(self):
        if self.j is not None:
            return self.j
        return self.k + 2 if self.family is FamilyKind.TRIANGLE else self.k + 3

    def meta(self):
        lo, hi = self.levels
        meta = {
            "family": self.family.value,
            "levels": f"{lo}..{hi}",
            "k": self.k,
            "j": self.default_j,
            "solution": self.solution,
            "solver": self.solver.method.value,
        }
        if self.family is FamilyKind.PENTAGON:
            meta["alpha"] = self.alpha
        if self.solver.condense:
            meta["condense"] = True
        return meta


def run_convergence(config: RunConfig):
    """Solve on every requested level and tabulate errors and rates.

    A failure at some level stops the sweep; the levels already solved are
    returned with ``failure`` set.
    """
    sol = get_solution(config.solution)
    lo, hi = config.levels
    reports = []
    failure = None
    fam = GridFamily(config.family, lo, config.alpha)
    try:
        for level, mesh in enumerate(family_meshes(fam, hi), start=lo):
            space = WgSpace(mesh, config.k, config.default_j)
            system = apply_boundary(assemble(space, sol.bilaplacian), sol.value, grad=sol.grad)
            u_h = solve(system, config.solver)
            rep = error_report(u_h, sol, level)
            log.info("level %d: ndof=%d energy=%.4e l2=%.4e", level, rep.ndof, rep.energy, rep.l2)
            reports.append(rep)
    except SfwgError as exc:
        failure = f"level {lo + len(reports)}: {exc}"
        log.error("%s", failure)
    out = convergence_rates(reports, config.meta())
    out.failure = failure
    return out


def render(report, fmt):
    return report.to_csv() if fmt == "csv" else report.to_markdown()
