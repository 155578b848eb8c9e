"""Error norms, the discrete H2 norm, and convergence tables."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .polybasis import dim_cell, edge_monomials, evaluate_field, interpolate_Qh


def _local(v, blk):
    return v.coeffs[blk.dofs]


def energy_norm(v):
    """``(sum_T ||Delta_w v||_T^2)^(1/2)``."""
    total = 0.0
    for blk in v.space.blocks:
        total += np.sum(np.einsum("cia,ca->ci", blk.G, _local(v, blk)) ** 2)
    return math.sqrt(total)


def weak_laplacian_l2(v):
    """Same quantity as :func:`energy_norm` but integrated pointwise by quadrature."""
    total = 0.0
    for blk in v.space.blocks:
        c = blk.lift(_local(v, blk))
        vals = np.einsum("cqi,ci->cq", blk.batch.cell_basis(v.space.j), c)
        total += np.sum(blk.batch.qw * vals**2)
    return math.sqrt(total)


def h2_factor(blk, k):
    """Matrix ``F (C, R, n_loc)`` with ``||v||_{2,h,T}^2 = |F v_loc|^2``.

    Rows collect the cell Laplacian term and, on every side of the cell,
    ``h^{-3/2} (v_0 - v_b)`` and ``h^{-1/2} (grad v_0 . n - v_n n_e . n)``
    weighted by the square roots of the quadrature weights.
    """
    b = blk.batch
    C, nv = len(b), b.nv
    nk = dim_cell(k)
    n_loc = blk.dofs.shape[1]
    _, lapP = b.cell_basis(k, lap=True)
    Pe, gPe = b.edge_cell_basis(k, grad=True)
    dn = np.einsum("cegid,ced->cegi", gPe, b.normals)
    psi_b = edge_monomials(b.et, k)
    psi_n = edge_monomials(b.et, k - 1)
    G = b.ew.shape[2]
    sw = np.sqrt(b.ew)
    h = b.h[:, None, None, None]

    cell_rows = np.zeros((C, b.qw.shape[1], n_loc))
    cell_rows[..., :nk] = np.sqrt(b.qw)[..., None] * lapP

    trace = np.zeros((C, nv, G, n_loc))
    normal = np.zeros((C, nv, G, n_loc))
    trace[..., :nk] = Pe
    normal[..., :nk] = dn
    off_b = nk
    off_n = nk + nv * (k + 1)
    for e in range(nv):
        trace[:, e, :, off_b + e * (k + 1): off_b + (e + 1) * (k + 1)] = -psi_b[:, e]
        normal[:, e, :, off_n + e * k: off_n + (e + 1) * k] = -b.signs[:, e, None, None] * psi_n[:, e]
    trace *= sw[..., None] * h ** -1.5
    normal *= sw[..., None] * h ** -0.5
    return np.concatenate(
        [cell_rows, trace.reshape(C, nv * G, n_loc), normal.reshape(C, nv * G, n_loc)], axis=1
    )


def discrete_h2_norm(v):
    """Discrete H2 norm with cell Laplacian and scaled trace / normal-derivative jumps."""
    total = 0.0
    for blk in v.space.blocks:
        F = h2_factor(blk, v.space.k)
        total += np.sum(np.einsum("cra,ca->cr", F, _local(v, blk)) ** 2)
    return math.sqrt(total)


@dataclass
class ErrorReport:
    """Errors of one solve.

    ``energy`` realizes the weak Laplacian of the exact solution as the
    projection of ``lap u`` onto ``P_j``; ``energy_qh`` and ``h2h`` measure the
    discrete error ``Q_h u - u_h``.
    """

    level: int | None
    h: float
    ndof: int
    l2: float
    h1: float
    energy: float
    energy_qh: float
    h2h: float


def error_report(u_h, solution, level=None):
    space = u_h.space
    k, j = space.k, space.j
    nk = dim_cell(k)
    qh = interpolate_Qh(solution.value, solution.grad, space)
    diff = qh - u_h
    l2 = h1 = en = en_qh = h2 = 0.0
    for blk in space.blocks:
        b = blk.batch
        v = _local(u_h, blk)
        P, gP = b.cell_basis(j, grad=True)
        u0 = np.einsum("cqa,ca->cq", P[..., :nk], v[:, :nk])
        g0 = np.einsum("cqad,ca->cqd", gP[:, :, :nk], v[:, :nk])
        ue = evaluate_field(solution.value, b.qp)
        gx, gy = solution.grad(b.qp[..., 0], b.qp[..., 1])
        ge = np.stack(np.broadcast_arrays(gx, gy), axis=-1)
        l2 += np.sum(b.qw * (u0 - ue) ** 2)
        h1 += np.sum(b.qw[..., None] * (g0 - ge) ** 2)

        r = np.einsum("cq,cq,cqi->ci", b.qw, evaluate_field(solution.laplacian, b.qp), P)
        y = np.linalg.solve(blk.L, r[..., None])[..., 0]
        en += np.sum((y - np.einsum("cia,ca->ci", blk.G, v)) ** 2)
        w = _local(diff, blk)
        en_qh += np.sum(np.einsum("cia,ca->ci", blk.G, w) ** 2)
        h2 += np.sum(np.einsum("cra,ca->cr", h2_factor(blk, k), w) ** 2)
    return ErrorReport(level, space.mesh.h, space.ndof, *(math.sqrt(max(t, 0.0)) for t in (l2, h1, en, en_qh, h2)))


NORMS = ("l2", "h1", "energy", "energy_qh", "h2h")


def rate(e_coarse, e_fine, h_coarse=2.0, h_fine=1.0):
    """Observed order between two levels; ``nan`` when either error is zero."""
    if e_coarse <= 0.0 or e_fine <= 0.0:
        return float("nan")
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


@dataclass
class ConvergenceReport:
    reports: list
    rates: dict
    meta: dict = field(default_factory=dict)
    failure: str | None = None

    def rows(self):
        out = []
        for i, r in enumerate(self.reports):
            row = asdict(r)
            for n in NORMS:
                row[f"{n}_rate"] = self.rates[n][i]
            out.append(row)
        return out

    def to_csv(self):
        buf = io.StringIO()
        cols = ["level", "h", "ndof"]
        for n in NORMS:
            cols += [n, f"{n}_rate", f"{n}_full"]
        wr = csv.writer(buf, lineterminator="\n")
        for key, val in self.meta.items():
            buf.write(f"# {key}: {val}\n")
        wr.writerow(cols)
        for row in self.rows():
            out = [row["level"], f"{row['h']:.4e}", row["ndof"]]
            for n in NORMS:
                out += [f"{row[n]:.4E}", _fmt_rate(row[f'{n}_rate']), repr(row[n])]
            wr.writerow(out)
        if self.failure:
            buf.write(f"# FAILED: {self.failure}\n")
        return buf.getvalue()

    def to_markdown(self):
        lines = [f"<!-- {key}: {val} -->" for key, val in self.meta.items()]
        head = ["level", "‖u_h−u‖₀", "rate", "\\|u_h−u\\|₁,h", "rate", "⦀u_h−u⦀", "rate", "⦀Q_h u−u_h⦀", "rate", "‖Q_h u−u_h‖₂,h", "rate"]
        lines.append("| " + " | ".join(head) + " |")
        lines.append("|" + "---|" * len(head))
        for row in self.rows():
            cells = [str(row["level"])]
            for n in NORMS:
                cells += [f"{row[n]:.4E}", _fmt_rate(row[f'{n}_rate'])]
            lines.append("| " + " | ".join(cells) + " |")
        if self.failure:
            lines.append(f"\n**FAILED:** {self.failure}")
        return "\n".join(lines) + "\n"


def _fmt_rate(r):
    return "" if r is None or math.isnan(r) else f"{r:.2f}"


def convergence_rates(reports, meta=None):
    """Rates ``log(e_L / e_{L+1}) / log(h_L / h_{L+1})``; the first row has none."""
    rates = {n: [float("nan")] for n in NORMS}
    for prev, cur in zip(reports, reports[1:]):
        for n in NORMS:
            rates[n].append(rate(getattr(prev, n), getattr(cur, n), prev.h, cur.h))
    if not reports:
        rates = {n: [] for n in NORMS}
    return ConvergenceReport(list(reports), rates, dict(meta or {}))
