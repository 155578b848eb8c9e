import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfwg.assembly import apply_boundary, assemble
from sfwg.errors import (
    NORMS,
    ErrorReport,
    convergence_rates,
    discrete_h2_norm,
    energy_norm,
    error_report,
    rate,
    weak_laplacian_l2,
)
from sfwg.mesh import GridFamily, generate
from sfwg.polybasis import interpolate_Qh
from sfwg.solutions import get_solution, polynomial_solution
from sfwg.solver import solve
from sfwg.space import WgFunction, WgSpace


def qh(space, u, grad):
    return interpolate_Qh(u, grad, space)


def random_function(space, seed):
    return WgFunction(space, np.random.default_rng(seed).standard_normal(space.ndof))


class TestEnergyNorm:
    @pytest.mark.parametrize("kind", ["triangle", "pentagon"])
    def test_linear_is_zero(self, kind):
        V = WgSpace(generate(GridFamily(kind, 2)), 2)
        v = qh(V, lambda x, y: x, lambda x, y: (1.0 + 0 * x, 0 * y))
        assert energy_norm(v) <= 1e-10

    @pytest.mark.parametrize("kind", ["triangle", "pentagon"])
    def test_r2_is_four(self, kind):
        V = WgSpace(generate(GridFamily(kind, 3)), 2)
        v = qh(V, lambda x, y: x**2 + y**2, lambda x, y: (2 * x, 2 * y))
        assert energy_norm(v) == pytest.approx(4.0, rel=1e-9)

    def test_random_matches_quadrature(self):
        V = WgSpace(generate(GridFamily("pentagon", 2)), 2)
        v = random_function(V, 4)
        assert energy_norm(v) == pytest.approx(weak_laplacian_l2(v), rel=1e-10)

    @pytest.mark.parametrize("kind,k", [("triangle", 3), ("pentagon", 2)])
    def test_squared_equals_quadratic_form(self, kind, k):
        V = WgSpace(generate(GridFamily(kind, 2)), k)
        x = np.random.default_rng(8).standard_normal(V.ndof)
        A = assemble(V).A
        assert energy_norm(WgFunction(V, x)) == pytest.approx(math.sqrt(x @ (A @ x)), rel=1e-10)


class TestDiscreteH2:
    @pytest.mark.parametrize("kind", ["triangle", "pentagon"])
    @pytest.mark.parametrize("k", [2, 3])
    def test_harmonic_polynomial_is_zero(self, kind, k):
        V = WgSpace(generate(GridFamily(kind, 2)), k)
        v = qh(V, lambda x, y: x * y - x + 2, lambda x, y: (y - 1, x))
        assert discrete_h2_norm(v) <= 1e-9

    @pytest.mark.parametrize("kind", ["triangle", "pentagon"])
    def test_single_edge_trace(self, kind):
        m = generate(GridFamily(kind, 2))
        V = WgSpace(m, 2)
        e = int(np.flatnonzero(~m.boundary)[3])
        x = np.zeros(V.ndof)
        x[V.dofmap.vb_dofs(e)[0]] = 1.0
        expected = sum(m.diameters[c] ** -3 * m.edge_lengths[e] for c in m.edge_cells[e])
        assert discrete_h2_norm(WgFunction(V, x)) ** 2 == pytest.approx(expected, rel=1e-12)

    def test_single_edge_normal_coefficient(self):
        # v_n n_e . n picks up the sign of each side; the square does not care
        m = generate(GridFamily("triangle", 2))
        V = WgSpace(m, 2)
        e = int(np.flatnonzero(~m.boundary)[0])
        x = np.zeros(V.ndof)
        x[V.dofmap.vn_dofs(e)[0]] = 1.0
        expected = sum(m.diameters[c] ** -1 * m.edge_lengths[e] for c in m.edge_cells[e])
        assert discrete_h2_norm(WgFunction(V, x)) ** 2 == pytest.approx(expected, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(-1e3, 1e3).filter(lambda a: abs(a) > 1e-3), seed=st.integers(0, 1000))
def test_homogeneous(alpha, seed):
    V = WgSpace(generate(GridFamily("pentagon", 1)), 2)
    v = random_function(V, seed)
    for norm in (energy_norm, discrete_h2_norm, weak_laplacian_l2):
        assert norm(v * alpha) == pytest.approx(abs(alpha) * norm(v), rel=1e-12)


class TestErrorReport:
    def test_zero_solution(self):
        V = WgSpace(generate(GridFamily("triangle", 2)), 2)
        zero = polynomial_solution("zero", np.zeros((3, 3)))
        r = error_report(V.zero(), zero)
        assert (r.l2, r.h1, r.energy, r.energy_qh, r.h2h) == (0, 0, 0, 0, 0)

    @pytest.mark.parametrize("kind", ["triangle", "pentagon"])
    @pytest.mark.parametrize("level", [1, 2, 3])
    def test_quadratic_patch(self, kind, level):
        sol = get_solution("poly2")
        V = WgSpace(generate(GridFamily(kind, level)), 2)
        u = solve(apply_boundary(assemble(V, sol.bilaplacian), sol.value, grad=sol.grad))
        r = error_report(u, sol, level)
        assert max(getattr(r, n) for n in NORMS) <= 1e-9, r

    def test_interpolant_of_exact_has_zero_discrete_error(self):
        sol = get_solution("exp_xy")
        V = WgSpace(generate(GridFamily("pentagon", 2)), 2)
        r = error_report(qh(V, sol.value, sol.grad), sol)
        assert r.energy_qh == 0 and r.h2h == 0
        assert r.energy > 0 and r.l2 > 0

    def test_triangle_level7_energy(self):
        sol = get_solution("exp_xy")
        V = WgSpace(generate(GridFamily("triangle", 7)), 2)
        u = solve(apply_boundary(assemble(V, sol.bilaplacian), sol.value, grad=sol.grad))
        assert error_report(u, sol, 7).energy == pytest.approx(0.6912e-01, rel=0.02)


class TestRates:
    def test_quarter(self):
        assert rate(0.4, 0.1) == pytest.approx(2.0)

    def test_energy_p3(self):
        e = [0.2949e-01, 0.7384e-02, 0.1848e-02]
        assert [round(rate(a, b), 2) for a, b in zip(e, e[1:])] == [2.00, 2.00]

    def test_l2_p2_pentagon(self):
        assert rate(0.2477e-04, 0.6835e-05) == pytest.approx(1.86, abs=0.005)

    @pytest.mark.parametrize("pair", [(0.0, 0.1), (0.1, 0.0), (0.0, 0.0)])
    def test_zero_error_undefined(self, pair):
        assert math.isnan(rate(*pair))

    def test_uses_actual_h(self):
        assert rate(0.9, 0.1, 3.0, 1.0) == pytest.approx(2.0)


def fake_reports(values):
    return [ErrorReport(i + 1, 2.0 ** -i, 10 * 4**i, *([v] * 5)) for i, v in enumerate(values)]


class TestConvergenceReport:
    def test_first_rate_blank(self):
        rep = convergence_rates(fake_reports([0.4, 0.1, 0.025]))
        assert math.isnan(rep.rates["l2"][0])
        assert rep.rates["energy"][1:] == pytest.approx([2.0, 2.0])

    def test_zero_error_rate_is_blank(self):
        rep = convergence_rates(fake_reports([0.4, 0.0]))
        assert math.isnan(rep.rates["h1"][1])
        assert rep.to_csv().splitlines()[-1].split(",")[4] == ""

    def test_csv_and_markdown_same_numbers(self):
        rep = convergence_rates(fake_reports([0.31, 0.0779, 0.0195]), {"family": "triangle"})
        csv_rows = [line.split(",") for line in rep.to_csv().splitlines() if not line.startswith("#")][1:]
        md_rows = [line[2:-2].split(" | ") for line in rep.to_markdown().splitlines() if line.startswith("| ")][1:]
        assert len(csv_rows) == len(md_rows) == 3
        for c, md in zip(csv_rows, md_rows):
            assert c[0] == md[0]
            shown = [v for i, v in enumerate(c[3:]) if i % 3 != 2]
            assert shown == md[1:]

    def test_full_precision_column(self):
        rep = convergence_rates(fake_reports([0.123456789012]))
        row = rep.to_csv().splitlines()[1].split(",")
        assert row[3] == "1.2346E-01"
        assert float(row[5]) == 0.123456789012

    def test_metadata_and_failure(self):
        rep = convergence_rates(fake_reports([0.1]), {"k": 2})
        rep.failure = "level 2: boom"
        assert rep.to_csv().startswith("# k: 2\n")
        assert rep.to_csv().rstrip().endswith("# FAILED: level 2: boom")
        assert "**FAILED:** level 2: boom" in rep.to_markdown()
