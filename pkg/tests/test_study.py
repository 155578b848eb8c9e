import math

import pytest

from sfwg.exceptions import ConfigurationError
from sfwg.mesh import FamilyKind
from sfwg.solver import SolverConfig
from sfwg.study import RunConfig, parse_levels, render, run_convergence


@pytest.mark.parametrize("text,expected", [("1..3", (1, 3)), ("4", (4, 4)), (" 2..2", (2, 2))])
def test_parse_levels(text, expected):
    assert parse_levels(text) == expected


@pytest.mark.parametrize("text", ["", "a..b", "1..2..3", "1-3"])
def test_parse_levels_rejects(text):
    with pytest.raises(ConfigurationError):
        parse_levels(text)


def test_default_j_per_family():
    assert RunConfig("triangle", "1..2", k=3).default_j == 5
    assert RunConfig("pentagon", "1..2", k=3).default_j == 6
    assert RunConfig("pentagon", "1..2", k=2, j=7).default_j == 7


def test_config_normalises_strings():
    cfg = RunConfig("pentagon", "2..4")
    assert cfg.family is FamilyKind.PENTAGON and cfg.levels == (2, 4)
    assert cfg.meta()["alpha"] == 0.15
    assert "alpha" not in RunConfig("triangle", "1..2").meta()


@pytest.mark.parametrize("kw", [
    dict(family="hexagon"), dict(k=1), dict(j=2), dict(levels=(0, 1)), dict(levels=(1, 9)),
    dict(format="html"), dict(solution="missing"),
])
def test_config_rejects(kw):
    base = dict(family="triangle", levels=(1, 2))
    with pytest.raises(ConfigurationError):
        RunConfig(**{**base, **kw})


@pytest.mark.parametrize("kind", ["triangle", "pentagon"])
def test_quadratic_patch_every_level(kind):
    rep = run_convergence(RunConfig(kind, "1..3", k=2, solution="poly2"))
    assert rep.failure is None
    for r in rep.reports:
        assert max(r.l2, r.h1, r.energy) <= 1e-9, r


def test_exp_rates_close_to_theory():
    rep = run_convergence(RunConfig("triangle", "2..4", k=2))
    assert [r.level for r in rep.reports] == [2, 3, 4]
    assert math.isnan(rep.rates["energy"][0])
    assert rep.rates["energy"][-1] == pytest.approx(1.0, abs=0.15)
    assert rep.rates["l2"][-1] >= 1.8


def test_failure_is_reported_not_raised():
    rep = run_convergence(RunConfig("triangle", "2..3", solver=SolverConfig(method="cg", maxiter=1)))
    assert rep.reports == [] and rep.failure.startswith("level 2:")
    assert "FAILED" in render(rep, "md") and "FAILED" in render(rep, "csv")
