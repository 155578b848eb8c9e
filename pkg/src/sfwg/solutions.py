"""Registry of exact solutions with closed-form derivatives on the unit square."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class SolutionRecord:
    """Exact solution ``u`` with the derivatives the solver and error norms need.

    Boundary data are derived from ``value`` (``g = u``) and ``grad``
    (``phi = grad u . n``); the source is ``f = bilaplacian``.
    """

    name: str
    value: Callable
    grad: Callable
    laplacian: Callable
    bilaplacian: Callable
    degree: int | None = None

    def __post_init__(self):
        for field in ("value", "grad", "laplacian", "bilaplacian"):
            if getattr(self, field) is None:
                raise ConfigurationError(f"solution {self.name!r} lacks {field}")


def _exp_xy():
    def u(x, y):
        return np.exp(x + y)

    return SolutionRecord(
        "exp_xy",
        value=u,
        grad=lambda x, y: (u(x, y), u(x, y)),
        laplacian=lambda x, y: 2.0 * u(x, y),
        bilaplacian=lambda x, y: 4.0 * u(x, y),
    )


def _sin_sin():
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    return SolutionRecord(
        "sin_sin",
        value=u,
        grad=lambda x, y: (pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)),
        laplacian=lambda x, y: -2 * pi**2 * u(x, y),
        bilaplacian=lambda x, y: 4 * pi**4 * u(x, y),
    )


def polynomial_solution(name, coeffs):
    """Solution from a coefficient matrix ``c[a, b]`` of ``x^a y^b``."""
    c = np.asarray(coeffs, dtype=float)
    cx = npoly.polyder(c, axis=0)
    cy = npoly.polyder(c, axis=1)
    lap = _pad(npoly.polyder(c, 2, axis=0), npoly.polyder(c, 2, axis=1))
    bilap = _pad(npoly.polyder(lap, 2, axis=0), npoly.polyder(lap, 2, axis=1))
    nz = np.argwhere(c != 0)
    degree = int(nz.sum(axis=1).max()) if len(nz) else 0

    def ev(cc):
        return lambda x, y: npoly.polyval2d(x, y, cc) * np.ones(np.broadcast(x, y).shape)

    return SolutionRecord(
        name,
        value=ev(c),
        grad=lambda x, y: (ev(cx)(x, y), ev(cy)(x, y)),
        laplacian=ev(lap),
        bilaplacian=ev(bilap),
        degree=degree,
    )


def _pad(a, b):
    n = max(a.shape[0], b.shape[0], 1)
    m = max(a.shape[1], b.shape[1], 1)
    out = np.zeros((n, m))
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] += b
    return out


def _coeffs(terms, n=5):
    c = np.zeros((n, n))
    for (a, b), v in terms.items():
        c[a, b] = v
    return c


REGISTRY = {
    "exp_xy": _exp_xy(),
    "sin_sin": _sin_sin(),
    "poly2": polynomial_solution(
        "poly2", _coeffs({(0, 0): 1.0, (1, 0): 1.0, (0, 1): -2.0, (2, 0): 1.0, (1, 1): -1.0, (0, 2): 0.5})
    ),
    "poly3": polynomial_solution(
        "poly3",
        _coeffs({(0, 0): 0.5, (1, 0): -1.0, (0, 1): 1.0, (2, 0): 0.5, (1, 1): 2.0, (0, 2): -1.0,
                 (3, 0): 1.0, (2, 1): -2.0, (1, 2): 1.5, (0, 3): 0.5}),
    ),
    "poly4": polynomial_solution(
        "poly4",
        _coeffs({(0, 0): 1.0, (1, 1): 1.0, (2, 0): -1.0, (3, 0): 0.5, (1, 2): -1.0,
                 (2, 2): 1.0, (4, 0): 0.25, (3, 1): -0.5, (0, 4): 0.5}),
    ),
}


def get_solution(name) -> SolutionRecord:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown solution {name!r}; known: {', '.join(sorted(REGISTRY))}") from None


def fd_consistency(sol: SolutionRecord, n_points=10, step=1e-3, seed=0):
    """Largest relative mismatch between the registered derivatives and central differences.

    Checks ``grad`` against differences of ``value``, ``laplacian`` against the
    five-point Laplacian of ``value`` and ``bilaplacian`` against the five-point
    Laplacian of ``laplacian``, at random interior points.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.1, 0.9, size=(n_points, 2))
    x, y = pts[:, 0], pts[:, 1]
    s = step

    def lap5(f):
        return (f(x + s, y) + f(x - s, y) + f(x, y + s) + f(x, y - s) - 4 * f(x, y)) / s**2

    gx, gy = sol.grad(x, y)
    pairs = [
        (gx, (sol.value(x + s, y) - sol.value(x - s, y)) / (2 * s)),
        (gy, (sol.value(x, y + s) - sol.value(x, y - s)) / (2 * s)),
        (sol.laplacian(x, y), lap5(sol.value)),
        (sol.bilaplacian(x, y), lap5(sol.laplacian)),
    ]
    worst = 0.0
    for exact, approx in pairs:
        scale = np.maximum(np.abs(exact), 1.0)
        worst = max(worst, float(np.max(np.abs(exact - approx) / scale)))
    return worst
