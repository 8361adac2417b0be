"""Shared oracles and generators for the test suite."""

from __future__ import annotations

import math

import numpy as np

from coexist import expr
from coexist.hammerstein import HammersteinProblem, KernelSpec
from coexist.nonlinearity import Nonlinearity

H_SOURCE = "piecewise(u1; 0, 1: cbrt(u1); 1, 10: u1^3; 10, inf: cbrt(u1 - 10) + 1000)"
F1_SOURCE = f"{H_SOURCE} * (1 + sin(u2)^2)"
F2_SOURCE = "u2^2 * (1 + sin(u1)^2)"

EXAMPLE_LEVELS = [
    ((2.0**-2, 2.0), (2.0**-9, 2.0**9)),
    ((2.0**9 + 10, 2.0), (2.0**6, 2.0**9)),
    ((2.0**9 + 10, 2.0), (2.0**-9, 2.0**9)),
]


def h_closure(u1):
    """Hand-coded h, independent of the expression parser."""
    u1 = np.asarray(u1, dtype=float)
    return np.where(u1 <= 1, np.cbrt(u1), np.where(u1 < 10, u1**3, np.cbrt(u1 - 10) + 1000))


def f1_closure(u1, u2):
    return h_closure(u1) * (1 + np.sin(u2) ** 2)


def f2_closure(u1, u2):
    return np.asarray(u2, float) ** 2 * (1 + np.sin(u1) ** 2)


def example_problem(N: int = 257) -> HammersteinProblem:
    k = KernelSpec()
    return HammersteinProblem(
        (k, k), (Nonlinearity.from_expr(F1_SOURCE), Nonlinearity.from_expr(F2_SOURCE)), N=N
    )


def constant_problem(value: float = 1.0, N: int = 257) -> HammersteinProblem:
    k = KernelSpec()
    f = Nonlinearity.constant(value)
    return HammersteinProblem((k, k), (f, f), N=N)


_UNARY = ("neg", "abs", "sin", "cos", "cbrt", "sqrt", "exp", "log")
_BINARY = ("+", "-", "*", "/", "^", "min", "max")


def random_ast(rng: np.random.Generator, depth: int = 4):
    """Random expression tree over ``u1``, ``u2`` (structure only; values may be undefined)."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return expr.Var(("u1", "u2")[rng.integers(2)])
        return expr.Const(float(rng.choice([0.0, 1.0, 2.5, 1e-5, 3e12, math.pi, rng.uniform(0, 100)])))
    kind = rng.random()
    if kind < 0.3:
        return expr.Unary(_UNARY[rng.integers(len(_UNARY))], random_ast(rng, depth - 1))
    if kind < 0.9:
        return expr.Binary(_BINARY[rng.integers(len(_BINARY))], random_ast(rng, depth - 1), random_ast(rng, depth - 1))
    cuts = np.sort(rng.choice(np.arange(1, 20), size=rng.integers(1, 3), replace=False)).astype(float)
    edges = [0.0, *cuts, math.inf]
    pieces = tuple((edges[i], edges[i + 1], random_ast(rng, depth - 1)) for i in range(len(edges) - 1))
    return expr.Piecewise(("u1", "u2")[rng.integers(2)], pieces)


def sign_change_cells(g, lower, upper, step: float = 1e-3) -> np.ndarray:
    """Centres of grid cells on which every component of a planar field changes sign."""
    xs = np.arange(lower[0], upper[0] + step / 2, step)
    ys = np.arange(lower[1], upper[1] + step / 2, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    G = np.asarray(g(np.stack([X, Y])), dtype=float)
    both = np.ones((xs.size - 1, ys.size - 1), dtype=bool)
    for comp in G:
        s = np.sign(comp)
        corners = np.stack([s[:-1, :-1], s[1:, :-1], s[:-1, 1:], s[1:, 1:]])
        both &= (corners.min(axis=0) <= 0) & (corners.max(axis=0) >= 0)
    i, j = np.nonzero(both)
    return np.column_stack([(xs[i] + xs[i + 1]) / 2, (ys[j] + ys[j + 1]) / 2])


def planted_linear_system(rng: np.random.Generator, n: int = 2, dominance: float = 3.0):
    """``g(x) = M (x - x*)`` with strongly diagonally dominant rows and ``x*`` in ``[0.3, 0.7]^n``.

    Row signs are random, so each coordinate satisfies condition A or B on
    the unit cube.
    """
    M = rng.uniform(-1, 1, (n, n))
    np.fill_diagonal(M, 0.0)
    diag = dominance * np.abs(M).sum(axis=1) + rng.uniform(0.5, 1.0, n)
    M += np.diag(diag)
    M *= rng.choice([-1.0, 1.0], n)[:, None]
    x_star = rng.uniform(0.3, 0.7, n)

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.tensordot(M, x - x_star.reshape((-1,) + (1,) * (x.ndim - 1)), axes=1)

    return g, M, x_star
