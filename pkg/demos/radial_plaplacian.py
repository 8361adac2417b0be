"""Radial solutions of a coupled p-Laplacian system in the unit ball.

A constant right-hand side has a closed-form solution, which makes it a
good first check of the nested quadrature.  The second problem uses a
square-root nonlinearity and shows localization in a phi-section.
"""

import numpy as np

from coexist.cones import PhiSection
from coexist.nonlinearity import Nonlinearity
from coexist.plaplacian import (
    PParams,
    RadialProblem,
    check_conditions,
    harnack_check,
    solve_radial,
)

WINDOW = (0.25, 0.75)


def constant_case():
    half = Nonlinearity.constant(0.5)
    problem = RadialProblem(PParams(3, 3, 2, WINDOW), (half, half))
    alpha, beta = (1.0, 1.0), (0.01, 0.01)
    cert = check_conditions(problem, alpha, beta, "CC")
    print(f"constant case: certificate {'passes' if cert.passed else 'fails'}, cone constants {problem.params.c}")
    rec = solve_radial(problem, PhiSection(beta, alpha, WINDOW), np.ones((2, problem.N)), tol=1e-12)
    exact = (1 - problem.nodes**1.5) / 3
    print(f"  {rec.iterations} iterations, error vs closed form {np.max(np.abs(rec.u[0] - exact)):.1e}")
    print(f"  Harnack check: {harnack_check(rec.u[0], 3, 2).passed}")


def sqrt_case():
    f1 = Nonlinearity.from_expr("min(sqrt(u1), 10) + 0.01", monotone=(True, True))
    f2 = Nonlinearity.from_expr("min(sqrt(u2), 10) + 0.01", monotone=(True, True))
    problem = RadialProblem(PParams(3, 4, 2, WINDOW), (f1, f2))
    alpha, beta = (10.0, 10.0), (0.01, 0.01)
    cert = check_conditions(problem, alpha, beta, "CC")
    print(f"square-root case: certificate {'passes' if cert.passed else 'fails'}")
    rec = solve_radial(problem, PhiSection(beta, alpha, WINDOW), np.ones((2, problem.N)))
    for i in range(2):
        print(f"  u{i + 1}: min on window {rec.phi_values[i]:.6g}, max {rec.norms[i]:.6g}, inside {rec.inside[i]}")
    print(f"  residual {rec.residual:.1e} after {rec.iterations} iterations")


if __name__ == "__main__":
    constant_case()
    sqrt_case()
