"""Radial positive solutions of ``(p1, p2)``-Laplacian systems on the unit ball.

Radial solutions satisfy

    -[r^(n-1) phi_p_i(u_i')]' = r^(n-1) f_i(u_1, u_2),   u_i'(0) = u_i(1) = 0,

and are the fixed points of

    T_i(u)(r) = int_r^1 phi_p_i^{-1}( s^(1-n) int_0^s tau^(n-1) f_i(u(tau)) dtau ) ds

on the cone of nonnegative nonincreasing functions with
``min_[a,b] v >= c_i ||v||``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .boxopt import MonotonicityError, spot_check_monotone
from .certificate import Certificate, LevelCertificate, SolutionRecord, greater, less, structural
from .cones import PhiSection, Regime, Tag, expected_index, phi_min, sup_norm, uniform_grid
from .hammerstein import NoConvergence

__all__ = [
    "PParams",
    "RadialProblem",
    "HarnackReport",
    "SectionEscape",
    "NoConvergence",
    "phi_p",
    "phi_p_inv",
    "cone_constant",
    "harnack_bound",
    "apply_T_radial",
    "residual_radial",
    "check_conditions",
    "harnack_check",
    "in_section",
    "solve_radial",
]

log = logging.getLogger(__name__)

DEFAULT_N = 513
ESCAPE_FACTOR = 1.1
MONOTONE_CHECK_RECT = ((0.0, 10.0), (0.0, 10.0))


class SectionEscape(RuntimeError):
    pass


def phi_p(t, p: float):
    """``|t|^(p-2) t``."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.abs(t) ** (p - 1)


def phi_p_inv(y, p: float):
    """Inverse of :func:`phi_p`: ``|y|^(1/(p-1)) sign(y)``."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.abs(y) ** (1.0 / (p - 1))


def cone_constant(p: float, n: int, a: float, b: float) -> float:
    """``c = ((p - n)/(p - 1)) (1 - b) a^(n/(p - 1))``."""
    if not p > n:
        raise ValueError(f"need p > n, got p={p}, n={n}")
    if not 0 < a < b < 1:
        raise ValueError(f"window must satisfy 0 < a < b < 1, got [{a}, {b}]")
    return (p - n) / (p - 1) * (1 - b) * a ** (n / (p - 1))


def harnack_bound(r, p: float, n: int):
    """Harnack factor ``((p - n)/(p - 1)) (1 - r) r^(n/(p - 1))``."""
    r = np.asarray(r, dtype=float)
    return (p - n) / (p - 1) * (1 - r) * r ** (n / (p - 1))


@dataclass(frozen=True)
class PParams:
    p1: float
    p2: float
    n: int
    window: tuple = (0.25, 0.75)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        a, b = (float(x) for x in self.window)
        object.__setattr__(self, "window", (a, b))
        for p in self.p:
            cone_constant(p, self.n, a, b)

    @property
    def p(self) -> tuple:
        return (float(self.p1), float(self.p2))

    @property
    def c(self) -> tuple:
        return tuple(cone_constant(p, self.n, *self.window) for p in self.p)


@dataclass(eq=False)
class RadialProblem:
    """Parameters, two nondecreasing nonlinearities and the grid size.

    Both nonlinearities must be tagged nondecreasing in both variables;
    the declaration is spot-checked on ``check_rect`` at construction.
    """

    params: PParams
    nonlinearities: tuple
    N: int = DEFAULT_N
    check_rect: tuple = MONOTONE_CHECK_RECT

    def __post_init__(self):
        self.nonlinearities = tuple(self.nonlinearities)
        if len(self.nonlinearities) != 2:
            raise ValueError("exactly two nonlinearities are required")
        for i, f in enumerate(self.nonlinearities):
            if not f.tag.both:
                raise MonotonicityError(f"f{i + 1} must be declared nondecreasing in both variables")
            spot_check_monotone(f, self.check_rect, f.tag)
        if self.N < 3:
            raise ValueError("the grid needs at least three nodes")

    @cached_property
    def nodes(self) -> np.ndarray:
        return uniform_grid(self.N)

    @cached_property
    def _weights(self) -> tuple:
        """Per-cell product-trapezoid weights for the inner and outer integrals."""
        s = self.nodes
        n = self.params.n
        inner = _linear_moment_weights(s, n - 1)
        outer = [_linear_moment_weights(s, 1.0 / (p - 1)) for p in self.params.p]
        return inner, outer

    def grid_meta(self) -> dict:
        return {
            "N": self.N,
            "quadrature": "product trapezoid, exact for r^k times piecewise-linear data",
            "conditions": "corner evaluation (nondecreasing nonlinearities)",
        }


def _linear_moment_weights(s: np.ndarray, k: float) -> tuple:
    """Weights ``(wl, wr)`` with ``int_{s_j}^{s_j+1} x^k L(x) dx = wl_j L_j + wr_j L_j+1``.

    ``L`` is the linear interpolant of the nodal values.
    """
    lo, hi = s[:-1], s[1:]
    h = hi - lo
    m1 = (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
    m2 = (hi ** (k + 2) - lo ** (k + 2)) / (k + 2)
    return (hi * m1 - m2) / h, (m2 - lo * m1) / h


def _check_input(problem: RadialProblem, u) -> np.ndarray:
    u = np.array(u, dtype=float)
    if u.shape != (2, problem.N):
        raise ValueError(f"expected a grid pair of shape (2, {problem.N}), got {u.shape}")
    scale = 1e-12 * (1.0 + float(np.max(np.abs(u))))
    if np.any(u < -scale):
        raise ValueError("grid pair must be nonnegative")
    if np.any(np.diff(u, axis=1) > scale):
        raise MonotonicityError("each component must be nonincreasing in r")
    return np.maximum(u, 0.0)


def apply_T_radial(problem: RadialProblem, u) -> np.ndarray:
    """Apply the radial operator at every node.

    Both nested integrals are cumulative product-trapezoid sums: the
    integrand is split as a power of the variable times a piecewise linear
    factor whose moments are integrated exactly.  Writing
    ``int_0^s tau^(n-1) f dtau = s^n G(s)``, the outer integrand is
    ``s^q G(s)^q`` with ``q = 1/(p - 1)``, and ``G(0) = f(u(0))/n``.
    """
    u = _check_input(problem, u)
    s = problem.nodes
    n = problem.params.n
    (wl, wr), outer = problem._weights
    out = np.empty_like(u)
    for i, f in enumerate(problem.nonlinearities):
        fv = np.broadcast_to(np.asarray(f(u[0], u[1]), dtype=float), s.shape)
        if not np.all(np.isfinite(fv)):
            raise ValueError(f"f{i + 1} is not finite on the input")
        if np.any(fv < 0):
            raise ValueError(f"f{i + 1} takes negative values")
        inner = np.concatenate([[0.0], np.cumsum(wl * fv[:-1] + wr * fv[1:])])
        G = np.empty_like(s)
        G[0] = fv[0] / n
        G[1:] = np.maximum(inner[1:], 0.0) / s[1:] ** n
        Gq = G ** (1.0 / (problem.params.p[i] - 1))
        ol, orr = outer[i]
        cells = ol * Gq[:-1] + orr * Gq[1:]
        tail = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
        out[i] = tail
    return out


def residual_radial(problem: RadialProblem, u) -> float:
    return sup_norm(np.asarray(u, float) - apply_T_radial(problem, u))


def _corner(i: int, own: float, other: float) -> tuple:
    return (own, other) if i == 0 else (other, own)


def check_conditions(problem: RadialProblem, alpha, beta, regime: Regime | str = "CC") -> Certificate:
    """Certificate of the localization conditions for one regime.

    Component ``i`` needs::

        f_i(beta_i, x_j)  > beta_i^(p_i - 1) / ((b - a) a^(n-1) (1 - b)^(p_i - 1))
        f_i(alpha_i, y_j) < alpha_i^(p_i - 1)

    where the other component enters as ``x_j = beta_j``, ``y_j = alpha_j``
    when it is compressive and as ``x_j = c_j alpha_j``, ``y_j = beta_j / c_j``
    when it is expansive.  The orderings ``beta_i / c_i < alpha_i``
    (compressive) or ``alpha_i < beta_i`` (expansive) and nonemptiness of
    the section (constant-function witness) are structural records.
    Nondecreasing nonlinearities make corner evaluation exact.
    """
    regime = Regime.parse(regime) if isinstance(regime, str) else regime
    alpha = tuple(float(x) for x in alpha)
    beta = tuple(float(x) for x in beta)
    if len(alpha) != 2 or len(beta) != 2 or len(regime.tags) != 2:
        raise ValueError("two components are required")
    if not all(x > 0 for x in alpha + beta):
        raise ValueError("alpha and beta must be positive")
    a, b = problem.params.window
    n = problem.params.n
    c = problem.params.c
    records, checks = [], []
    for i in range(2):
        j = 1 - i
        p = problem.params.p[i]
        f = problem.nonlinearities[i]
        other_c = regime.tags[j] is Tag.COMPRESSIVE
        x_j = beta[j] if other_c else c[j] * alpha[j]
        y_j = alpha[j] if other_c else beta[j] / c[j]
        low = float(np.asarray(f(*_corner(i, beta[i], x_j)), dtype=float))
        high = float(np.asarray(f(*_corner(i, alpha[i], y_j)), dtype=float))
        xs = f"beta{j + 1}" if other_c else f"c{j + 1}*alpha{j + 1}"
        ys = f"alpha{j + 1}" if other_c else f"beta{j + 1}/c{j + 1}"
        args_low = _corner(i, f"beta{i + 1}", xs)
        args_high = _corner(i, f"alpha{i + 1}", ys)
        records.append(greater(
            f"f{i + 1}({args_low[0]}, {args_low[1]}) > beta{i + 1}^(p{i + 1}-1)/((b-a)a^(n-1)(1-b)^(p{i + 1}-1))",
            low, beta[i] ** (p - 1) / ((b - a) * a ** (n - 1) * (1 - b) ** (p - 1)),
        ))
        records.append(less(
            f"f{i + 1}({args_high[0]}, {args_high[1]}) < alpha{i + 1}^(p{i + 1}-1)",
            high, alpha[i] ** (p - 1),
        ))
        if regime.tags[i] is Tag.COMPRESSIVE:
            checks.append(structural(f"beta{i + 1}/c{i + 1} < alpha{i + 1}", beta[i] / c[i] < alpha[i],
                                     f"{beta[i] / c[i]:.6g} vs {alpha[i]:.6g}"))
            nonempty = beta[i] <= alpha[i]
        else:
            checks.append(structural(f"alpha{i + 1} < beta{i + 1}", alpha[i] < beta[i],
                                     f"{alpha[i]:.6g} vs {beta[i]:.6g}"))
            nonempty = alpha[i] <= beta[i]
        checks.append(structural(f"section {i + 1} nonempty (constant witness)", nonempty))
    level = LevelCertificate(alpha, beta, records, checks, str(regime), expected_index(regime))
    meta = problem.grid_meta()
    meta.update({"p": list(problem.params.p), "n": n, "window": [a, b], "c": list(c)})
    return Certificate("plaplacian", [level], [], meta)


@dataclass(frozen=True)
class HarnackReport:
    passed: bool
    monotone: bool
    worst_margin: float
    worst_node: int

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "monotone": self.monotone,
            "worst_margin": self.worst_margin,
            "worst_node": self.worst_node,
        }


def harnack_check(v, p: float, n: int, tol: float = 1e-9, nodes=None) -> HarnackReport:
    """Check that ``v`` is nonincreasing and dominates the Harnack lower bound.

    Monotonicity allows increments up to ``tol``; the bound
    ``v(r) >= harnack_bound(r) ||v||`` may be missed by ``tol ||v||``.
    ``worst_margin`` is ``min_r (v(r) - harnack_bound(r) ||v||)`` and
    ``worst_node`` its index.
    """
    if not p > n:
        raise ValueError(f"need p > n, got p={p}, n={n}")
    v = np.asarray(v, dtype=float)
    r = uniform_grid(v.size) if nodes is None else np.asarray(nodes, dtype=float)
    norm = sup_norm(v)
    monotone = bool(np.all(np.diff(v) <= tol))
    margins = v - harnack_bound(r, p, n) * norm
    k = int(np.argmin(margins))
    worst = float(margins[k])
    return HarnackReport(monotone and worst >= -tol * norm, monotone, worst, k)


def _memberships(u, section: PhiSection, regime: Regime, nodes) -> tuple:
    """Per-component ``(phi values, norms, inside flags)``.

    Compressive components need ``inner < phi(u_i)`` and ``||u_i|| < outer``;
    for expansive ones the roles swap to ``inner < ||u_i||`` and
    ``phi(u_i) < outer``.
    """
    phis = tuple(phi_min(u[i], section.window, nodes) for i in range(2))
    norms = tuple(sup_norm(u[i]) for i in range(2))
    inside = []
    for i in range(2):
        if regime.tags[i] is Tag.COMPRESSIVE:
            inside.append(section.inner[i] < phis[i] and norms[i] < section.outer[i])
        else:
            inside.append(section.inner[i] < norms[i] and phis[i] < section.outer[i])
    return phis, norms, tuple(inside)


def in_section(u, section: PhiSection, regime: Regime | str = "CC", strict: bool = True, nodes=None) -> tuple:
    """Membership flags of a grid pair in the section for the given regime."""
    regime = Regime.parse(regime) if isinstance(regime, str) else regime
    u = np.asarray(u, dtype=float)
    if strict:
        return _memberships(u, section, regime, nodes)[2]
    phis, norms, _ = _memberships(u, section, regime, nodes)
    out = []
    for i in range(2):
        if regime.tags[i] is Tag.COMPRESSIVE:
            out.append(section.inner[i] <= phis[i] and norms[i] <= section.outer[i])
        else:
            out.append(section.inner[i] <= norms[i] and phis[i] <= section.outer[i])
    return tuple(out)


def solve_radial(problem: RadialProblem, section: PhiSection, init, tol: float = 1e-10,
                 max_iter: int = 500, regime: Regime | str = "CC") -> SolutionRecord:
    """Picard iteration ``u <- T(u)`` on a section.

    For the compressive case the section is ``beta_i <= phi_i(u_i)``,
    ``||u_i|| <= alpha_i`` with ``inner = beta`` and ``outer = alpha``; for
    an expansive component pass ``inner = alpha_i``, ``outer = beta_i``.
    Converges when the sup-norm step is below ``tol``; raises
    :class:`SectionEscape` when a compressive norm (or an expansive
    ``phi`` value) exceeds its outer bound by more than 10%.
    """
    regime = Regime.parse(regime) if isinstance(regime, str) else regime
    if not tol > 0:
        raise ValueError("tol must be positive")
    if tuple(section.window) != problem.params.window:
        raise ValueError("section window differs from the problem window")
    u = _check_input(problem, init)
    if not all(in_section(u, section, regime, strict=False, nodes=problem.nodes)):
        raise ValueError("initial guess is outside the closed section")
    for it in range(1, max_iter + 1):
        v = apply_T_radial(problem, u)
        phis, norms, _ = _memberships(v, section, regime, problem.nodes)
        for i in range(2):
            watched = norms[i] if regime.tags[i] is Tag.COMPRESSIVE else phis[i]
            if watched > ESCAPE_FACTOR * section.outer[i]:
                raise SectionEscape(
                    f"component {i + 1} left the section ({watched:.6g} > 1.1*{section.outer[i]:.6g})"
                )
        step = sup_norm(v - u)
        u = v
        if step < tol:
            phis, norms, inside = _memberships(u, section, regime, problem.nodes)
            return SolutionRecord(
                u=u.copy(), nodes=problem.nodes.copy(), residual=residual_radial(problem, u),
                norms=norms, inside=inside, method="picard", iterations=it, phi_values=phis,
            )
    raise NoConvergence(f"Picard iteration did not converge in {max_iter} iterations", last=u)
