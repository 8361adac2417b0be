"""Systems of Hammerstein integral equations on ``[0, 1]``.

Solves and certifies

    u_i(t) = int_0^1 k_i(t, s) g_i(s) f_i(u_1(s), u_2(s)) ds,   i = 1, 2,

in the product of cones ``{v >= 0, min_[a,b] v >= c_i ||v||}``.  The kernel
constants ``A_i``/``B_i`` and the box extrema ``m_i``/``M_i`` are computed
numerically and every inequality of the existence and three-solution
criteria is recorded with its margin.  Solutions are computed on a uniform
node grid by Picard iteration or by damped, deflated Newton.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import expr
from .boxopt import DEFAULT_GRID_N, box_max, box_min
from .certificate import (
    Certificate,
    LevelCertificate,
    SolutionRecord,
    greater,
    less,
    structural,
)
from .cones import ConeBox, Regime, Tag, expected_index, retract_component, sup_norm, uniform_grid
from .nonlinearity import Nonlinearity
from .quadrature import simpson_weights, split_simpson_matrix

__all__ = [
    "KernelSpec",
    "KernelConstants",
    "H3Violation",
    "HammersteinProblem",
    "BoxExtrema",
    "NoConvergence",
    "BoxEscape",
    "NotFound",
    "kernel_constants",
    "compute_mM",
    "check_existence",
    "check_multiplicity",
    "apply_T",
    "residual",
    "solve_picard",
    "solve_deflated_newton",
    "find_solutions",
]

log = logging.getLogger(__name__)

DEFAULT_N = 257
DEFAULT_QUAD_N = 1025
H3_GRID = 257
ESCAPE_FACTOR = 1.1


class H3Violation(ValueError):
    """Sampled check of the kernel hypotheses failed; ``report`` lists the failures."""

    def __init__(self, report):
        super().__init__("; ".join(report))
        self.report = list(report)


class NoConvergence(RuntimeError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class BoxEscape(RuntimeError):
    pass


class NotFound(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Kernels


def green_dirichlet(t, s):
    """Green's function of ``-u'' = h``, ``u(0) = u(1) = 0``."""
    t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
    return np.where(s <= t, s * (1 - t), t * (1 - s))


def _one_variable(spec, name):
    """Turn ``None``/expression text/tabulated array into a callable of ``s``."""
    if spec is None:
        return None
    if isinstance(spec, str):
        node = expr.parse(spec, variables=("s",))
        return lambda s: np.broadcast_to(expr.eval_env(node, {"s": s}), np.shape(s)).astype(float)
    if callable(spec):
        return spec
    table = np.asarray(spec, dtype=float)
    if table.ndim != 1 or table.size < 2:
        raise ValueError(f"tabulated {name} must be a 1-D array with at least two entries")
    grid = uniform_grid(table.size)
    return lambda s: np.interp(s, grid, table)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Kernel ``k``, weight ``g``, bound ``Phi``, window ``[a, b]`` and cone constant ``c``.

    ``kind`` is ``"green_dirichlet"``, ``"tabulated"`` (``table`` sampled on a
    uniform grid, bilinear interpolation) or ``"expression"`` (``kernel`` is
    text in the variables ``t`` and ``s``).  ``weight`` and ``bound`` accept
    ``None`` (the constant one; for the Green kernel the bound defaults to
    ``s(1 - s)``), expression text in ``s``, a callable, or a 1-D table.
    """

    kind: str = "green_dirichlet"
    kernel: object = None
    weight: object = None
    bound: object = None
    window: tuple = (0.25, 0.75)
    c: float = 0.25

    def __post_init__(self):
        a, b = (float(x) for x in self.window)
        if not 0 <= a < b <= 1:
            raise ValueError(f"window must satisfy 0 <= a < b <= 1, got [{a}, {b}]")
        object.__setattr__(self, "window", (a, b))
        if not 0 < self.c <= 1:
            raise ValueError(f"cone constant must lie in (0, 1], got {self.c}")
        if self.kind == "green_dirichlet":
            k = green_dirichlet
        elif self.kind == "tabulated":
            table = np.asarray(self.kernel, dtype=float)
            if table.ndim != 2 or table.shape[0] != table.shape[1]:
                raise ValueError("tabulated kernel must be a square matrix")
            grid = uniform_grid(table.shape[0])
            interp = RegularGridInterpolator((grid, grid), table)

            def k(t, s):
                t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
                pts = np.stack([np.clip(t, 0, 1), np.clip(s, 0, 1)], axis=-1)
                return interp(pts.reshape(-1, 2)).reshape(t.shape)
        elif self.kind == "expression":
            node = expr.parse(self.kernel, variables=("t", "s"))

            def k(t, s):
                t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
                return np.broadcast_to(expr.eval_env(node, {"t": t, "s": s}), t.shape).astype(float)
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        g = _one_variable(self.weight, "weight") or (lambda s: np.ones(np.shape(s)))
        bound = self.bound
        if bound is None:
            if self.kind != "green_dirichlet":
                raise ValueError("a bound function Phi is required for non-Green kernels")
            bound = lambda s: np.asarray(s) * (1 - np.asarray(s))  # noqa: E731
        object.__setattr__(self, "_k", k)
        object.__setattr__(self, "_g", g)
        object.__setattr__(self, "_phi", _one_variable(bound, "bound"))

    def k(self, t, s) -> np.ndarray:
        return _finite(self._k(t, s), "kernel")

    def g(self, s) -> np.ndarray:
        return _finite(self._g(np.asarray(s, float)), "weight")

    def phi(self, s) -> np.ndarray:
        return _finite(self._phi(np.asarray(s, float)), "bound")


def _finite(values, what):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"non-finite {what} value")
    return values


@dataclass(frozen=True)
class KernelConstants:
    A: float
    B: float
    h3_report: tuple
    quad_n: int


def _split_integrals(spec: KernelSpec, t: np.ndarray, lo: float, hi: float, quad_n: int):
    """``int_lo^hi k(t, s) g(s) ds`` for each ``t``, splitting the range at ``s = t``."""
    xi = np.linspace(0.0, 1.0, quad_n)
    w = simpson_weights(quad_n - 1, 1.0 / (quad_n - 1))
    tt = t[:, None]
    total = np.zeros(t.size)
    for start, stop in ((lo, tt), (tt, hi)):
        width = np.broadcast_to(stop - start, tt.shape)
        s = start + width * xi
        integrand = spec.k(tt, s) * spec.g(s)
        total += width[:, 0] * (integrand @ w)
    return total


def _h3_report(spec: KernelSpec, quad_n: int) -> list:
    a, b = spec.window
    grid = uniform_grid(H3_GRID)
    T, S = np.meshgrid(grid, grid, indexing="ij")
    K = spec.k(T, S)
    phi = spec.phi(grid)
    g = spec.g(grid)
    tol = 1e-12 * (1.0 + float(np.max(np.abs(phi))))
    report = []

    def note(mask, label):
        if np.any(mask):
            i, j = np.unravel_index(np.argmax(mask), mask.shape)
            report.append(f"{label} at t={T[i, j]:.4g}, s={S[i, j]:.4g}")

    note(K < -tol, "kernel is negative")
    if np.any(g < 0):
        report.append(f"weight is negative at s={grid[np.argmax(g < 0)]:.4g}")
    if np.any(phi < 0):
        report.append(f"bound is negative at s={grid[np.argmax(phi < 0)]:.4g}")
    note(K > phi[None, :] + tol, "k(t,s) > Phi(s)")
    tw = np.unique(np.concatenate([[a, b], grid[(grid >= a) & (grid <= b)]]))
    Tw, Sw = np.meshgrid(tw, grid, indexing="ij")
    lower = spec.c * phi[None, :] - spec.k(Tw, Sw)
    if np.any(lower > tol):
        i, j = np.unravel_index(np.argmax(lower), lower.shape)
        report.append(f"c*Phi(s) > k(t,s) at t={Tw[i, j]:.4g}, s={Sw[i, j]:.4g}")
    s = np.linspace(a, b, quad_n)
    mass = float(simpson_weights(quad_n - 1, (b - a) / (quad_n - 1)) @ (spec.phi(s) * spec.g(s)))
    if not mass > 0:
        report.append(f"int_a^b Phi g ds = {mass:.3g} is not positive")
    return report


def kernel_constants(spec: KernelSpec, quad_n: int = DEFAULT_QUAD_N, strict: bool = True) -> KernelConstants:
    """Compute ``A = inf_[a,b] int_a^b k g`` and ``B = sup_[0,1] int_0^1 k g``.

    The infimum and supremum are taken over ``quad_n`` uniform samples of
    ``t``; each integral uses composite Simpson with ``quad_n`` nodes on
    either side of ``s = t``.  The kernel hypotheses are checked on a
    sampling grid; with ``strict`` any violation raises :class:`H3Violation`.
    """
    if quad_n < 9 or quad_n % 2 == 0:
        raise ValueError("quad_n must be odd and at least 9")
    a, b = spec.window
    report = _h3_report(spec, quad_n)
    if strict and report:
        raise H3Violation(report)
    A = float(np.min(_split_integrals(spec, np.linspace(a, b, quad_n), a, b, quad_n)))
    B = float(np.max(_split_integrals(spec, np.linspace(0.0, 1.0, quad_n), 0.0, 1.0, quad_n)))
    return KernelConstants(A, B, tuple(report), quad_n)


# --------------------------------------------------------------------------
# Problem


@dataclass(eq=False)
class HammersteinProblem:
    kernels: tuple
    nonlinearities: tuple
    N: int = DEFAULT_N
    quad_n: int = DEFAULT_QUAD_N
    grid_n: int = DEFAULT_GRID_N

    def __post_init__(self):
        self.kernels = tuple(self.kernels)
        self.nonlinearities = tuple(self.nonlinearities)
        if len(self.kernels) != 2 or len(self.nonlinearities) != 2:
            raise ValueError("exactly two kernels and two nonlinearities are required")
        if self.kernels[0].window != self.kernels[1].window:
            raise ValueError("both kernels must share the window [a, b]")
        if self.N < 3:
            raise ValueError("the grid needs at least three nodes")

    @property
    def window(self) -> tuple:
        return self.kernels[0].window

    @property
    def c(self) -> tuple:
        return (self.kernels[0].c, self.kernels[1].c)

    @cached_property
    def nodes(self) -> np.ndarray:
        return uniform_grid(self.N)

    @cached_property
    def operators(self) -> np.ndarray:
        """``Q[i, j, k]`` so that ``T_i(u)(t_j) = sum_k Q[i, j, k] f_i(u(t_k))``."""
        t = self.nodes
        W = split_simpson_matrix(self.N)
        T, S = np.meshgrid(t, t, indexing="ij")
        return np.stack([spec.k(T, S) * W * spec.g(t)[None, :] for spec in self.kernels])

    @cached_property
    def constants(self) -> tuple:
        first = kernel_constants(self.kernels[0], self.quad_n)
        if self.kernels[1] is self.kernels[0]:
            return (first, first)
        return (first, kernel_constants(self.kernels[1], self.quad_n))

    def grid_meta(self) -> dict:
        return {
            "N": self.N,
            "quad_n": self.quad_n,
            "grid_n": self.grid_n,
            "t_samples": "inf/sup over t replaced by min/max over quad_n uniform samples",
            "extrema": [
                "corner (nondecreasing)" if f.tag.both else "sampled grid with one refinement pass"
                for f in self.nonlinearities
            ],
            "A": [k.A for k in self.constants],
            "B": [k.B for k in self.constants],
        }


@dataclass(frozen=True)
class BoxExtrema:
    m: tuple
    M: tuple


def _validate_alpha_beta(alpha, beta):
    alpha = tuple(float(x) for x in alpha)
    beta = tuple(float(x) for x in beta)
    if len(alpha) != 2 or len(beta) != 2:
        raise ValueError("alpha and beta must have two components")
    for a, b in zip(alpha, beta):
        if not (a > 0 and b > 0):
            raise ValueError("alpha and beta must be positive")
        if a == b:
            raise ValueError("alpha_i and beta_i must differ")
    return alpha, beta


def compute_mM(problem: HammersteinProblem, alpha, beta) -> BoxExtrema:
    """Extrema of ``f_i`` over the rectangles the existence criterion uses.

    With ``r_i = min(alpha_i, beta_i)`` and ``R_i = max(alpha_i, beta_i)``::

        m_1 = min f_1 on [c_1 beta_1, beta_1] x [c_2 r_2, R_2]
        m_2 = min f_2 on [c_1 r_1, R_1] x [c_2 beta_2, beta_2]
        M_1 = max f_1 on [0, alpha_1] x [0, R_2]
        M_2 = max f_2 on [0, R_1] x [0, alpha_2]
    """
    alpha, beta = _validate_alpha_beta(alpha, beta)
    c1, c2 = problem.c
    r = [min(a, b) for a, b in zip(alpha, beta)]
    R = [max(a, b) for a, b in zip(alpha, beta)]
    f1, f2 = problem.nonlinearities
    n = problem.grid_n
    m1 = box_min(f1, ((c1 * beta[0], beta[0]), (c2 * r[1], R[1])), f1.tag, n)
    m2 = box_min(f2, ((c1 * r[0], R[0]), (c2 * beta[1], beta[1])), f2.tag, n)
    M1 = box_max(f1, ((0.0, alpha[0]), (0.0, R[1])), f1.tag, n)
    M2 = box_max(f2, ((0.0, R[0]), (0.0, alpha[1])), f2.tag, n)
    return BoxExtrema((m1, m2), (M1, M2))


def _regime(alpha, beta) -> Regime:
    return Regime(tuple(Tag.COMPRESSIVE if b < a else Tag.EXPANSIVE for a, b in zip(alpha, beta)))


def _level(problem: HammersteinProblem, alpha, beta, label: str = "") -> LevelCertificate:
    alpha, beta = _validate_alpha_beta(alpha, beta)
    ext = compute_mM(problem, alpha, beta)
    records = []
    for i in range(2):
        A, B = problem.constants[i].A, problem.constants[i].B
        records.append(greater(f"A{i + 1}*m{i + 1}{label} > beta{i + 1}{label}", A * ext.m[i], beta[i]))
        records.append(less(f"B{i + 1}*M{i + 1}{label} < alpha{i + 1}{label}", B * ext.M[i], alpha[i]))
    regime = _regime(alpha, beta)
    return LevelCertificate(alpha, beta, records, [], str(regime), expected_index(regime))


def check_existence(problem: HammersteinProblem, alpha, beta) -> Certificate:
    """Certificate for one solution with ``r_i < ||u_i|| < R_i``.

    Records ``A_i m_i > beta_i`` and ``B_i M_i < alpha_i`` for both
    components.  Component ``i`` is compressive when ``beta_i < alpha_i``.
    """
    return Certificate("hammerstein", [_level(problem, alpha, beta)], [], problem.grid_meta())


def check_multiplicity(problem: HammersteinProblem, levels) -> Certificate:
    """Certificate for three distinct solutions from three parameter levels.

    Besides the twelve inequalities, records that levels 1 and 2 lie in the
    level-3 box (every ``alpha_i^j, beta_i^j`` in ``[r_i^3, R_i^3]``) and
    that some component has ``R_i^1 < r_i^2``.
    """
    levels = [tuple(lv) for lv in levels]
    if len(levels) != 3:
        raise ValueError("exactly three (alpha, beta) levels are required")
    certs = [_level(problem, a, b, label=f"^{j + 1}") for j, (a, b) in enumerate(levels)]
    r3, R3 = certs[2].inner, certs[2].outer
    checks = []
    for j in range(2):
        cert = certs[j]
        ok = all(
            r3[i] <= x <= R3[i]
            for i in range(2)
            for x in (cert.alpha[i], cert.beta[i])
        )
        checks.append(structural(f"level {j + 1} inside level 3", ok))
    separated = [i + 1 for i in range(2) if certs[0].outer[i] < certs[1].inner[i]]
    checks.append(structural(
        "levels 1 and 2 disjoint (R_i^1 < r_i^2)", bool(separated),
        f"component {separated[0]}" if separated else "no separating component",
    ))
    return Certificate("hammerstein", certs, checks, problem.grid_meta())


# --------------------------------------------------------------------------
# Operator and solvers


def _as_pair(problem: HammersteinProblem, u) -> np.ndarray:
    u = np.array(u, dtype=float)
    if u.shape != (2, problem.N):
        raise ValueError(f"expected a grid pair of shape (2, {problem.N}), got {u.shape}")
    scale = 1.0 + float(np.max(np.abs(u)))
    if np.any(u < -1e-12 * scale):
        raise ValueError("grid pair must be nonnegative")
    return np.maximum(u, 0.0)


def _f_values(problem: HammersteinProblem, u: np.ndarray) -> np.ndarray:
    return np.stack([np.asarray(f(u[0], u[1]), dtype=float) for f in problem.nonlinearities])


def apply_T(problem: HammersteinProblem, u) -> np.ndarray:
    """Apply the integral operator at every node (split composite Simpson)."""
    u = _as_pair(problem, u)
    fv = _f_values(problem, u)
    return np.maximum(np.einsum("ijk,ik->ij", problem.operators, fv), 0.0)


def residual(problem: HammersteinProblem, u) -> float:
    """``||u - T(u)||_inf`` over both components."""
    u = _as_pair(problem, u)
    return sup_norm(u - apply_T(problem, u))


def _record(problem, u, box: ConeBox | None, method: str, iterations: int, level=None) -> SolutionRecord:
    norms = (sup_norm(u[0]), sup_norm(u[1]))
    inside = box.contains(norms) if box is not None else (True, True)
    return SolutionRecord(
        u=u.copy(), nodes=problem.nodes.copy(), residual=residual(problem, u), norms=norms,
        inside=inside, method=method, iterations=iterations, level=level,
    )


def solve_picard(problem: HammersteinProblem, box: ConeBox, init, tol: float = 1e-10,
                 max_iter: int = 500) -> SolutionRecord:
    """Fixed-point iteration ``u <- T(u)`` kept inside the box.

    A component that falls below its inner radius is retracted back onto the
    inner sphere; one that exceeds its outer radius by more than 10% aborts
    with :class:`BoxEscape`.  Converges when the step and the residual are
    both small.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u = _as_pair(problem, init)
    norms = (sup_norm(u[0]), sup_norm(u[1]))
    if not all(box.contains(norms, strict=False)):
        raise ValueError(f"initial guess with norms {norms} is outside the box")
    for it in range(1, max_iter + 1):
        v = apply_T(problem, u)
        for i in range(2):
            nv = sup_norm(v[i])
            if nv > ESCAPE_FACTOR * box.outer[i]:
                raise BoxEscape(f"component {i + 1} reached norm {nv:.6g} > 1.1*{box.outer[i]:.6g}")
            if nv < box.inner[i]:
                v[i] = retract_component(v[i], box.inner[i], box.outer[i])
        step = sup_norm(v - u)
        u = v
        if step < tol:
            rec = _record(problem, u, box, "picard", it)
            if rec.residual < tol * (1 + max(rec.norms)):
                return rec
    raise NoConvergence(f"Picard iteration did not converge in {max_iter} iterations", last=u)


def _jacobian(problem: HammersteinProblem, u: np.ndarray, fv: np.ndarray, comps=(0, 1)) -> np.ndarray:
    """Jacobian of ``u - T(u)`` restricted to the components ``comps``.

    ``T_i(u)(t_j)`` depends on the nodal value ``u(t_k)`` only through
    ``f_i(u(t_k))``, so forward differences of ``f`` at the nodes give every
    column of the finite-difference Jacobian at once.
    """
    N = problem.N
    comps = tuple(comps)
    J = np.eye(len(comps) * N)
    for b, var in enumerate(comps):
        h = 1e-7 * np.maximum(1.0, np.abs(u[var]))
        shifted = u.copy()
        shifted[var] += h
        df = (_f_values(problem, shifted) - fv) / h
        for a, i in enumerate(comps):
            J[a * N:(a + 1) * N, b * N:(b + 1) * N] -= problem.operators[i] * df[i][None, :]
    return J


def _seeds(problem: HammersteinProblem, box: ConeBox, per_axis: int = 5, profiles=None) -> list:
    """Scaled profiles with amplitudes log-spaced in each annulus, centre first.

    The default profile is ``T(1)``; ``profiles`` adds further shapes (for
    instance known solutions), each producing its own amplitude lattice.
    """
    shapes = [np.einsum("ijk->ij", problem.operators)]
    if profiles is not None:
        shapes = [np.asarray(p, dtype=float) for p in profiles] + shapes
    fractions = (np.arange(per_axis) + 0.5) / per_axis
    amps = [np.exp(np.log(r) + fractions * (np.log(R) - np.log(r))) for r, R in zip(box.inner, box.outer)]
    mid = (per_axis - 1) / 2
    order = sorted(
        ((a, b) for a in range(per_axis) for b in range(per_axis)),
        key=lambda ab: (abs(ab[0] - mid) + abs(ab[1] - mid), ab),
    )
    seeds = []
    for shape in shapes:
        peak = np.max(shape, axis=1, keepdims=True)
        if np.any(peak <= 0):
            continue
        shape = shape / peak
        seeds.extend(np.stack([amps[0][a] * shape[0], amps[1][b] * shape[1]]) for a, b in order)
    return seeds


def _random_seeds(problem: HammersteinProblem, box: ConeBox, rng: np.random.Generator, count: int) -> list:
    """Scaled ``T(1)`` profiles with log-uniform random amplitudes in the annuli."""
    profile = np.einsum("ijk->ij", problem.operators)
    profile = profile / np.max(profile, axis=1, keepdims=True)
    out = []
    for _ in range(count):
        amps = [math.exp(rng.uniform(math.log(r), math.log(R))) for r, R in zip(box.inner, box.outer)]
        out.append(np.stack([amps[0] * profile[0], amps[1] * profile[1]]))
    return out


def _deflation(u: np.ndarray, known: list) -> tuple:
    """Deflation factor ``prod_k (1/||u - u_k||^2 + 1)`` and its log-gradient."""
    M = 1.0
    grad = np.zeros_like(u)
    for k in known:
        e = u - k
        idx = np.unravel_index(np.argmax(np.abs(e)), e.shape)
        nu = abs(e[idx])
        if nu == 0:
            return math.inf, grad
        m = 1.0 / nu**2 + 1.0
        M *= m
        grad[idx] += (-2.0 / nu**3) * np.sign(e[idx]) / m
    return M, grad


def _newton(problem, u, known, tol, max_iter, escape):
    """Damped deflated Newton from ``u``; returns ``(u, iterations)`` or ``None``."""
    for it in range(1, max_iter + 1):
        fv = _f_values(problem, u)
        F = u - np.einsum("ijk,ik->ij", problem.operators, fv)
        nF = sup_norm(F)
        if nF < tol:
            return u, it - 1
        J = _jacobian(problem, u, fv)
        try:
            d = np.linalg.solve(J, -F.ravel()).reshape(u.shape)
        except np.linalg.LinAlgError:
            return None
        M, grad = _deflation(u, known)
        if known:
            denom = 1.0 - float(np.sum(grad * d))
            if abs(denom) > 1e-12:
                d = d / denom
        merit = M * nF
        lam = 1.0
        while lam >= 2.0**-12:
            trial = np.maximum(u + lam * d, 0.0)
            try:
                Ft = trial - apply_T(problem, trial)
            except (ValueError, ArithmeticError):
                Ft = None
            if Ft is not None:
                Mt, _ = _deflation(trial, known)
                if Mt * sup_norm(Ft) < merit:
                    break
            lam /= 2
        else:
            return None
        u = trial
        if sup_norm(u) > escape:
            return None
    return None


def _warm_start(problem, u, regime: Regime, sweeps: int, escape: float):
    """Alternate Picard on compressive components with Newton on expansive ones.

    Compressive components attract Picard iterates while expansive ones
    repel them, so each sweep applies ``T`` to the former and solves the
    latter for the current values of the former.  Returns the iterate with
    the smallest residual.
    """
    comp = [i for i, t in enumerate(regime.tags) if t is Tag.COMPRESSIVE]
    expa = [i for i, t in enumerate(regime.tags) if t is Tag.EXPANSIVE]
    N = problem.N
    u = u.copy()
    best, best_u = math.inf, u.copy()
    for _ in range(sweeps):
        if comp:
            u[comp] = apply_T(problem, u)[comp]
        for _ in range(20):
            fv = _f_values(problem, u)
            F = u - np.einsum("ijk,ik->ij", problem.operators, fv)
            if not expa or sup_norm(F[expa]) < 1e-12 * (1 + sup_norm(u)):
                break
            J = _jacobian(problem, u, fv, expa)
            try:
                d = np.linalg.solve(J, -F[expa].ravel())
            except np.linalg.LinAlgError:
                return best_u
            u[expa] = np.maximum(u[expa] + d.reshape(len(expa), N), 0.0)
        if not np.all(np.isfinite(u)) or sup_norm(u) > escape:
            break
        r = residual(problem, u)
        if r < best:
            best, best_u = r, u.copy()
    return best_u


def solve_deflated_newton(problem: HammersteinProblem, box: ConeBox, known=(), tol: float = 1e-10,
                          exclude=(), seeds=None, max_iter: int = 60,
                          min_distance: float | None = None, regime: Regime | None = None,
                          warm_sweeps: int = 30) -> SolutionRecord:
    """Search the box for a solution distinct from ``known`` ones.

    Runs damped Newton on ``F(u) = u - T(u)`` with the residual deflated by
    ``prod_k (1/||u - u_k||^2 + 1)`` over the known solutions (and over the
    zero solution when ``T(0) = 0``).  Seeds are scaled copies of ``T(1)``
    on a 5x5 lattice of amplitudes log-spaced between the inner and outer
    radii, centre first.  When ``regime`` mixes compressive and expansive
    components, a seed on which plain Newton fails is retried after a
    warm start that iterates the compressive components and solves for the
    expansive ones.

    A result is accepted when its residual is below ``tol``, it lies
    strictly inside ``box`` and outside every closed box in ``exclude``,
    and it is at least ``min_distance`` (default ``1e-6 (1 + ||u_k||)``)
    away from each known solution.  Raises :class:`NotFound` otherwise.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    known_u = [np.asarray(k.u if isinstance(k, SolutionRecord) else k, dtype=float) for k in known]
    deflate = list(known_u)
    zero = np.zeros((2, problem.N))
    if residual(problem, zero) < tol:
        deflate.append(zero)
    seeds = _seeds(problem, box) if seeds is None else [np.asarray(s, float) for s in seeds]
    escape = 10.0 * max(box.outer)
    mixed = regime is not None and 0 < regime.n_expansive < len(regime.tags)

    def accept(out):
        if out is None:
            return None
        u, iters = out
        rec = _record(problem, u, box, "deflated-newton", iters)
        if not (rec.residual < tol and rec.localized):
            return None
        if any(all(ex.contains(rec.norms, strict=False)) for ex in exclude):
            return None
        for k in known_u:
            dist = min_distance if min_distance is not None else 1e-6 * (1 + sup_norm(k))
            if sup_norm(u - k) < dist:
                return None
        return rec

    for n_seed, seed in enumerate(seeds):
        seed = _as_pair(problem, seed)
        rec = accept(_newton(problem, seed, deflate, tol, max_iter, escape))
        if rec is None and mixed:
            warm = _warm_start(problem, seed, regime, warm_sweeps, escape)
            rec = accept(_newton(problem, warm, deflate, tol, max_iter, escape))
        if rec is not None:
            log.debug("deflated Newton converged from seed %d in %d steps", n_seed, rec.iterations)
            return rec
    raise NotFound(f"no new solution found from {len(seeds)} seeds")


@dataclass
class SearchReport:
    solutions: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def find_solutions(problem: HammersteinProblem, levels, tol: float = 1e-10,
                   max_iter: int = 500, seed: int = 0, random_starts: int = 16) -> SearchReport:
    """Locate one solution per level, and the set-difference one for three levels.

    Each certified box is tried with Picard iteration from a constant pair
    first; when that fails (expansive components repel Picard iterates) the
    deflated Newton search takes over.  With three levels, the level-3 box
    minus the closed level-1 and level-2 boxes is searched last; failing to
    find that solution is reported, not raised.

    Newton seeds are the deterministic lattice followed by ``random_starts``
    random amplitudes drawn from a generator seeded with ``seed``.
    """
    levels = [_validate_alpha_beta(*lv) for lv in levels]
    boxes = [ConeBox.from_alpha_beta(a, b) for a, b in levels]
    primary = boxes[:2] if len(boxes) == 3 else boxes
    report = SearchReport()
    rng = np.random.default_rng(seed)
    for j, box in enumerate(primary):
        init = np.stack([np.full(problem.N, math.sqrt(r * R)) for r, R in zip(box.inner, box.outer)])
        rec = None
        try:
            rec = solve_picard(problem, box, init, tol=tol, max_iter=max_iter)
            if not rec.localized:
                report.notes.append(f"level {j + 1}: Picard limit lies on the box boundary")
                rec = None
        except (NoConvergence, BoxEscape) as exc:
            report.notes.append(f"level {j + 1}: Picard failed ({exc}); trying Newton")
        if rec is None:
            try:
                seeds = _seeds(problem, box) + _random_seeds(problem, box, rng, random_starts)
                rec = solve_deflated_newton(problem, box, report.solutions, tol=tol,
                                            regime=_regime(*levels[j]), seeds=seeds)
            except NotFound as exc:
                report.notes.append(f"level {j + 1}: {exc}")
                continue
        rec.level = j + 1
        report.solutions.append(rec)
    if len(boxes) == 3:
        try:
            rec = solve_deflated_newton(problem, boxes[2], report.solutions, tol=tol,
                                        exclude=boxes[:2], regime=_regime(*levels[2]),
                                        seeds=_seeds(problem, boxes[2], profiles=[r.u for r in report.solutions])
                                        + _random_seeds(problem, boxes[2], rng, random_starts))
            rec.level = 3
            report.solutions.append(rec)
        except NotFound as exc:
            report.notes.append(f"level 3 (set difference): {exc}")
    return report
