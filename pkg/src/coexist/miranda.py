"""Poincare-Miranda face conditions and zero finding on n-rectangles.

A field ``g`` on ``[a_1, b_1] x ... x [a_n, b_n]`` satisfies condition A
in coordinate ``i`` when ``g_i >= 0`` on the face ``x_i = a_i`` and
``g_i <= 0`` on ``x_i = b_i`` (condition B is the reverse).  If every
coordinate satisfies A or B, ``g`` vanishes somewhere in the rectangle.
Face conditions here are checked on sampling lattices, not rigorously.

Fields receive an array whose first axis indexes coordinates; any trailing
axes are batch axes.  Fields that only accept a single point are detected
and evaluated point by point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Rectangle",
    "FaceCondition",
    "FaceReport",
    "ZeroResult",
    "NotFound",
    "MirandaPreconditionError",
    "check_faces",
    "pm_to_fixed_point",
    "translate_to_positive",
    "find_zero",
    "kp_fixed_point_rn",
]

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 33
MAX_SAMPLES = 100_000
DEFAULT_MAX_DEPTH = 80


class NotFound(RuntimeError):
    pass


class MirandaPreconditionError(ValueError):
    """The face conditions fail on the input rectangle; ``report`` has the details."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Rectangle:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(self.lower))
        hi = tuple(float(x) for x in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper corners must have the same positive length")
        for a, b in zip(lo, hi):
            if not a < b:
                raise ValueError(f"need a_i < b_i, got [{a}, {b}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def bisect(self) -> tuple:
        """Halves across the longest edge, lower half first."""
        k = int(np.argmax(self.widths))
        mid = (self.lower[k] + self.upper[k]) / 2
        up = list(self.upper)
        lo = list(self.lower)
        up[k] = mid
        lo[k] = mid
        return Rectangle(self.lower, tuple(up)), Rectangle(tuple(lo), self.upper)

    def shifted(self, shift) -> "Rectangle":
        shift = np.asarray(shift, dtype=float)
        return Rectangle(tuple(np.add(self.lower, shift)), tuple(np.add(self.upper, shift)))


class FaceCondition(str, Enum):
    A = "A"
    B = "B"
    FAIL = "fail"


@dataclass(frozen=True)
class FaceReport:
    """Per-coordinate classification with the sampled extremes of ``g_i`` on each face."""

    conditions: tuple
    lower_face_range: tuple
    upper_face_range: tuple
    samples_per_face: int
    tol: float

    @property
    def ok(self) -> bool:
        return FaceCondition.FAIL not in self.conditions

    def to_dict(self) -> dict:
        return {
            "conditions": [c.value for c in self.conditions],
            "lower_face_range": [list(r) for r in self.lower_face_range],
            "upper_face_range": [list(r) for r in self.upper_face_range],
            "samples_per_face": self.samples_per_face,
            "tol": self.tol,
            "ok": self.ok,
        }


def _evaluate(g, points: np.ndarray) -> np.ndarray:
    """Evaluate ``g`` at ``points`` of shape ``(m, n)``; returns ``(m, n)``."""
    m, n = points.shape
    try:
        out = np.asarray(g(points.T), dtype=float)
        if out.shape == (n, m):
            return out.T
    except (TypeError, ValueError, IndexError):
        pass
    return np.array([np.asarray(g(p), dtype=float).reshape(n) for p in points])


def _lattice_count(samples_per_face: int, dim: int) -> int:
    """Points per axis on an ``dim``-dimensional lattice, capped at the sample budget."""
    k = max(int(samples_per_face), 2)
    while dim > 0 and k > 2 and k**dim > MAX_SAMPLES:
        k -= 1
    return k


def _face_points(rect: Rectangle, i: int, value: float, k: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, k) for j, (lo, hi) in enumerate(zip(rect.lower, rect.upper)) if j != i]
    if axes:
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, rect.dim - 1)
    else:
        grid = np.zeros((1, 0))
    return np.insert(grid, i, value, axis=1)


def check_faces(g, rect: Rectangle, samples_per_face: int = DEFAULT_SAMPLES) -> FaceReport:
    """Classify each coordinate as condition A, condition B or fail.

    Each face is sampled on a uniform lattice with ``samples_per_face``
    points per free axis (reduced so a face never exceeds 1e5 points).
    Signs are judged with tolerance ``1e-12 * (1 + max |g|)``.
    """
    k = _lattice_count(samples_per_face, rect.dim - 1)
    values = []
    for i in range(rect.dim):
        lo = _evaluate(g, _face_points(rect, i, rect.lower[i], k))[:, i]
        hi = _evaluate(g, _face_points(rect, i, rect.upper[i], k))[:, i]
        values.append((lo, hi))
    scale = 1.0 + max(max(np.max(np.abs(lo)), np.max(np.abs(hi))) for lo, hi in values)
    if not np.isfinite(scale):
        raise ValueError("field is not finite on the rectangle faces")
    tol = 1e-12 * scale
    conditions = []
    for lo, hi in values:
        if np.all(lo >= -tol) and np.all(hi <= tol):
            conditions.append(FaceCondition.A)
        elif np.all(lo <= tol) and np.all(hi >= -tol):
            conditions.append(FaceCondition.B)
        else:
            conditions.append(FaceCondition.FAIL)
    return FaceReport(
        tuple(conditions),
        tuple((float(lo.min()), float(lo.max())) for lo, _ in values),
        tuple((float(hi.min()), float(hi.max())) for _, hi in values),
        k,
        float(tol),
    )


def _sup_abs(g, rect: Rectangle, samples: int) -> float:
    k = _lattice_count(samples, rect.dim)
    axes = [np.linspace(lo, hi, k) for lo, hi in zip(rect.lower, rect.upper)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, rect.dim)
    return float(np.max(np.abs(_evaluate(g, pts))))


def pm_to_fixed_point(g, rect: Rectangle, samples_per_face: int = DEFAULT_SAMPLES):
    """Return ``(f, lam)`` with ``f(x) = lam g(x) + x`` and ``lam = a / (1.1 G)``.

    ``a`` is the smallest lower corner coordinate, which must be positive,
    and ``G`` the sampled maximum of ``|g_i|`` over the rectangle, so ``f``
    maps the rectangle into the nonnegative orthant.  Zeros of ``g`` are
    exactly the fixed points of ``f``.  When ``g`` vanishes on every sample
    ``lam = 1``.
    """
    a = min(rect.lower)
    if not a > 0:
        raise ValueError("the lower corner must be strictly positive; translate the rectangle first")
    G = _sup_abs(g, rect, samples_per_face)
    lam = 1.0 if G == 0 else a / (1.1 * G)

    def f(x):
        x = np.asarray(x, dtype=float)
        return lam * np.asarray(g(x), dtype=float) + x

    return f, lam


def translate_to_positive(g, rect: Rectangle):
    """Shift a rectangle with some ``a_i <= 0`` by ``(1 - min a_i)`` in every coordinate.

    Returns ``(g_shifted, rect_shifted, shift)`` with
    ``g_shifted(y) = g(y - shift)``; rectangles already in the open
    positive orthant are returned unchanged with a zero shift.
    """
    a = min(rect.lower)
    amount = 0.0 if a > 0 else 1.0 - a
    shift = np.full(rect.dim, amount)
    if amount == 0.0:
        return g, rect, shift

    def shifted(y):
        y = np.asarray(y, dtype=float)
        return g(y - shift.reshape((-1,) + (1,) * (y.ndim - 1)))

    return shifted, rect.shifted(shift), shift


def _fd_jacobian(g, x: np.ndarray, gx: np.ndarray, widths: np.ndarray) -> np.ndarray:
    n = x.size
    steps = 1e-7 * np.maximum(np.abs(x), widths)
    pts = np.repeat(x[None, :], n, axis=0) + np.diag(steps)
    return (_evaluate(g, pts) - gx[None, :]).T / steps[None, :]


def _preconditioned(g, rect: Rectangle):
    """``C g`` with ``C`` the inverse finite-difference Jacobian at the centre, or ``None``."""
    x = rect.center
    gx = _evaluate(g, x[None, :])[0]
    J = _fd_jacobian(g, x, gx, rect.widths)
    try:
        C = np.linalg.inv(J)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(C)) or np.linalg.cond(J) > 1e12:
        return None

    def h(points):
        vals = np.asarray(g(points), dtype=float)
        return np.tensordot(C, vals, axes=1)

    return h


def _qualifies(g, rect: Rectangle, samples: int) -> bool:
    pre = _preconditioned(g, rect)
    if pre is not None and check_faces(pre, rect, samples).ok:
        return True
    return check_faces(g, rect, samples).ok


def _polish(g, x: np.ndarray, rect: Rectangle, tol: float, max_iter: int = 30):
    """Damped Newton kept inside the closed rectangle; returns a point or ``None``."""
    lo, hi = np.asarray(rect.lower), np.asarray(rect.upper)
    gx = _evaluate(g, x[None, :])[0]
    for _ in range(max_iter):
        nrm = float(np.max(np.abs(gx)))
        if nrm < tol:
            return x
        J = _fd_jacobian(g, x, gx, rect.widths)
        try:
            d = np.linalg.solve(J, -gx)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-4:
            trial = np.clip(x + lam * d, lo, hi)
            gt = _evaluate(g, trial[None, :])[0]
            if np.max(np.abs(gt)) < nrm:
                break
            lam /= 2
        else:
            return None
        x, gx = trial, gt
    return x if float(np.max(np.abs(gx))) < tol else None


@dataclass(frozen=True)
class ZeroResult:
    x: np.ndarray
    residual: float
    depth: int
    polished: bool
    rectangle: Rectangle
    faces: FaceReport

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "residual": self.residual,
            "depth": self.depth,
            "polished": self.polished,
            "final_rectangle": {"lower": list(self.rectangle.lower), "upper": list(self.rectangle.upper)},
            "faces": self.faces.to_dict(),
        }


def find_zero(g, rect: Rectangle, tol: float = 1e-10, max_depth: int = DEFAULT_MAX_DEPTH,
              polish: bool = True, samples_per_face: int = DEFAULT_SAMPLES) -> ZeroResult:
    """Locate a zero of ``g`` by Miranda bisection.

    The longest edge is halved and each half is kept when its faces still
    satisfy the Miranda conditions, checked for ``C g`` with ``C`` the
    inverse Jacobian at the half's centre (falling back to ``g`` itself).
    Qualifying halves go on a depth-first stack.  With ``polish`` the
    search stops at edge length ``sqrt(tol)`` and damped Newton takes over,
    resuming bisection if Newton fails; without it bisection runs until
    every edge is at most ``tol`` and the centre is returned.

    Raises :class:`MirandaPreconditionError` when the input rectangle fails
    the face check and :class:`NotFound` when the stack empties or
    ``max_depth`` splits do not suffice.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    faces = check_faces(g, rect, samples_per_face)
    if not faces.ok:
        raise MirandaPreconditionError(
            "face conditions fail for coordinates "
            + ", ".join(str(i + 1) for i, c in enumerate(faces.conditions) if c is FaceCondition.FAIL),
            faces,
        )
    polish_width = np.sqrt(tol)
    stack = [(rect, 0)]
    deepest = 0
    while stack:
        box, depth = stack.pop()
        deepest = max(deepest, depth)
        width = float(np.max(box.widths))
        if polish and width <= polish_width:
            x = _polish(g, box.center, rect, tol)
            if x is not None:
                res = float(np.max(np.abs(_evaluate(g, x[None, :])[0])))
                return ZeroResult(x, res, depth, True, box, faces)
        if width <= tol:
            x = box.center
            res = float(np.max(np.abs(_evaluate(g, x[None, :])[0])))
            return ZeroResult(x, res, depth, False, box, faces)
        if depth >= max_depth:
            continue
        first, second = box.bisect()
        keep = [half for half in (first, second) if _qualifies(g, half, samples_per_face)]
        for half in reversed(keep):
            stack.append((half, depth + 1))
    if deepest >= max_depth:
        raise NotFound(f"no zero located within max_depth={max_depth} bisections")
    raise NotFound("no sub-rectangle satisfies the face conditions")


def kp_fixed_point_rn(f, r, R, tol: float = 1e-10, samples_per_face: int = DEFAULT_SAMPLES,
                      max_depth: int = DEFAULT_MAX_DEPTH) -> ZeroResult:
    """Fixed point of ``f`` in ``[r_1, R_1] x ... x [r_n, R_n]``.

    Each coordinate must satisfy ``f_i >= x_i`` on ``x_i = r_i`` and
    ``f_i <= x_i`` on ``x_i = R_i``, or the reverse; this is the face
    condition of ``x - f(x)``, whose zero is returned.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    R = np.atleast_1d(np.asarray(R, dtype=float))
    if r.shape != R.shape or np.any(r <= 0) or np.any(r >= R):
        raise ValueError("need 0 < r_i < R_i")
    rect = Rectangle(tuple(r), tuple(R))

    def g(x):
        x = np.asarray(x, dtype=float)
        return x - np.asarray(f(x), dtype=float)

    return find_zero(g, rect, tol=tol, max_depth=max_depth, samples_per_face=samples_per_face)
