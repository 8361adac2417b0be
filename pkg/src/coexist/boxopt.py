"""Sampled extrema of bivariate functions over axis-aligned rectangles.

These estimates feed the ``m``/``M`` constants of the integral-system
certificates.  For functions declared nondecreasing in both variables the
extremum sits at a corner and is returned exactly; otherwise a uniform
grid plus one local refinement pass is used, which gives an upper bound on
the true minimum (lower bound on the maximum).  Nothing here is an
interval enclosure.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Monotonicity",
    "MonotoneTag",
    "MonotonicityError",
    "DEFAULT_GRID_N",
    "box_min",
    "box_max",
    "evaluate_grid",
    "spot_check_monotone",
]

DEFAULT_GRID_N = 129
SPOT_CHECKS = 100


class MonotonicityError(ValueError):
    pass


class Monotonicity(str, Enum):
    NONDECREASING = "nondecreasing"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class MonotoneTag:
    first: Monotonicity = Monotonicity.UNKNOWN
    second: Monotonicity = Monotonicity.UNKNOWN

    def __post_init__(self):
        object.__setattr__(self, "first", Monotonicity(self.first))
        object.__setattr__(self, "second", Monotonicity(self.second))

    @classmethod
    def nondecreasing(cls) -> "MonotoneTag":
        return cls(Monotonicity.NONDECREASING, Monotonicity.NONDECREASING)

    @classmethod
    def from_flags(cls, flags) -> "MonotoneTag":
        return cls(*(Monotonicity.NONDECREASING if f else Monotonicity.UNKNOWN for f in flags))

    @property
    def both(self) -> bool:
        return self.first is self.second is Monotonicity.NONDECREASING

    def flags(self) -> tuple:
        return (self.first is Monotonicity.NONDECREASING, self.second is Monotonicity.NONDECREASING)


def evaluate_grid(f, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on the tensor grid ``x`` by ``y``; result has shape ``(len(x), len(y))``."""
    X, Y = np.meshgrid(x, y, indexing="ij")
    try:
        Z = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    except (TypeError, ValueError) as exc:
        # scalar-only callables (e.g. using `if` on their arguments)
        if isinstance(exc, ValueError) and "truth value" not in str(exc):
            raise
        Z = np.vectorize(lambda a, b: float(f(a, b)))(X, Y)
    if not np.all(np.isfinite(Z)):
        raise ValueError("function is not finite on the rectangle")
    return Z


def spot_check_monotone(f, rect, tag: MonotoneTag, n: int = SPOT_CHECKS, seed: int = 0) -> None:
    """Look for violations of a declared monotonicity on random ordered pairs."""
    (l1, u1), (l2, u2) = rect
    rng = np.random.default_rng(seed)
    for axis, declared in enumerate(tag.flags()):
        if not declared:
            continue
        p = np.column_stack([rng.uniform(l1, u1, n), rng.uniform(l2, u2, n)])
        q = p.copy()
        lo, hi = ((l1, u1), (l2, u2))[axis]
        q[:, axis] = rng.uniform(p[:, axis], hi) if hi > lo else p[:, axis]
        fp = np.asarray(f(p[:, 0], p[:, 1]), dtype=float)
        fq = np.asarray(f(q[:, 0], q[:, 1]), dtype=float)
        bad = fq < fp - 1e-12 * (1 + np.abs(fp))
        if np.any(bad):
            k = int(np.argmax(bad))
            raise MonotonicityError(
                f"declared nondecreasing in variable {axis + 1} but "
                f"f{tuple(p[k])} = {fp[k]:.6g} > f{tuple(q[k])} = {fq[k]:.6g}"
            )


def _check_rect(rect):
    (l1, u1), (l2, u2) = rect
    if l1 > u1 or l2 > u2:
        raise ValueError(f"invalid rectangle {rect}")
    return float(l1), float(u1), float(l2), float(u2)


def _grid_extremum(f, rect, grid_n: int, sign: float) -> float:
    l1, u1, l2, u2 = _check_rect(rect)
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    x = np.linspace(l1, u1, grid_n)
    y = np.linspace(l2, u2, grid_n)
    Z = sign * evaluate_grid(f, x, y)
    i, j = np.unravel_index(np.argmin(Z), Z.shape)
    best = Z[i, j]
    # one refinement pass over the cells around the incumbent
    xr = np.linspace(x[max(i - 1, 0)], x[min(i + 1, grid_n - 1)], grid_n)
    yr = np.linspace(y[max(j - 1, 0)], y[min(j + 1, grid_n - 1)], grid_n)
    best = min(best, float(np.min(sign * evaluate_grid(f, xr, yr))))
    return sign * float(best)


def box_min(f, rect, tag: MonotoneTag | None = None, grid_n: int = DEFAULT_GRID_N) -> float:
    """Estimate ``min f`` over ``rect = ((l1, u1), (l2, u2))``.

    If ``tag`` declares ``f`` nondecreasing in both variables the lower-left
    corner value is returned (after a spot check of the declaration).
    """
    tag = tag or MonotoneTag()
    l1, u1, l2, u2 = _check_rect(rect)
    if any(tag.flags()):
        spot_check_monotone(f, rect, tag)
    if tag.both:
        value = float(np.asarray(f(np.float64(l1), np.float64(l2)), dtype=float))
        if not np.isfinite(value):
            raise ValueError("function is not finite on the rectangle")
        return value
    return _grid_extremum(f, rect, grid_n, 1.0)


def box_max(f, rect, tag: MonotoneTag | None = None, grid_n: int = DEFAULT_GRID_N) -> float:
    """Estimate ``max f`` over ``rect``; dual of :func:`box_min` (upper-right corner)."""
    tag = tag or MonotoneTag()
    l1, u1, l2, u2 = _check_rect(rect)
    if any(tag.flags()):
        spot_check_monotone(f, rect, tag)
    if tag.both:
        value = float(np.asarray(f(np.float64(u1), np.float64(u2)), dtype=float))
        if not np.isfinite(value):
            raise ValueError("function is not finite on the rectangle")
        return value
    return _grid_extremum(f, rect, grid_n, -1.0)
