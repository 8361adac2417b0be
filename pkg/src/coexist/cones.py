"""Cone-section geometry shared by the problem modules.

Grid functions are plain 1-D numpy arrays sampled on a uniform grid over
``[0, 1]``; pairs ``(u1, u2)`` are arrays of shape ``(2, N)``.  All norms
are maximum norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ConeBox",
    "PhiSection",
    "Tag",
    "Regime",
    "uniform_grid",
    "sup_norm",
    "retract_component",
    "retract_pair",
    "phi_min",
    "expected_index",
]


def uniform_grid(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("a grid needs at least two nodes")
    return np.linspace(0.0, 1.0, n)


def sup_norm(u) -> float:
    return float(np.max(np.abs(u))) if np.size(u) else 0.0


@dataclass(frozen=True)
class ConeBox:
    """Component-wise annulus ``inner_i <= ||u_i|| <= outer_i``."""

    inner: tuple
    outer: tuple

    def __post_init__(self):
        inner = tuple(float(x) for x in self.inner)
        outer = tuple(float(x) for x in self.outer)
        if len(inner) != len(outer):
            raise ValueError("inner and outer radii must have the same length")
        for r, R in zip(inner, outer):
            if not 0 < r < R:
                raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "outer", outer)

    @classmethod
    def from_alpha_beta(cls, alpha, beta) -> "ConeBox":
        """``r_i = min(alpha_i, beta_i)``, ``R_i = max(alpha_i, beta_i)``."""
        for a, b in zip(alpha, beta):
            if a == b:
                raise ValueError("alpha_i and beta_i must differ")
        return cls(
            tuple(min(a, b) for a, b in zip(alpha, beta)),
            tuple(max(a, b) for a, b in zip(alpha, beta)),
        )

    def contains(self, norms, strict: bool = True) -> tuple:
        if strict:
            return tuple(r < x < R for x, r, R in zip(norms, self.inner, self.outer))
        return tuple(r <= x <= R for x, r, R in zip(norms, self.inner, self.outer))

    def contains_box(self, other: "ConeBox") -> bool:
        return all(
            r <= r2 and R2 <= R
            for r, R, r2, R2 in zip(self.inner, self.outer, other.inner, other.outer)
        )

    def disjoint_from(self, other: "ConeBox") -> bool:
        """True when some component separates the two annuli strictly."""
        return any(
            R1 < r2 or R2 < r1
            for r1, R1, r2, R2 in zip(self.inner, self.outer, other.inner, other.outer)
        )


@dataclass(frozen=True)
class PhiSection:
    """Section ``inner_i <= min_[a,b] u_i`` and ``||u_i|| <= outer_i``."""

    inner: tuple
    outer: tuple
    window: tuple

    def __post_init__(self):
        inner = tuple(float(x) for x in self.inner)
        outer = tuple(float(x) for x in self.outer)
        a, b = (float(x) for x in self.window)
        if not 0 < a < b < 1:
            raise ValueError(f"window must satisfy 0 < a < b < 1, got [{a}, {b}]")
        for r, R in zip(inner, outer):
            if not (r > 0 and R > 0):
                raise ValueError("section bounds must be positive")
            # the constant function R lies in the section iff r <= R
            if r > R:
                raise ValueError(f"empty section: inner bound {r} exceeds outer bound {R}")
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "window", (a, b))


class Tag(str, Enum):
    COMPRESSIVE = "C"
    EXPANSIVE = "E"


@dataclass(frozen=True)
class Regime:
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(Tag(t) for t in self.tags))

    @classmethod
    def parse(cls, text: str) -> "Regime":
        return cls(tuple(text.upper()))

    @property
    def n_expansive(self) -> int:
        return sum(t is Tag.EXPANSIVE for t in self.tags)

    def swapped(self) -> "Regime":
        return Regime(self.tags[::-1])

    def __str__(self) -> str:
        return "".join(t.value for t in self.tags)


def expected_index(regime: Regime) -> int:
    """Fixed point index over the section for a given compression/expansion pattern.

    Both compressive gives 1, one of each gives -1, both expansive gives 1.
    This is a lookup, not a degree computation.
    """
    if len(regime.tags) != 2:
        raise ValueError("index table is defined for two components")
    return {0: 1, 1: -1, 2: 1}[regime.n_expansive]


def retract_component(u, r: float, R: float, h=None) -> np.ndarray:
    """Push ``u`` with ``||u|| < r`` onto the sphere ``||u|| = r`` inside the cone.

    For ``||u|| < r`` returns ``r * w / ||w||`` with ``w = u + (r - ||u||)^2 h``;
    points with ``r <= ||u|| <= R`` are returned unchanged.  ``h`` defaults
    to the all-ones element and must be nonnegative and nonzero.
    """
    u = np.asarray(u, dtype=float)
    if not 0 < r < R:
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    h = np.ones_like(u) if h is None else np.asarray(h, dtype=float)
    if h.shape != u.shape:
        raise ValueError("h must have the same shape as u")
    if np.any(h < 0) or not np.any(h > 0):
        raise ValueError("h must be a nonzero nonnegative element")
    norm = sup_norm(u)
    if norm > R:
        raise ValueError(f"||u|| = {norm} exceeds the outer radius {R}")
    if norm >= r:
        return u
    w = u + (r - norm) ** 2 * h
    out = r * w / sup_norm(w)
    # exact norm r: the maximizing entry can be off by an ulp after division
    k = int(np.argmax(np.abs(out)))
    out[k] = r if out[k] >= 0 else -r
    return out


def retract_pair(u: np.ndarray, box: ConeBox, h=None) -> np.ndarray:
    return np.stack(
        [retract_component(u[i], box.inner[i], box.outer[i], None if h is None else h[i])
         for i in range(len(box.inner))]
    )


def phi_min(u, window, nodes=None) -> float:
    """Minimum of a grid function over ``[a, b]``.

    Window endpoints that fall between nodes are evaluated by linear
    interpolation, so the value does not depend on grid alignment.
    """
    u = np.asarray(u, dtype=float)
    a, b = window
    if not a < b:
        raise ValueError(f"empty window [{a}, {b}]")
    t = uniform_grid(u.size) if nodes is None else np.asarray(nodes, dtype=float)
    if a < t[0] or b > t[-1]:
        raise ValueError("window lies outside the grid")
    inside = u[(t >= a) & (t <= b)]
    ends = np.interp([a, b], t, u)
    return float(min(ends.min(), inside.min())) if inside.size else float(ends.min())
