"""Composite quadrature weights on uniform grids."""

from __future__ import annotations

import numpy as np

__all__ = ["simpson_weights", "split_simpson_matrix"]


def simpson_weights(m: int, h: float) -> np.ndarray:
    """Weights for ``m`` uniform intervals of width ``h`` (``m + 1`` nodes).

    Composite Simpson when ``m`` is even; for odd ``m >= 3`` the last three
    intervals use Simpson's 3/8 rule.  A single interval falls back to the
    trapezoid rule.
    """
    if m < 0:
        raise ValueError("negative interval count")
    w = np.zeros(m + 1)
    if m == 0:
        return w
    if m == 1:
        w[:] = h / 2
        return w
    even = m if m % 2 == 0 else m - 3
    if even:
        w[0:even + 1:2] += 2 * h / 3
        w[1:even:2] += 4 * h / 3
        w[0] -= h / 3
        w[even] -= h / 3
    if m % 2:
        w[even:] += 3 * h / 8 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def split_simpson_matrix(n: int) -> np.ndarray:
    """Row ``j`` integrates over ``[0, 1]`` split at node ``t_j`` of an ``n``-node grid.

    Each side of the split uses :func:`simpson_weights`, so integrands with a
    derivative jump on the diagonal ``s = t`` keep full order.
    """
    h = 1.0 / (n - 1)
    W = np.zeros((n, n))
    for j in range(n):
        W[j, : j + 1] += simpson_weights(j, h)
        W[j, j:] += simpson_weights(n - 1 - j, h)
    return W
