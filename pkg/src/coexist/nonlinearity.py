"""Nonlinearities ``f_i(u1, u2)`` with their declared monotonicity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import expr
from .boxopt import MonotoneTag

__all__ = ["Nonlinearity"]


@dataclass(frozen=True)
class Nonlinearity:
    """A continuous map of the closed quadrant into ``[0, inf)``.

    ``func`` must accept numpy arrays.  ``source`` is kept when the
    function came from the expression language so it can be serialized.
    """

    func: Callable
    tag: MonotoneTag = MonotoneTag()
    source: str | None = None

    @classmethod
    def from_expr(cls, source: str, monotone=(False, False)) -> "Nonlinearity":
        node = expr.parse(source)
        return cls(expr.as_function(node), MonotoneTag.from_flags(monotone), source)

    @classmethod
    def constant(cls, value: float) -> "Nonlinearity":
        value = float(value)
        return cls(lambda u1, u2: np.full(np.broadcast(u1, u2).shape, value),
                   MonotoneTag.nondecreasing(), repr(value))

    def __call__(self, u1, u2):
        return self.func(u1, u2)
