"""Inequality records, certificates and solution records."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SCHEMA_VERSION",
    "Inequality",
    "LevelCertificate",
    "Certificate",
    "SolutionRecord",
    "greater",
    "less",
    "structural",
    "safety_margin",
]

SCHEMA_VERSION = 1


def safety_margin(rhs: float) -> float:
    """Slack required on strict inequalities whose sides are sampled."""
    return 1e-9 * (1.0 + abs(rhs))


@dataclass(frozen=True)
class Inequality:
    """One checked relation.  ``margin`` is positive exactly when the relation holds."""

    name: str
    lhs: float
    rhs: float
    relation: str
    margin: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "margin": self.margin,
            "pass": self.passed,
        }


def greater(name: str, lhs: float, rhs: float) -> Inequality:
    lhs, rhs = float(lhs), float(rhs)
    margin = lhs - rhs
    return Inequality(name, lhs, rhs, ">", margin, margin > safety_margin(rhs))


def less(name: str, lhs: float, rhs: float) -> Inequality:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    return Inequality(name, lhs, rhs, "<", margin, margin > safety_margin(rhs))


def structural(name: str, ok: bool, detail: str = "") -> Inequality:
    """A yes/no check recorded in the same shape as an inequality."""
    return Inequality(name + (f" [{detail}]" if detail else ""), float(ok), 1.0, "==",
                      0.0 if ok else -1.0, bool(ok))


@dataclass
class LevelCertificate:
    alpha: tuple
    beta: tuple
    inequalities: list
    structural: list
    regime: str
    expected_index: int

    @property
    def inner(self) -> tuple:
        return tuple(min(a, b) for a, b in zip(self.alpha, self.beta))

    @property
    def outer(self) -> tuple:
        return tuple(max(a, b) for a, b in zip(self.alpha, self.beta))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.inequalities) and all(r.passed for r in self.structural)

    def failures(self) -> list:
        return [r for r in self.inequalities + self.structural if not r.passed]

    def to_dict(self) -> dict:
        return {
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "inner": list(self.inner),
            "outer": list(self.outer),
            "regime": self.regime,
            "expected_index": self.expected_index,
            "inequalities": [r.to_dict() for r in self.inequalities],
            "structural": [r.to_dict() for r in self.structural],
            "pass": self.passed,
        }


@dataclass
class Certificate:
    """Machine-checkable record of every hypothesis of an existence statement."""

    problem: str
    levels: list
    structural: list = field(default_factory=list)
    grid_meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(lv.passed for lv in self.levels) and all(r.passed for r in self.structural)

    @property
    def inequalities(self) -> list:
        return [r for lv in self.levels for r in lv.inequalities]

    def failures(self) -> list:
        return [r for lv in self.levels for r in lv.failures()] + [
            r for r in self.structural if not r.passed
        ]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "problem": self.problem,
            "levels": [lv.to_dict() for lv in self.levels],
            "structural": [r.to_dict() for r in self.structural],
            "regime": [lv.regime for lv in self.levels],
            "expected_index": [lv.expected_index for lv in self.levels],
            "grid_meta": self.grid_meta,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class SolutionRecord:
    """A computed fixed point on the grid, with its residual and localization.

    ``inside`` holds one strict-membership flag per component; for
    sections defined by the min-functional ``phi_values`` is filled too.
    """

    u: np.ndarray
    nodes: np.ndarray
    residual: float
    norms: tuple
    inside: tuple
    method: str
    iterations: int
    phi_values: tuple | None = None
    level: int | None = None

    @property
    def localized(self) -> bool:
        return all(self.inside)

    def summary(self) -> dict:
        out = {
            "method": self.method,
            "iterations": self.iterations,
            "residual": self.residual,
            "norms": list(self.norms),
            "inside": list(self.inside),
            "level": self.level,
        }
        if self.phi_values is not None:
            out["phi_values"] = list(self.phi_values)
        return out

    def to_csv(self, header=("t", "u1", "u2")) -> str:
        lines = [",".join(header)]
        for t, a, b in zip(self.nodes, self.u[0], self.u[1]):
            lines.append(f"{float(t)!r},{float(a)!r},{float(b)!r}")
        return "\n".join(lines) + "\n"
