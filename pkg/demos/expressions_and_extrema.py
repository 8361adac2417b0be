"""Nonlinearity expressions and their extrema over parameter rectangles.

The expression language covers arithmetic, the usual elementary functions
and ``piecewise`` definitions; the box optimizer returns the lower-left or
upper-right corner for declared monotone functions and otherwise searches a
grid with local refinement.
"""

import warnings

from coexist.boxopt import MonotoneTag, box_max, box_min
from coexist.expr import PiecewiseDiscontinuityWarning, parse, render
from coexist.nonlinearity import Nonlinearity

H = "piecewise(u1; 0, 1: cbrt(u1); 1, 10: u1^3; 10, inf: cbrt(u1 - 10) + 1000)"


def main():
    node = parse(H + " * (1 + sin(u2)^2)")
    print("canonical form:", render(node))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PiecewiseDiscontinuityWarning)
        parse("piecewise(u1; 0, 1: u1; 1, inf: u1 + 1)")
    print("jump detected:", caught[0].message)

    f1 = Nonlinearity.from_expr(H + " * (1 + sin(u2)^2)")
    rect = ((16.0, 64.0), (0.5, 512.0))
    print(f"min f1 on {rect}: {box_min(f1, rect):.6f}  (sin u2 vanishes at u2 = pi)")
    print(f"max f1 on {rect}: {box_max(f1, rect):.6f}")

    g = Nonlinearity.from_expr("u1 * u2 + sqrt(u2)", monotone=(True, True))
    print("monotone corner min:", box_min(g, ((1, 2), (4, 9)), MonotoneTag.nondecreasing()))


if __name__ == "__main__":
    main()
