"""Locating zeros of planar fields by Miranda bisection.

The face classification tells which sign pattern each coordinate follows;
bisection then keeps only the halves whose faces still qualify.
"""

import numpy as np

from coexist.miranda import Rectangle, check_faces, find_zero, kp_fixed_point_rn, pm_to_fixed_point


def golden(x):
    return np.array([x[0] ** 2 + x[1] - 1, x[0] - x[1]])


def main():
    unit = Rectangle((0.0, 0.0), (1.0, 1.0))
    faces = check_faces(golden, unit)
    print("face conditions:", [c.value for c in faces.conditions])

    bare = find_zero(golden, unit, tol=1e-10, polish=False)
    print(f"bisection only: x = {bare.x}, depth {bare.depth}")
    polished = find_zero(golden, unit, tol=1e-10)
    print(f"with Newton polish: x = {polished.x}, depth {polished.depth}")
    print(f"(sqrt(5) - 1)/2 = {(np.sqrt(5) - 1) / 2}")

    shifted = Rectangle((1.0, 1.0), (2.0, 2.0))
    f, lam = pm_to_fixed_point(lambda x: np.asarray(x) - 1.5, shifted)
    print(f"zero-to-fixed-point map uses lambda = {lam:.4f}; f(1.5, 1.5) = {f(np.array([1.5, 1.5]))}")

    def sublinear(x):
        return np.array([2.0, 2.5]).reshape(-1, *[1] * (np.ndim(x) - 1)) * np.sqrt(x)

    fixed = kp_fixed_point_rn(sublinear, [1.0, 1.0], [9.0, 9.0])
    print(f"fixed point of (2 sqrt(x1), 2.5 sqrt(x2)) in [1, 9]^2: {fixed.x}")


if __name__ == "__main__":
    main()
