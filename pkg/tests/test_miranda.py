import time

import numpy as np
import pytest
from scipy.optimize import brentq

from coexist.miranda import (
    FaceCondition,
    MirandaPreconditionError,
    NotFound,
    Rectangle,
    check_faces,
    find_zero,
    kp_fixed_point_rn,
    pm_to_fixed_point,
    translate_to_positive,
)
from helpers import planted_linear_system, sign_change_cells

A, B, FAIL = FaceCondition.A, FaceCondition.B, FaceCondition.FAIL
UNIT = Rectangle((0.0, 0.0), (1.0, 1.0))
GOLDEN = brentq(lambda t: t * t + t - 1, 0, 1)


def golden_field(x):
    return np.array([x[0] ** 2 + x[1] - 1, x[0] - x[1]])


def linear_field(x):
    return np.array([x[0] - 0.5, x[1] - 0.7])


class TestRectangle:
    def test_invalid(self):
        with pytest.raises(ValueError):
            Rectangle((0.0, 1.0), (1.0, 1.0))
        with pytest.raises(ValueError):
            Rectangle((0.0,), (1.0, 2.0))

    def test_bisect_longest_edge(self):
        left, right = Rectangle((0, 0), (1, 3)).bisect()
        assert left.upper == (1.0, 1.5) and right.lower == (0.0, 1.5)

    def test_contains(self):
        assert UNIT.contains((1.0, 0.0))
        assert not UNIT.contains((1.0 + 1e-9, 0.5))


class TestFaces:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_identity(self, n):
        rect = Rectangle((-1.0,) * n, (1.0,) * n)
        assert check_faces(lambda x: np.asarray(x), rect).conditions == (B,) * n

    def test_mixed_example(self):
        report = check_faces(golden_field, UNIT)
        assert report.conditions == (B, A)
        assert report.ok

    def test_constant_fails(self):
        report = check_faces(lambda x: np.ones_like(np.asarray(x)), UNIT)
        assert report.conditions == (FAIL, FAIL)
        assert not report.ok

    def test_negation_swaps(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            g, _, _ = planted_linear_system(rng, n=3)
            rect = Rectangle((0.0,) * 3, (1.0,) * 3)
            plain = check_faces(g, rect).conditions
            negated = check_faces(lambda x: -g(x), rect).conditions
            assert negated == tuple({A: B, B: A, FAIL: FAIL}[c] for c in plain)

    def test_scalar_loop_fallback(self):
        calls = []

        def scalar_only(x):
            x = np.asarray(x, dtype=float)
            if x.ndim != 1:
                raise TypeError("one point at a time")
            calls.append(1)
            return golden_field(x)

        assert check_faces(scalar_only, UNIT, samples_per_face=5).conditions == (B, A)
        assert len(calls) > 0

    def test_report_dict(self):
        d = check_faces(golden_field, UNIT).to_dict()
        assert d["conditions"] == ["B", "A"] and d["ok"] and d["samples_per_face"] == 33


class TestReductions:
    def test_constant_field(self):
        f, lam = pm_to_fixed_point(lambda x: -np.ones_like(np.asarray(x, float)), Rectangle((1, 1), (2, 2)))
        assert lam == pytest.approx(1 / 1.1)
        np.testing.assert_allclose(f(np.array([1.0, 1.5])), np.array([1.0, 1.5]) - 1 / 1.1)

    def test_fixed_point_of_shifted_identity(self):
        f, _ = pm_to_fixed_point(lambda x: np.asarray(x) - 1.5, Rectangle((1, 1), (2, 2)))
        np.testing.assert_allclose(f(np.array([1.5, 1.5])), [1.5, 1.5])

    def test_zero_field(self):
        _, lam = pm_to_fixed_point(lambda x: np.zeros_like(np.asarray(x, float)), Rectangle((1, 1), (2, 2)))
        assert lam == 1.0

    def test_needs_positive_corner(self):
        with pytest.raises(ValueError):
            pm_to_fixed_point(golden_field, UNIT)

    def test_orthant_on_samples(self):
        rng = np.random.default_rng(11)
        g, _, _ = planted_linear_system(rng, n=2)
        shifted, rect, shift = translate_to_positive(g, Rectangle((-1.0, -2.0), (1.0, 1.0)))
        np.testing.assert_array_equal(shift, [3.0, 3.0])
        assert rect.lower == (2.0, 1.0)
        f, _ = pm_to_fixed_point(shifted, rect)
        pts = rng.uniform(rect.lower, rect.upper, (10_000, 2)).T
        assert np.all(f(pts) >= 0)

    def test_translation_preserves_zero(self):
        shifted, rect, shift = translate_to_positive(linear_field, UNIT)
        res = find_zero(shifted, rect)
        np.testing.assert_allclose(res.x - shift, [0.5, 0.7], atol=1e-10)

    def test_positive_rectangle_untouched(self):
        g, rect, shift = translate_to_positive(linear_field, Rectangle((1, 1), (2, 2)))
        assert g is linear_field and np.all(shift == 0)


class TestFindZero:
    def test_linear(self):
        res = find_zero(linear_field, UNIT, tol=1e-10)
        np.testing.assert_allclose(res.x, [0.5, 0.7], atol=1e-10)

    @pytest.mark.parametrize("polish", [True, False])
    def test_golden(self, polish):
        start = time.perf_counter()
        res = find_zero(golden_field, UNIT, tol=1e-10, polish=polish)
        assert time.perf_counter() - start < 2.0
        np.testing.assert_allclose(res.x, [GOLDEN, GOLDEN], atol=1e-8)
        assert res.polished is polish
        assert UNIT.contains(res.x)

    def test_pure_bisection_reaches_1e6(self):
        res = find_zero(golden_field, UNIT, tol=1e-6, polish=False)
        assert np.max(np.abs(res.x - GOLDEN)) < 1e-6

    def test_fail_rejected(self):
        with pytest.raises(MirandaPreconditionError) as info:
            find_zero(lambda x: np.ones_like(np.asarray(x, float)), UNIT)
        assert info.value.report.conditions == (FAIL, FAIL)

    def test_depth_limit(self):
        with pytest.raises(NotFound, match="max_depth"):
            find_zero(golden_field, UNIT, tol=1e-12, max_depth=5, polish=False)

    def test_zero_tol_rejected(self):
        with pytest.raises(ValueError):
            find_zero(golden_field, UNIT, tol=0)

    def test_three_dimensional(self):
        def g(x):
            x = np.asarray(x, float)
            return np.array([x[0] + 0.2 * x[1] ** 2 - 0.5, x[1] - 0.3 * x[2] - 0.2, np.sin(x[2]) - 0.4])

        rect = Rectangle((0.0,) * 3, (1.0,) * 3)
        res = find_zero(g, rect, tol=1e-10)
        assert res.residual < 1e-10 and rect.contains(res.x)
        z = np.arcsin(0.4)
        y = 0.3 * z + 0.2
        np.testing.assert_allclose(res.x, [0.5 - 0.2 * y**2, y, z], atol=1e-9)

    @pytest.mark.property
    def test_planted_round_trip(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            g, _, x_star = planted_linear_system(rng, n=2)
            cells = sign_change_cells(g, (0, 0), (1, 1))
            assert 1 <= len(cells) <= 4
            assert np.max(np.abs(cells - x_star), axis=1).max() < 1e-3
            res = find_zero(g, UNIT, tol=1e-10, polish=False)
            assert np.max(np.abs(res.x - x_star)) < 1e-10
            assert UNIT.contains(res.x)

    def test_result_dict(self):
        d = find_zero(linear_field, UNIT).to_dict()
        assert {"x", "residual", "depth", "polished"} <= set(d)


class TestFixedPointRn:
    def test_midpoint_constant(self):
        r, R = np.array([1.0, 2.0]), np.array([3.0, 6.0])
        res = kp_fixed_point_rn(lambda x: np.broadcast_to(((r + R) / 2).reshape(-1, *[1] * (np.ndim(x) - 1)),
                                                          np.shape(x)), r, R)
        np.testing.assert_allclose(res.x, (r + R) / 2, atol=1e-10)

    def test_sublinear(self):
        c = np.array([2.0, 2.5])

        def f(x):
            return c.reshape(-1, *[1] * (np.ndim(x) - 1)) * np.sqrt(np.asarray(x, float))

        res = kp_fixed_point_rn(f, [1.0, 1.0], [9.0, 9.0])
        oracle = [brentq(lambda t, ci=ci: t - ci * np.sqrt(t), 1, 9) for ci in c]
        np.testing.assert_allclose(res.x, oracle, atol=1e-9)

    def test_violation_rejected(self):
        with pytest.raises(MirandaPreconditionError):
            kp_fixed_point_rn(lambda x: np.asarray(x, float) + 1, [1.0, 1.0], [2.0, 2.0])

    def test_bad_radii(self):
        with pytest.raises(ValueError):
            kp_fixed_point_rn(lambda x: x, [2.0], [1.0])
