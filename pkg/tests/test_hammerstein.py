import time

import numpy as np
import pytest

from coexist.cones import ConeBox, phi_min, sup_norm
from coexist.hammerstein import (
    BoxEscape,
    H3Violation,
    HammersteinProblem,
    KernelSpec,
    NoConvergence,
    NotFound,
    apply_T,
    check_existence,
    check_multiplicity,
    compute_mM,
    find_solutions,
    green_dirichlet,
    kernel_constants,
    residual,
    solve_deflated_newton,
    solve_picard,
)
from coexist.nonlinearity import Nonlinearity
from helpers import EXAMPLE_LEVELS, constant_problem, example_problem

GREEN = KernelSpec()


def problem_with(f1, f2, N=257, kernel=GREEN):
    return HammersteinProblem((kernel, kernel), (f1, f2), N=N)


class TestKernelSpec:
    def test_green_values(self):
        assert green_dirichlet(0.25, 0.5) == pytest.approx(0.125)
        assert green_dirichlet(0.5, 0.25) == pytest.approx(0.125)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"window": (0.5, 0.25)},
            {"c": 0.0},
            {"c": 1.5},
            {"kind": "mystery"},
            {"kind": "tabulated", "kernel": np.ones((3, 4))},
            {"kind": "expression", "kernel": "t * s"},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            KernelSpec(**kwargs)

    def test_weight_forms_agree(self):
        s = np.linspace(0, 1, 9)
        by_text = KernelSpec(weight="1 + s").g(s)
        by_callable = KernelSpec(weight=lambda x: 1 + x).g(s)
        by_table = KernelSpec(weight=1 + np.linspace(0, 1, 101)).g(s)
        np.testing.assert_allclose(by_text, 1 + s)
        np.testing.assert_allclose(by_callable, 1 + s)
        np.testing.assert_allclose(by_table, 1 + s, atol=1e-14)


class TestKernelConstants:
    def test_example_constants(self):
        start = time.perf_counter()
        kc = kernel_constants(GREEN, 1025)
        assert time.perf_counter() - start < 1.0
        assert kc.A == pytest.approx(1 / 16, abs=1e-6)
        assert kc.B == pytest.approx(1 / 8, abs=1e-6)
        assert kc.h3_report == ()

    def test_constant_kernel(self):
        spec = KernelSpec(kind="expression", kernel="1", bound="1", c=1.0)
        kc = kernel_constants(spec, 257)
        assert kc.A == pytest.approx(0.5, abs=1e-14)
        assert kc.B == pytest.approx(1.0, abs=1e-14)

    def test_h3_violation_on_diagonal_zero(self):
        spec = KernelSpec(kind="expression", kernel="abs(t - s)", bound="1")
        with pytest.raises(H3Violation) as info:
            kernel_constants(spec, 257)
        assert any("c*Phi(s) > k(t,s)" in line for line in info.value.report)

    def test_non_strict_returns_report(self):
        spec = KernelSpec(kind="expression", kernel="abs(t - s)", bound="1")
        assert kernel_constants(spec, 257, strict=False).h3_report

    @pytest.mark.parametrize("quad_n", [8, 10, 7])
    def test_quad_n_validation(self, quad_n):
        with pytest.raises(ValueError):
            kernel_constants(GREEN, quad_n)

    def test_quadrature_refinement_is_stable(self):
        coarse = kernel_constants(GREEN, 1025)
        fine = kernel_constants(GREEN, 2049)
        assert abs(coarse.A - fine.A) < 1e-9
        assert abs(coarse.B - fine.B) < 1e-9

    def test_tabulated_green(self):
        t = np.linspace(0, 1, 129)
        spec = KernelSpec(kind="tabulated", kernel=green_dirichlet(t[:, None], t[None, :]), bound="s * (1 - s)")
        kc = kernel_constants(spec, 257)
        assert kc.A == pytest.approx(1 / 16, abs=1e-4)
        assert kc.B == pytest.approx(1 / 8, abs=1e-4)


class TestBoxExtrema:
    def test_monotone_corner(self):
        f = Nonlinearity.from_expr("u1 * u2", monotone=(True, True))
        P = problem_with(f, f)
        ext = compute_mM(P, (2.0, 2.0), (1.0, 4.0))
        assert ext.m[0] == 0.125

    def test_constant(self):
        f = Nonlinearity.constant(7.0)
        ext = compute_mM(problem_with(f, f), (1.0, 1.0), (0.5, 3.0))
        assert ext.m == (7.0, 7.0) and ext.M == (7.0, 7.0)

    @pytest.mark.parametrize("level,rel", [(0, 1e-6), (1, 1e-4)])
    def test_example_m2(self, example, level, rel):
        ext = compute_mM(example, *EXAMPLE_LEVELS[level])
        assert ext.m[1] >= 2.0**14
        assert ext.m[1] == pytest.approx(2.0**14, rel=rel)

    def test_equal_alpha_beta_rejected(self, example):
        with pytest.raises(ValueError):
            compute_mM(example, (1.0, 2.0), (1.0, 3.0))


class TestCertificates:
    def test_example_level1_passes(self, example):
        cert = check_existence(example, *EXAMPLE_LEVELS[0])
        assert cert.passed
        assert len(cert.inequalities) == 4
        level = cert.levels[0]
        assert level.regime == "CE" and level.expected_index == -1

    def test_zero_nonlinearity_fails(self):
        f = Nonlinearity.constant(0.0)
        cert = check_existence(problem_with(f, f), (1.0, 1.0), (0.1, 0.1))
        assert not cert.passed
        assert {r.name for r in cert.failures()} == {"A1*m1 > beta1", "A2*m2 > beta2"}

    def test_inflated_beta1_fails(self, example):
        (a1, a2), (_, b2) = EXAMPLE_LEVELS[0]
        cert = check_existence(example, (a1, a2), (1.0, b2))
        assert [r.name for r in cert.failures()] == ["A1*m1 > beta1"]

    def test_example_multiplicity(self, example):
        start = time.perf_counter()
        cert = check_multiplicity(example, EXAMPLE_LEVELS)
        assert time.perf_counter() - start < 5.0
        assert len(cert.inequalities) == 12
        assert all(r.passed for r in cert.structural)
        # the second level's lower bound for f1 sits at u1 = c1*beta1 = 16, sin(u2) = 0
        [failure] = cert.failures()
        assert failure.name == "A1*m1^2 > beta1^2"
        assert failure.lhs == pytest.approx((1000 + 6 ** (1 / 3)) / 16, rel=1e-4)
        assert failure.rhs == 64.0

    def test_identical_levels_not_disjoint(self, example):
        cert = check_multiplicity(example, [EXAMPLE_LEVELS[0], EXAMPLE_LEVELS[0], EXAMPLE_LEVELS[2]])
        names = {r.name for r in cert.structural if not r.passed}
        assert any(n.startswith("levels 1 and 2 disjoint") for n in names)

    def test_level_outside_third_box(self, example):
        outside = ((0.25, 2.0), (2.0**-12, 512.0))
        cert = check_multiplicity(example, [outside, EXAMPLE_LEVELS[1], EXAMPLE_LEVELS[2]])
        assert [r.name for r in cert.structural if not r.passed] == ["level 1 inside level 3"]

    def test_needs_three_levels(self, example):
        with pytest.raises(ValueError):
            check_multiplicity(example, EXAMPLE_LEVELS[:2])

    def test_deterministic_json(self, example):
        a = check_multiplicity(example, EXAMPLE_LEVELS).to_json()
        b = check_multiplicity(example_problem(), EXAMPLE_LEVELS).to_json()
        assert a == b

    def test_json_shape(self, example):
        d = check_existence(example, *EXAMPLE_LEVELS[0]).to_dict()
        assert {"schema", "problem", "levels", "regime", "expected_index", "grid_meta", "pass"} <= set(d)
        rec = d["levels"][0]["inequalities"][0]
        assert set(rec) == {"name", "lhs", "rhs", "relation", "margin", "pass"}


class TestOperator:
    def test_zero_nonlinearity(self):
        f = Nonlinearity.constant(0.0)
        P = problem_with(f, f, N=33)
        np.testing.assert_array_equal(apply_T(P, np.ones((2, 33))), 0.0)

    def test_constant_closed_form(self, const_problem):
        t = const_problem.nodes
        out = apply_T(const_problem, np.zeros((2, t.size)))
        np.testing.assert_allclose(out, np.stack([t * (1 - t) / 2] * 2), atol=1e-8)

    def test_identity_nonlinearity_at_zero(self):
        P = problem_with(Nonlinearity.from_expr("u1"), Nonlinearity.from_expr("u2"), N=33)
        np.testing.assert_array_equal(apply_T(P, np.zeros((2, 33))), 0.0)

    def test_sine_eigenfunction_converges_at_fourth_order(self):
        errors = []
        for N in (17, 33, 65):
            P = problem_with(Nonlinearity.from_expr("u1"), Nonlinearity.from_expr("u2"), N=N)
            u = np.sin(np.pi * P.nodes)
            out = apply_T(P, np.stack([u, u]))
            errors.append(sup_norm(out - u / np.pi**2))
        assert errors[0] / errors[1] >= 4 and errors[1] / errors[2] >= 4

    def test_rejects_negative_input(self, const_problem):
        with pytest.raises(ValueError, match="nonnegative"):
            apply_T(const_problem, -np.ones((2, const_problem.N)))

    def test_rejects_wrong_shape(self, const_problem):
        with pytest.raises(ValueError, match="shape"):
            apply_T(const_problem, np.ones((2, 5)))

    def test_cone_invariance(self, example):
        rng = np.random.default_rng(2)
        c = example.c
        for _ in range(50):
            u = rng.uniform(0, 1, (2, example.N)) * rng.uniform(0, 20, (2, 1))
            out = apply_T(example, u)
            assert np.all(out >= 0)
            for i in range(2):
                assert phi_min(out[i], example.window) >= c[i] * sup_norm(out[i]) - 1e-10

    def test_residual_at_zero(self, const_problem):
        zero = np.zeros((2, const_problem.N))
        assert residual(const_problem, zero) == pytest.approx(sup_norm(apply_T(const_problem, zero)))

    def test_residual_of_scaled_fixed_point(self, const_problem):
        rec = solve_picard(const_problem, ConeBox((0.01, 0.01), (1, 1)), np.full((2, const_problem.N), 0.5))
        assert rec.residual < 1e-14
        assert residual(const_problem, 2 * rec.u) > 0.1


class TestPicard:
    def test_constant_problem(self, const_problem):
        t = const_problem.nodes
        rec = solve_picard(const_problem, ConeBox((0.01, 0.01), (1, 1)), np.full((2, t.size), 0.5))
        assert rec.iterations <= 2
        np.testing.assert_allclose(rec.u, np.stack([t * (1 - t) / 2] * 2), atol=1e-12)
        assert rec.localized and rec.method == "picard"

    def test_zero_tol_rejected(self, const_problem):
        with pytest.raises(ValueError):
            solve_picard(const_problem, ConeBox((0.01, 0.01), (1, 1)), np.full((2, 257), 0.5), tol=0)

    def test_init_outside_box_rejected(self, const_problem):
        with pytest.raises(ValueError, match="outside"):
            solve_picard(const_problem, ConeBox((0.01, 0.01), (1, 1)), np.full((2, 257), 5.0))

    def test_retracts_small_components(self, const_problem):
        box = ConeBox((0.2, 0.01), (1.0, 1.0))
        # T pushes component 1 to norm 1/8 < 0.2; Picard keeps lifting it onto the inner sphere
        with pytest.raises(NoConvergence) as info:
            solve_picard(const_problem, box, np.full((2, 257), 0.5), max_iter=20)
        assert sup_norm(info.value.last[0]) == pytest.approx(0.2)

    def test_example_level1_cycles(self, example):
        # the second component is expansive here: T shrinks it and the retraction lifts it back
        init = np.stack([np.full(example.N, 2.0**-8), np.full(example.N, 4.0)])
        with pytest.raises(NoConvergence) as info:
            solve_picard(example, ConeBox.from_alpha_beta(*EXAMPLE_LEVELS[0]), init, max_iter=50)
        assert sup_norm(info.value.last[1]) == pytest.approx(2.0)

    def test_escape_from_small_outer_bound(self, const_problem):
        with pytest.raises(BoxEscape, match="component 1"):
            solve_picard(const_problem, ConeBox((0.01, 0.01), (0.1, 1.0)), np.full((2, 257), 0.05))


class TestDeflatedNewton:
    def test_unique_solution_not_found_twice(self, const_problem):
        box = ConeBox((0.01, 0.01), (1, 1))
        rec = solve_deflated_newton(const_problem, box)
        assert rec.residual < 1e-10
        with pytest.raises(NotFound):
            solve_deflated_newton(const_problem, box, known=[rec])

    def test_example_level1(self, example):
        box = ConeBox.from_alpha_beta(*EXAMPLE_LEVELS[0])
        rec = solve_deflated_newton(example, box)
        assert rec.residual < 1e-10 and rec.localized
        try:
            other = solve_deflated_newton(example, box, known=[rec])
        except NotFound:
            return
        assert sup_norm(other.u - rec.u) > 1e-6

    def test_zero_tol_rejected(self, const_problem):
        with pytest.raises(ValueError):
            solve_deflated_newton(const_problem, ConeBox((0.01, 0.01), (1, 1)), tol=0)


class TestFindSolutions:
    def test_example_three_levels(self, example):
        report = find_solutions(example, EXAMPLE_LEVELS)
        by_level = {rec.level: rec for rec in report.solutions}
        assert set(by_level) >= {1, 2}
        u, v = by_level[1], by_level[2]
        assert 2.0**-9 < u.norms[0] < 0.25 and 2 < u.norms[1] < 512
        assert 64 < v.norms[0] < 522 and 2 < v.norms[1] < 512
        if 3 in by_level:
            w = by_level[3]
            assert 0.25 <= w.norms[0] <= 64 and 2 < w.norms[1] < 512
        for rec in report.solutions:
            assert rec.residual < 1e-8
            assert rec.residual == residual(example, rec.u)

    def test_constant_problem_single_level(self, const_problem):
        report = find_solutions(const_problem, [((1.0, 1.0), (0.01, 0.01))])
        [rec] = report.solutions
        assert rec.method == "picard" and rec.iterations <= 2

    def test_csv(self, const_problem):
        report = find_solutions(const_problem, [((1.0, 1.0), (0.01, 0.01))])
        lines = report.solutions[0].to_csv().splitlines()
        assert lines[0] == "t,u1,u2"
        assert len(lines) == const_problem.N + 1
        assert lines[1] == "0.0,0.0,0.0"
