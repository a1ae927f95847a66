"""Unconstrained maximizers, numeric derivatives, simplex projection, AL."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovmix.exceptions import EstimationError
from markovmix.optim import (
    ConstraintSet,
    maximize_auglag,
    maximize_unconstrained,
    numeric_gradient,
    numeric_hessian,
    project_simplex,
)

METHODS = ["newton-raphson", "bfgs", "nelder-mead"]

SIMPLEX_2 = ConstraintSet(
    equalities=[lambda w: float(w.sum() - 1.0)],
    inequalities=[lambda w: float(w[0]), lambda w: float(w[1])],
    equality_jacobians=[lambda w: np.ones(2)],
    inequality_jacobians=[lambda w: np.array([1.0, 0.0]), lambda w: np.array([0.0, 1.0])],
)


class TestMaximizeUnconstrained:
    @pytest.mark.parametrize("method", METHODS)
    def test_1d_quadratic(self, method):
        res = maximize_unconstrained(lambda t: -((t[0] - 3.0) ** 2), [0.0], method=method)
        assert res.converged
        assert abs(res.argmax[0] - 3.0) < 1e-6

    @pytest.mark.parametrize("method", METHODS)
    def test_2d_quadratic(self, method):
        res = maximize_unconstrained(
            lambda t: -t[0] ** 2 - 10.0 * t[1] ** 2, [1.0, 1.0], method=method
        )
        assert res.converged
        assert np.max(np.abs(res.argmax)) < 1e-6

    def test_rosenbrock_negated_bfgs(self):
        def neg_rosen(t):
            return -(100.0 * (t[1] - t[0] ** 2) ** 2 + (1.0 - t[0]) ** 2)

        res = maximize_unconstrained(neg_rosen, [-1.2, 1.0], method="bfgs")
        assert res.converged
        assert np.max(np.abs(res.argmax - 1.0)) < 1e-4

    @pytest.mark.parametrize("method", METHODS)
    def test_methods_agree_on_concave_quadratic(self, method):
        # closed-form maximizer of -(x-a)'A(x-a) is a
        target = np.array([0.4, -1.3])
        mat = np.array([[2.0, 0.3], [0.3, 1.0]])

        def f(t):
            d = t - target
            return -d @ mat @ d

        res = maximize_unconstrained(f, [2.0, 2.0], method=method)
        assert np.max(np.abs(res.argmax - target)) < 1e-6

    def test_non_finite_start_rejected(self):
        with np.errstate(invalid="ignore"), pytest.raises(EstimationError, match="finite"):
            maximize_unconstrained(lambda t: float(np.log(t[0])), [-1.0])

    def test_iteration_cap_reports_non_convergence(self):
        res = maximize_unconstrained(
            lambda t: -abs(t[0]) ** 1.1, [5.0], method="bfgs", max_iter=2
        )
        assert not res.converged

    def test_extra_starts_pick_best(self):
        # bimodal: global max at 3, local at -2
        def f(t):
            return float(-((t[0] - 3) ** 2) * ((t[0] + 2) ** 2) - 0.1 * (t[0] - 3) ** 2)

        res = maximize_unconstrained(f, [-2.5], method="bfgs", extra_starts=[[2.5]])
        assert abs(res.argmax[0] - 3.0) < 1e-4


class TestNumericDerivatives:
    def test_gradient_and_hessian_of_square(self):
        grad = numeric_gradient(lambda t: t[0] ** 2, np.array([2.0]), h=1e-5)
        hess = numeric_hessian(lambda t: t[0] ** 2, np.array([2.0]), h=1e-5)
        assert abs(grad[0] - 4.0) < 1e-6
        assert abs(hess[0, 0] - 2.0) < 1e-6

    def test_linear_function_zero_hessian(self):
        hess = numeric_hessian(lambda t: 3.0 * t[0] - 2.0 * t[1], np.array([0.3, -0.1]))
        assert np.max(np.abs(hess)) < 1e-7

    def test_hessian_exactly_symmetric(self):
        hess = numeric_hessian(
            lambda t: t[0] ** 2 * t[1] + np.sin(t[1]) * t[2], np.array([1.2, 0.7, -0.4])
        )
        assert np.array_equal(hess, hess.T)

    def test_cross_terms(self):
        hess = numeric_hessian(lambda t: t[0] * t[1], np.array([0.6, -0.2]))
        assert hess[0, 1] == pytest.approx(1.0, abs=1e-7)

    def test_non_finite_stencil_raises(self):
        with np.errstate(invalid="ignore"), pytest.raises(EstimationError, match="non-finite"):
            numeric_gradient(lambda t: float(np.log(t[0])), np.array([1e-7]), h=1e-5)


class TestProjectSimplex:
    def test_already_feasible(self):
        assert project_simplex([0.7, 0.3]).tolist() == [0.7, 0.3]

    def test_vertex(self):
        assert project_simplex([2.0, 0.0]).tolist() == [1.0, 0.0]

    def test_symmetry(self):
        assert project_simplex([0.6, 0.6]).tolist() == [0.5, 0.5]

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.floats(-50, 50, allow_nan=False, allow_infinity=False),
            min_size=1,
            max_size=8,
        )
    )
    def test_feasible_and_idempotent(self, values):
        out = project_simplex(values)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert (out >= 0).all()
        again = project_simplex(out)
        assert np.max(np.abs(again - out)) < 1e-12


class TestMaximizeAuglag:
    def test_interior_optimum(self):
        res = maximize_auglag(
            lambda w: -((w[0] - 0.7) ** 2) - (w[1] - 0.3) ** 2, SIMPLEX_2, [0.5, 0.5]
        )
        assert res.converged
        assert np.max(np.abs(res.argmax - [0.7, 0.3])) < 1e-5

    def test_vertex_solution(self):
        res = maximize_auglag(
            lambda w: float(w[0]),
            SIMPLEX_2,
            [0.5, 0.5],
            gradient=lambda w: np.array([1.0, 0.0]),
        )
        assert res.converged
        assert np.max(np.abs(res.argmax - [1.0, 0.0])) < 1e-6

    def test_boundary_solution_of_exterior_target(self):
        # max -(w0 - 2)^2 on the simplex pushes w0 to its largest value 1
        res = maximize_auglag(
            lambda w: -((w[0] - 2.0) ** 2),
            SIMPLEX_2,
            [0.5, 0.5],
            gradient=lambda w: np.array([-2.0 * (w[0] - 2.0), 0.0]),
        )
        assert res.converged
        assert abs(res.argmax[0] - 1.0) < 1e-5
        assert abs(res.argmax[1]) < 1e-6

    def test_infeasible_start_rejected(self):
        with pytest.raises(EstimationError, match="feasible"):
            maximize_auglag(lambda w: float(w[0]), SIMPLEX_2, [0.9, 0.9])

    def test_constraint_residuals_at_convergence(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            target = rng.uniform(-0.5, 1.5, size=2)

            def f(w):
                return -float(((w - target) ** 2).sum())

            res = maximize_auglag(f, SIMPLEX_2, [0.5, 0.5])
            if res.converged:
                assert abs(res.argmax.sum() - 1.0) <= 1e-6
                assert res.argmax.min() >= -1e-8

    def test_hessian_of_objective_returned(self):
        res = maximize_auglag(
            lambda w: -((w[0] - 0.7) ** 2) - (w[1] - 0.3) ** 2,
            SIMPLEX_2,
            [0.5, 0.5],
            compute_hessian=True,
        )
        # Hessian of f itself, not of the augmented objective
        assert np.allclose(np.diag(res.hessian), [-2.0, -2.0], atol=1e-4)
