"""Tests for the dense reference machinery."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from madopt import (CompoundVector, ProblemInterface, SolverParams,
                    dense_lstsq, fd_jacobian, mad_solve, make_problem,
                    newton_solve, solve_gamma)


class _LinearQuadratic(ProblemInterface):
    """Quadratic objective with linear constraints: residual Jacobian is
    the constant saddle matrix [[H, -G^T], [-G, 0]]."""

    def __init__(self, H, G, b):
        super().__init__(n=H.shape[0], m_e=G.shape[0])
        self.H, self.G, self.b = H, G, b

    def objective(self, x):
        return 0.5 * float(x @ (self.H @ x)) - float(self.b @ x)

    def objective_gradient(self, x):
        return self.H @ x - self.b

    def eq_constraints(self, x):
        return self.G @ x

    def eq_jac_t_vec(self, x, v):
        return self.G.T @ v


class TestFdJacobian:
    def test_recovers_constant_saddle_matrix(self):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((4, 4))
        H = M @ M.T + np.eye(4)
        G = rng.standard_normal((2, 4))
        problem = _LinearQuadratic(H, G, rng.standard_normal(4))
        expected = np.block([[H, -G.T], [-G, np.zeros((2, 2))]])
        y = CompoundVector.from_full(rng.standard_normal(6), 4, 2, 0)
        jac = fd_jacobian(problem, y)
        assert_allclose(jac.matrix, expected,
                        atol=1e-6 * (1 + np.abs(expected).max()))
        assert not jac.kink_columns.any()

    def test_scalar_curvature(self):
        problem, _ = make_problem("quad1d")
        jac = fd_jacobian(problem, CompoundVector([0.0], [], []))
        assert_allclose(jac.matrix, [[1.0]], atol=1e-9)

    def test_qp_saddle_matrix_at_solution(self):
        problem, spec = make_problem("eq_qp")
        jac = fd_jacobian(problem, spec.known_solution)
        expected = np.array([[1.0, 0.0, -1.0],
                             [0.0, 1.0, -1.0],
                             [-1.0, -1.0, 0.0]])
        assert_allclose(jac.matrix, expected, atol=1e-8)

    def test_hessian_block_is_symmetric_at_stationary_point(self):
        problem, spec = make_problem("toy_idf")
        jac = fd_jacobian(problem, spec.known_solution).matrix
        n = problem.n
        block = jac[:n, :n]
        assert np.linalg.norm(block - block.T) <= 1e-6 * (1 + np.linalg.norm(block))

    def test_kink_proximity_is_flagged(self):
        problem, _ = make_problem("ineq_active")
        # h(x) = x - 1 equals lam exactly at (1, 0): every column touches
        on_kink = CompoundVector([1.0], [], [0.0])
        assert fd_jacobian(problem, on_kink).kink_columns.all()
        # the solution (1, 2) has margin 2, far beyond any step
        off_kink = CompoundVector([1.0], [], [2.0])
        assert not fd_jacobian(problem, off_kink).kink_columns.any()

    @pytest.mark.parametrize("name", ["eq_qp", "toy_idf"])
    def test_matrix_free_products_match_fd_rows(self, name):
        problem, spec = make_problem(name)
        rng = np.random.default_rng(1)
        y = CompoundVector.from_full(
            np.concatenate([spec.default_x0, np.zeros(problem.m_e)])
            + 0.1 * rng.standard_normal(problem.size),
            problem.n, problem.m_e, problem.m_i)
        jac = fd_jacobian(problem, y)
        n, m_e = problem.n, problem.m_e
        eq_rows = -jac.matrix[n:n + m_e, :n]  # rows of grad g
        for _ in range(3):
            v = rng.standard_normal(m_e)
            product = problem.eq_jac_t_vec(y.x, v)
            assert np.linalg.norm(product - eq_rows.T @ v) <= \
                1e-5 * (1 + np.linalg.norm(product))

    @pytest.mark.parametrize("name", ["ineq_active", "ineq_inactive"])
    def test_matrix_free_ineq_products_match_fd_columns(self, name):
        problem, spec = make_problem(name)
        rng = np.random.default_rng(2)
        # stay away from the complementarity kink when sampling
        y = CompoundVector([spec.default_x0[0] + 0.3], [], [rng.uniform(2, 3)])
        jac = fd_jacobian(problem, y)
        assert not jac.kink_columns.any()
        n, m_e = problem.n, problem.m_e
        ineq_cols = -jac.matrix[:n, n + m_e:]  # columns of (grad h)^T
        for _ in range(3):
            w = rng.standard_normal(problem.m_i)
            product = problem.ineq_jac_t_vec(y.x, w)
            assert np.linalg.norm(product - ineq_cols @ w) <= \
                1e-5 * (1 + np.linalg.norm(product))


class TestNewtonSolve:
    def test_quadratic_in_one_step(self):
        problem, _ = make_problem("quad1d")
        y0 = CompoundVector([0.0], [], [])
        y = newton_solve(problem, y0, tol=1e-8, max_iter=1)
        assert abs(y.x[0] - 3.0) <= 1e-8

    def test_qp_in_one_step(self):
        problem, _ = make_problem("eq_qp")
        y0 = CompoundVector.from_primal([0.0, 0.0], 1, 0)
        y = newton_solve(problem, y0, tol=1e-8, max_iter=1)
        assert_allclose(y.full, [0.5, 0.5, 0.5], atol=1e-8)

    def test_active_inequality(self):
        problem, _ = make_problem("ineq_active")
        y0 = CompoundVector.from_primal([0.0], 0, 1)
        y = newton_solve(problem, y0, tol=1e-10, max_iter=10)
        assert_allclose(y.full, [1.0, 2.0], atol=1e-9)

    def test_max_iter_exceeded_raises(self):
        problem, _ = make_problem("rosenbrock")
        y0 = CompoundVector.from_primal([-1.2, 1.0], 0, 0)
        with pytest.raises(RuntimeError, match="did not reach"):
            newton_solve(problem, y0, tol=1e-14, max_iter=1)

    def test_singular_jacobian_raises(self):
        class Flat(ProblemInterface):
            def __init__(self):
                super().__init__(n=1)

            def objective(self, x):
                return float(x[0])

            def objective_gradient(self, x):
                return np.array([1.0])  # constant residual, zero Jacobian

        with pytest.raises(np.linalg.LinAlgError):
            newton_solve(Flat(), CompoundVector([0.0], [], []), max_iter=3)

    @pytest.mark.parametrize("name", ["quad1d", "eq_qp", "ineq_active",
                                      "ineq_inactive", "nonconvex_quartic",
                                      "toy_idf"])
    def test_lands_on_known_solution(self, name):
        problem, spec = make_problem(name)
        y0 = CompoundVector.from_primal(spec.default_x0, problem.m_e, problem.m_i)
        y = newton_solve(problem, y0, tol=1e-10, max_iter=100)
        assert (y - spec.known_solution).norm() <= 1e-7, name


class TestDenseLstsq:
    def test_square_nonsingular(self):
        rng = np.random.default_rng(3)
        R = rng.standard_normal((5, 5)) + 3 * np.eye(5)
        r = rng.standard_normal(5)
        assert_allclose(dense_lstsq(R, r, 1e-12), np.linalg.solve(R, r),
                        atol=1e-10)

    def test_zero_matrix_gives_minimum_norm_zero(self):
        assert_array_equal(dense_lstsq(np.zeros((4, 2)), np.ones(4)), np.zeros(2))

    def test_agrees_with_engine_least_squares(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            R = rng.standard_normal((20, 5))
            r = rng.standard_normal(20)
            assert_allclose(dense_lstsq(R, r, 1e-6), solve_gamma(R, r, 1e-6),
                            atol=1e-10)

    def test_rank_deficient_agreement(self):
        rng = np.random.default_rng(5)
        col = rng.standard_normal(8)
        R = np.column_stack([col, 2 * col, rng.standard_normal(8)])
        r = rng.standard_normal(8)
        assert_allclose(dense_lstsq(R, r, 1e-6), solve_gamma(R, r, 1e-6),
                        atol=1e-10)


class TestSolverAgreement:
    @pytest.mark.parametrize("name", ["quad1d", "eq_qp", "ineq_inactive"])
    def test_newton_and_multisecant_find_same_point(self, name):
        from madopt import assemble_residual

        problem, spec = make_problem(name)
        y0 = CompoundVector.from_primal(spec.default_x0, problem.m_e, problem.m_i)
        r0 = assemble_residual(problem, y0).norm()
        params = SolverParams()
        y_mad, trace = mad_solve(problem, spec.default_x0, params)
        assert trace.status == "converged"
        y_newton = newton_solve(problem, y0, tol=1e-10, max_iter=100)
        bound = 10.0 * (params.eps_r * r0 + params.eps_a)
        assert (y_mad - y_newton).norm() <= bound
