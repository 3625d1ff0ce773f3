"""Tests for preconditioner actions and their interplay with the engine."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from madopt import (CallablePreconditioner, CompoundVector,
                    DiagonalPreconditioner, IdentityPreconditioner,
                    MatrixPreconditioner, SolverParams, compute_step,
                    inverse_jacobian_preconditioner, mad_solve, make_problem)


class TestIdentity:
    def test_returns_input_unchanged(self):
        v = np.array([1.0, 2.0, 3.0])
        assert_array_equal(IdentityPreconditioner().apply(v), v)

    def test_zero_vector(self):
        assert_array_equal(IdentityPreconditioner().apply(np.zeros(4)), np.zeros(4))


class TestDiagonal:
    def test_unit_diagonal_reduces_to_identity(self):
        p = DiagonalPreconditioner([1.0, 1.0])
        assert_array_equal(p.apply(np.array([3.0, 4.0])), [3.0, 4.0])

    def test_componentwise_division(self):
        p = DiagonalPreconditioner([2.0, 4.0])
        assert_array_equal(p.apply(np.array([2.0, 4.0])), [1.0, 1.0])

    def test_negative_entries_allowed(self):
        p = DiagonalPreconditioner([-1.0, 1.0])
        assert_array_equal(p.apply(np.array([5.0, 5.0])), [-5.0, 5.0])

    def test_zero_entry_rejected(self):
        with pytest.raises(ValueError):
            DiagonalPreconditioner([1.0, 0.0])

    def test_apply_is_linear(self):
        rng = np.random.default_rng(0)
        p = DiagonalPreconditioner(rng.uniform(0.5, 2.0, size=6))
        for _ in range(5):
            v, w = rng.standard_normal(6), rng.standard_normal(6)
            a = rng.uniform(-3, 3)
            assert_allclose(p.apply(a * v + w), a * p.apply(v) + p.apply(w),
                            rtol=1e-13, atol=1e-14)


class TestCallable:
    def test_receives_iteration_index(self):
        p = CallablePreconditioner(lambda v, k: (k + 1.0) * v)
        v = np.ones(2)
        assert_array_equal(p.apply(v), v)
        p.update(3)
        assert_array_equal(p.apply(v), 4.0 * v)


class TestEngineInteraction:
    def test_descent_step_uses_apply_exactly(self):
        rng = np.random.default_rng(1)
        r = rng.standard_normal(5)
        for precond in [IdentityPreconditioner(),
                        DiagonalPreconditioner(rng.uniform(0.5, 2.0, size=5)),
                        MatrixPreconditioner(np.diag(rng.uniform(0.5, 2.0, size=5)))]:
            dy = compute_step(r, np.zeros((5, 0)), np.zeros((5, 0)),
                              np.zeros(0), precond, 0.2)
            assert_array_equal(dy, -0.2 * precond.apply(r))

    def test_exact_inverse_jacobian_converges_in_one_step(self):
        # linear stationarity system + its dense inverse as preconditioner:
        # with alpha = 1 and no secant history the first step lands on the
        # solution
        problem, spec = make_problem("eq_qp")
        y0 = CompoundVector.from_primal(spec.default_x0, problem.m_e, 0)
        precond = inverse_jacobian_preconditioner(problem, y0)
        params = SolverParams(alpha=1.0, beta=0.0, q=0, delta_max=100.0)
        y, trace = mad_solve(problem, spec.default_x0, params, precond)
        assert trace.status == "converged"
        assert trace.iterations == 1
        assert_allclose(y.full, [0.5, 0.5, 0.5], atol=1e-7)
