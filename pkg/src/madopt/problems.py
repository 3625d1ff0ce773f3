"""Builtin benchmark problems and the seeded noise wrapper.

The registry holds small problems with hand-derived stationary points, the
classic banana-valley function, and a toy coupled two-discipline design
problem whose consistency constraints mirror the structure of
individual-discipline-feasible formulations.  ``noisy_wrap`` perturbs every
evaluator output with bounded seeded noise to emulate inexact solvers.
"""

from dataclasses import dataclass

import numpy as np

from madopt.kkt import CompoundVector, ProblemInterface

__all__ = [
    "NoiseModel",
    "ProblemSpec",
    "ToyIdf",
    "make_problem",
    "noisy_wrap",
    "problem_names",
]


@dataclass
class ProblemSpec:
    """Registry metadata: dimensions, default start, and known solution.

    ``known_solution`` is None when no reference point is available.
    ``diag_scaling`` feeds the CLI's diagonal preconditioner choice.
    """

    name: str
    n: int
    m_e: int
    m_i: int
    default_x0: np.ndarray
    known_solution: CompoundVector | None = None
    diag_scaling: np.ndarray | None = None


class Quad1D(ProblemInterface):
    """minimize 0.5*(x - 3)^2; unconstrained with minimizer x* = 3."""

    def __init__(self):
        super().__init__(n=1)

    def objective(self, x):
        return 0.5 * float((x[0] - 3.0) ** 2)

    def objective_gradient(self, x):
        return np.array([x[0] - 3.0])


class EqualityQP(ProblemInterface):
    """minimize 0.5*||x||^2 s.t. x1 + x2 = 1; solution x = (1/2, 1/2), lam = 1/2."""

    def __init__(self):
        super().__init__(n=2, m_e=1)

    def objective(self, x):
        return 0.5 * float(x @ x)

    def objective_gradient(self, x):
        return np.asarray(x, dtype=float).copy()

    def eq_constraints(self, x):
        return np.array([x[0] + x[1] - 1.0])

    def eq_jac_t_vec(self, x, v):
        return np.array([v[0], v[0]], dtype=float)


class ActiveInequality(ProblemInterface):
    """minimize 0.5*(x + 1)^2 s.t. x - 1 >= 0.

    The bound is active at the solution: x* = 1 with multiplier 2.
    """

    def __init__(self):
        super().__init__(n=1, m_i=1)

    def objective(self, x):
        return 0.5 * float((x[0] + 1.0) ** 2)

    def objective_gradient(self, x):
        return np.array([x[0] + 1.0])

    def ineq_constraints(self, x):
        return np.array([x[0] - 1.0])

    def ineq_jac_t_vec(self, x, w):
        return np.array([w[0]], dtype=float)


class InactiveInequality(ProblemInterface):
    """minimize 0.5*(x - 2)^2 s.t. x - 1 >= 0.

    The unconstrained minimizer x* = 2 is interior, so the multiplier is 0.
    """

    def __init__(self):
        super().__init__(n=1, m_i=1)

    def objective(self, x):
        return 0.5 * float((x[0] - 2.0) ** 2)

    def objective_gradient(self, x):
        return np.array([x[0] - 2.0])

    def ineq_constraints(self, x):
        return np.array([x[0] - 1.0])

    def ineq_jac_t_vec(self, x, w):
        return np.array([w[0]], dtype=float)


class Rosenbrock(ProblemInterface):
    """The banana valley: f = (1 - x1)^2 + 100 (x2 - x1^2)^2, minimum (1, 1)."""

    def __init__(self):
        super().__init__(n=2)

    def objective(self, x):
        return float((1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2)

    def objective_gradient(self, x):
        gap = x[1] - x[0] ** 2
        return np.array([-2.0 * (1.0 - x[0]) - 400.0 * x[0] * gap,
                         200.0 * gap])


class NonconvexQuartic(ProblemInterface):
    """f = x^4/4 - x^2/2: minima at x = -1 and x = 1, a maximizer at x = 0.

    Included to exercise Hessian regularization near the indefinite region
    around the maximizer.
    """

    def __init__(self):
        super().__init__(n=1)

    def objective(self, x):
        return float(0.25 * x[0] ** 4 - 0.5 * x[0] ** 2)

    def objective_gradient(self, x):
        return np.array([x[0] ** 3 - x[0]])


class ToyIdf(ProblemInterface):
    """Two linear disciplines coupled through target variables.

    The unknowns are design variables b together with coupling targets
    pbar and ubar that stand in for the other discipline's output, so each
    discipline can be evaluated independently:

        minimize  0.5 * || p(b, ubar) - p_target ||^2
        s.t.      p(b, ubar) - pbar = 0
                  u(b, pbar) - ubar = 0

    with discipline maps p(b, u) = A1 b + A2 u + c1 and
    u(b, p) = B1 b + B2 p + c2.  The matrices are drawn once from a seeded
    generator; the cross-coupling blocks A2, B2 are scaled well below one
    so the combined optimality system stays nonsingular and reasonably
    conditioned.  The objective is quadratic and the constraints linear,
    so the problem has a unique stationary point obtainable from one dense
    linear solve (see :meth:`analytic_solution`).
    """

    def __init__(self, n_design: int = 5, discipline_size: int = 8, seed: int = 2718):
        s = int(discipline_size)
        nb = int(n_design)
        super().__init__(n=nb + 2 * s, m_e=2 * s)
        self.n_design = nb
        self.discipline_size = s
        rng = np.random.default_rng(seed)
        # First-discipline sensitivities kept near orthonormal so the
        # reduced Hessian stays safely positive definite.
        self.A1, _ = np.linalg.qr(rng.standard_normal((s, nb)))
        self.B1 = 0.8 * np.linalg.qr(rng.standard_normal((s, nb)))[0]
        self.A2 = 0.3 * rng.standard_normal((s, s)) / np.sqrt(s)
        self.B2 = 0.3 * rng.standard_normal((s, s)) / np.sqrt(s)
        self.c1 = 0.5 * rng.standard_normal(s)
        self.c2 = 0.5 * rng.standard_normal(s)
        self.p_target = rng.standard_normal(s)

    def _split(self, x):
        nb, s = self.n_design, self.discipline_size
        return x[:nb], x[nb:nb + s], x[nb + s:]

    def _pressure_mismatch(self, x):
        b, _, ubar = self._split(x)
        return self.A1 @ b + self.A2 @ ubar + self.c1 - self.p_target

    def objective(self, x):
        mis = self._pressure_mismatch(x)
        return 0.5 * float(mis @ mis)

    def objective_gradient(self, x):
        mis = self._pressure_mismatch(x)
        return np.concatenate([self.A1.T @ mis,
                               np.zeros(self.discipline_size),
                               self.A2.T @ mis])

    def eq_constraints(self, x):
        b, pbar, ubar = self._split(x)
        return np.concatenate([
            self.A1 @ b + self.A2 @ ubar + self.c1 - pbar,
            self.B1 @ b + self.B2 @ pbar + self.c2 - ubar,
        ])

    def eq_jac_t_vec(self, x, v):
        s = self.discipline_size
        v1, v2 = np.asarray(v[:s], dtype=float), np.asarray(v[s:], dtype=float)
        return np.concatenate([
            self.A1.T @ v1 + self.B1.T @ v2,
            -v1 + self.B2.T @ v2,
            self.A2.T @ v1 - v2,
        ])

    def constraint_jacobian(self) -> np.ndarray:
        """Dense constraint Jacobian (constant since the maps are linear)."""
        s, nb = self.discipline_size, self.n_design
        eye = np.eye(s)
        return np.block([[self.A1, -eye, self.A2],
                         [self.B1, self.B2, -eye]])

    def kkt_system(self):
        """Dense stationarity system: matrix K and offset c with r(y) = K y + c."""
        s = self.discipline_size
        C = np.hstack([self.A1, np.zeros((s, s)), self.A2])
        d = self.c1 - self.p_target
        G = self.constraint_jacobian()
        e = np.concatenate([self.c1, self.c2])
        K = np.block([[C.T @ C, -G.T],
                      [-G, np.zeros((self.m_e, self.m_e))]])
        c = np.concatenate([C.T @ d, -e])
        return K, c

    def analytic_solution(self) -> CompoundVector:
        """Unique stationary point from one dense solve of the linear system."""
        K, c = self.kkt_system()
        y = np.linalg.solve(K, -c)
        return CompoundVector.from_full(y, self.n, self.m_e, 0)

    def kkt_diagonal_scaling(self) -> np.ndarray:
        """|diag(K)| floored at one; zero rows must not break division."""
        K, _ = self.kkt_system()
        return np.maximum(np.abs(np.diag(K)), 1.0)


@dataclass
class NoiseModel:
    """Bounded uniform perturbation applied to every evaluator output.

    Each output component becomes clean + magnitude * (1 + |clean|) * u
    with u drawn fresh from U[-1, 1], so both large and near-zero values
    are perturbed meaningfully.  magnitude = 0 reproduces the wrapped
    problem bit-exactly.
    """

    magnitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError(f"noise magnitude must be >= 0, got {self.magnitude}")


class NoisyProblem(ProblemInterface):
    """Wrap a problem so every evaluation carries fresh seeded noise.

    The draw stream is owned per instance and consumed in call order: a
    fixed (seed, call sequence) replays exactly, while repeated calls at
    the same point draw fresh noise, as an inexactly converged inner
    solver would.
    """

    def __init__(self, inner: ProblemInterface, noise: NoiseModel):
        super().__init__(inner.n, inner.m_e, inner.m_i)
        self.inner = inner
        self.noise = noise
        self._rng = np.random.default_rng(noise.seed)

    def _perturb_vector(self, clean):
        clean = np.asarray(clean, dtype=float)
        if self.noise.magnitude == 0.0:
            return clean
        u = self._rng.uniform(-1.0, 1.0, size=clean.shape)
        return clean + self.noise.magnitude * (1.0 + np.abs(clean)) * u

    def _perturb_scalar(self, clean: float) -> float:
        if self.noise.magnitude == 0.0:
            return clean
        u = self._rng.uniform(-1.0, 1.0)
        return clean + self.noise.magnitude * (1.0 + abs(clean)) * u

    def objective(self, x):
        return self._perturb_scalar(self.inner.objective(x))

    def objective_gradient(self, x):
        return self._perturb_vector(self.inner.objective_gradient(x))

    def eq_constraints(self, x):
        return self._perturb_vector(self.inner.eq_constraints(x))

    def ineq_constraints(self, x):
        return self._perturb_vector(self.inner.ineq_constraints(x))

    def eq_jac_t_vec(self, x, v):
        return self._perturb_vector(self.inner.eq_jac_t_vec(x, v))

    def ineq_jac_t_vec(self, x, w):
        return self._perturb_vector(self.inner.ineq_jac_t_vec(x, w))


def noisy_wrap(problem: ProblemInterface, noise: NoiseModel) -> ProblemInterface:
    """Wrap ``problem`` so all evaluator outputs carry seeded bounded noise."""
    return NoisyProblem(problem, noise)


def _build_quad1d():
    return Quad1D(), ProblemSpec(
        name="quad1d", n=1, m_e=0, m_i=0,
        default_x0=np.array([0.0]),
        known_solution=CompoundVector([3.0], [], []),
    )


def _build_eq_qp():
    return EqualityQP(), ProblemSpec(
        name="eq_qp", n=2, m_e=1, m_i=0,
        default_x0=np.zeros(2),
        known_solution=CompoundVector([0.5, 0.5], [0.5], []),
    )


def _build_ineq_active():
    return ActiveInequality(), ProblemSpec(
        name="ineq_active", n=1, m_e=0, m_i=1,
        default_x0=np.array([0.0]),
        known_solution=CompoundVector([1.0], [], [2.0]),
    )


def _build_ineq_inactive():
    return InactiveInequality(), ProblemSpec(
        name="ineq_inactive", n=1, m_e=0, m_i=1,
        default_x0=np.array([0.0]),
        known_solution=CompoundVector([2.0], [], [0.0]),
    )


def _build_rosenbrock():
    return Rosenbrock(), ProblemSpec(
        name="rosenbrock", n=2, m_e=0, m_i=0,
        default_x0=np.array([-1.2, 1.0]),
        known_solution=CompoundVector([1.0, 1.0], [], []),
    )


def _build_nonconvex_quartic():
    # Started right of the maximizer, so the x = 1 well is the reference.
    return NonconvexQuartic(), ProblemSpec(
        name="nonconvex_quartic", n=1, m_e=0, m_i=0,
        default_x0=np.array([2.0]),
        known_solution=CompoundVector([1.0], [], []),
    )


def _build_toy_idf():
    problem = ToyIdf()
    return problem, ProblemSpec(
        name="toy_idf", n=problem.n, m_e=problem.m_e, m_i=0,
        default_x0=np.zeros(problem.n),
        known_solution=problem.analytic_solution(),
        diag_scaling=problem.kkt_diagonal_scaling(),
    )


_REGISTRY = {
    "quad1d": _build_quad1d,
    "eq_qp": _build_eq_qp,
    "ineq_active": _build_ineq_active,
    "ineq_inactive": _build_ineq_inactive,
    "rosenbrock": _build_rosenbrock,
    "toy_idf": _build_toy_idf,
    "nonconvex_quartic": _build_nonconvex_quartic,
}


def problem_names() -> list[str]:
    return sorted(_REGISTRY)


def make_problem(name: str):
    """Build a fresh registry problem.

    Returns
    -------
    (problem, spec) : (ProblemInterface, ProblemSpec)

    Raises
    ------
    ValueError
        If ``name`` is not a registry entry.
    """
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; available: {', '.join(problem_names())}"
        ) from None
    return builder()
