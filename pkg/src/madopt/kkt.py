"""Semi-smooth optimality system for nonlinearly constrained minimization.

The unknown is a compound vector y = (x, lam_eq, lam_ineq) of primal
variables and multipliers.  First-order stationarity is expressed as a
square nonlinear residual assembled from matrix-free problem evaluations:
the Lagrangian gradient in the primal block, the negated equality
constraints in the second, and a componentwise complementarity function in
the third that vanishes exactly when the usual sign and slackness
conditions hold.  The residual has kinks on the surfaces h_i(x) = lam_i,
but the multisecant driver only ever consumes residual values, so no
special treatment of the kinks is needed there.
"""

import abc
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CompoundVector",
    "ConvergenceMetrics",
    "EvaluationError",
    "ProblemInterface",
    "assemble_residual",
    "check_converged",
    "complementarity_residual",
    "convergence_metrics",
    "lagrangian_gradient",
]


class EvaluationError(RuntimeError):
    """Raised by a problem that cannot be evaluated at the requested point.

    Distinct from non-convergence: a solve that hits this aborts with the
    ``evaluation_error`` status instead of iterating further.
    """


def _as_vector(v) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {arr.shape}")
    return arr


@dataclass
class CompoundVector:
    """Primal variables and multipliers stacked as one unknown.

    Blocks: ``x`` (n primal variables), ``lam_eq`` (equality multipliers),
    ``lam_ineq`` (inequality multipliers).  The same container holds
    residuals, whose blocks line up with these by construction.
    """

    x: np.ndarray
    lam_eq: np.ndarray
    lam_ineq: np.ndarray

    def __post_init__(self):
        self.x = _as_vector(self.x)
        self.lam_eq = _as_vector(self.lam_eq)
        self.lam_ineq = _as_vector(self.lam_ineq)

    @classmethod
    def from_full(cls, full, n: int, m_e: int, m_i: int) -> "CompoundVector":
        """Split a flat length-(n + m_e + m_i) vector into its blocks."""
        full = np.asarray(full, dtype=float)
        if full.size != n + m_e + m_i:
            raise ValueError(
                f"flat vector has size {full.size}, expected {n + m_e + m_i}")
        return cls(full[:n], full[n:n + m_e], full[n + m_e:])

    @classmethod
    def from_primal(cls, x, m_e: int, m_i: int) -> "CompoundVector":
        """Build (x, 0, 0); the standard starting point of a solve."""
        x = _as_vector(x)
        return cls(x, np.zeros(m_e), np.zeros(m_i))

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam_eq, self.lam_ineq])

    @property
    def block_sizes(self) -> tuple[int, int, int]:
        return self.x.size, self.lam_eq.size, self.lam_ineq.size

    @property
    def size(self) -> int:
        return self.x.size + self.lam_eq.size + self.lam_ineq.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.full))

    def __add__(self, other: "CompoundVector") -> "CompoundVector":
        return CompoundVector(self.x + other.x, self.lam_eq + other.lam_eq,
                              self.lam_ineq + other.lam_ineq)

    def __sub__(self, other: "CompoundVector") -> "CompoundVector":
        return CompoundVector(self.x - other.x, self.lam_eq - other.lam_eq,
                              self.lam_ineq - other.lam_ineq)

    def __rmul__(self, scale: float) -> "CompoundVector":
        return CompoundVector(scale * self.x, scale * self.lam_eq,
                              scale * self.lam_ineq)

    def __neg__(self) -> "CompoundVector":
        return -1.0 * self


class ProblemInterface(abc.ABC):
    """Matrix-free evaluation contract for a constrained problem.

    Implementations expose dimensions (n primal variables, m_e equality and
    m_i inequality constraints) and evaluators for the objective, its
    gradient, the constraint values, and the Jacobian-transpose products
    (grad g)^T v and (grad h)^T w.  No Jacobian or Hessian matrix is ever
    requested.  Both transpose products must be linear in their vector
    argument.  Evaluators raise :class:`EvaluationError` at points where
    the problem cannot be evaluated.
    """

    def __init__(self, n: int, m_e: int = 0, m_i: int = 0):
        self.n = int(n)
        self.m_e = int(m_e)
        self.m_i = int(m_i)

    @property
    def size(self) -> int:
        """Total unknown count N = n + m_e + m_i."""
        return self.n + self.m_e + self.m_i

    @abc.abstractmethod
    def objective(self, x: np.ndarray) -> float:
        """f(x)."""

    @abc.abstractmethod
    def objective_gradient(self, x: np.ndarray) -> np.ndarray:
        """grad f(x), length n."""

    def eq_constraints(self, x: np.ndarray) -> np.ndarray:
        """g(x), length m_e; solutions satisfy g(x) = 0."""
        if self.m_e:
            raise NotImplementedError("problem declares m_e > 0 but does not "
                                      "implement eq_constraints")
        return np.zeros(0)

    def ineq_constraints(self, x: np.ndarray) -> np.ndarray:
        """h(x), length m_i; solutions satisfy h(x) >= 0."""
        if self.m_i:
            raise NotImplementedError("problem declares m_i > 0 but does not "
                                      "implement ineq_constraints")
        return np.zeros(0)

    def eq_jac_t_vec(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """(grad g)^T v, length n; linear in v."""
        if self.m_e:
            raise NotImplementedError("problem declares m_e > 0 but does not "
                                      "implement eq_jac_t_vec")
        return np.zeros(self.n)

    def ineq_jac_t_vec(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """(grad h)^T w, length n; linear in w."""
        if self.m_i:
            raise NotImplementedError("problem declares m_i > 0 but does not "
                                      "implement ineq_jac_t_vec")
        return np.zeros(self.n)


@dataclass
class ConvergenceMetrics:
    """2-norms of the residual split into its optimality/feasibility parts."""

    optimality: float
    feasibility: float

    @property
    def residual_norm(self) -> float:
        """Norm of the full residual: optimality**2 + feasibility**2 summed."""
        return float(np.hypot(self.optimality, self.feasibility))


def complementarity_residual(h, lam):
    """Componentwise 0.5*(|h - lam| - h - lam); equals -min(h, lam).

    Zero exactly when h >= 0, lam >= 0 and h*lam = 0, so driving this to
    zero enforces complementarity without explicit sign constraints.
    Accepts scalars or arrays.
    """
    h = np.asarray(h, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = 0.5 * (np.abs(h - lam) - h - lam)
    return float(out) if out.ndim == 0 else out


def _check_dims(problem: ProblemInterface, y: CompoundVector) -> None:
    if y.block_sizes != (problem.n, problem.m_e, problem.m_i):
        raise ValueError(
            f"vector blocks {y.block_sizes} do not match problem dimensions "
            f"({problem.n}, {problem.m_e}, {problem.m_i})")


def lagrangian_gradient(problem: ProblemInterface, y: CompoundVector) -> np.ndarray:
    """Gradient of L(x, lam) = f(x) - g(x)^T lam_eq - h(x)^T lam_ineq.

    Assembled from one gradient call and at most two Jacobian-transpose
    products; evaluation failures propagate to the caller.
    """
    _check_dims(problem, y)
    grad = np.asarray(problem.objective_gradient(y.x), dtype=float)
    if problem.m_e:
        grad = grad - np.asarray(problem.eq_jac_t_vec(y.x, y.lam_eq), dtype=float)
    if problem.m_i:
        grad = grad - np.asarray(problem.ineq_jac_t_vec(y.x, y.lam_ineq), dtype=float)
    return grad

def assemble_residual(problem: ProblemInterface, y: CompoundVector) -> CompoundVector:
    """Stationarity residual r(y); r(y*) = 0 at any first-order solution.

    Blocks
    ------
    x block        : grad L(x, lam_eq, lam_ineq)
    lam_eq block   : -g(x)
    lam_ineq block : 0.5*(|h(x) - lam_ineq| - h(x) - lam_ineq), componentwise
    """
    _check_dims(problem, y)
    grad_block = lagrangian_gradient(problem, y)
    if problem.m_e:
        eq_block = -np.asarray(problem.eq_constraints(y.x), dtype=float)
    else:
        eq_block = np.zeros(0)
    if problem.m_i:
        h = np.asarray(problem.ineq_constraints(y.x), dtype=float)
        comp_block = complementarity_residual(h, y.lam_ineq)
    else:
        comp_block = np.zeros(0)
    return CompoundVector(grad_block, eq_block, comp_block)


def convergence_metrics(r: CompoundVector) -> ConvergenceMetrics:
    """Split an assembled residual into optimality and feasibility 2-norms."""
    optimality = float(np.linalg.norm(r.x))
    feasibility = float(np.linalg.norm(np.concatenate([r.lam_eq, r.lam_ineq])))
    return ConvergenceMetrics(optimality, feasibility)


def check_converged(current: ConvergenceMetrics, initial: ConvergenceMetrics,
                    eps_r: float, eps_a: float) -> bool:
    """Two-part relative-plus-absolute test on optimality and feasibility."""
    return (current.optimality <= eps_r * initial.optimality + eps_a
            and current.feasibility <= eps_r * initial.feasibility + eps_a)
