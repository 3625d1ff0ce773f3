"""Multisecant accelerated descent driver.

Solves r(y) = 0 with a quasi-Newton iteration whose inverse-Jacobian
approximation satisfies all stored secant conditions at once: given the
matrices Y and R of iterate and residual differences, the update

    G = Gt + (Y - Gt R) (R^T R)^{-1} R^T,       Gt = alpha * P^{-1},

is the Frobenius-closest matrix to Gt with G R = Y, and the step is
dy = -G r.  In practice the normal-equation factor is replaced by a
truncated-SVD least-squares solve for gamma = argmin ||r - R gamma||, so

    dy = -alpha P^{-1} r - (Y - alpha P^{-1} R) gamma.

Hessian regularization is folded into the residual differences: each
stored difference gets beta * dx added to its primal rows, which mimics
shifting the Lagrangian Hessian by beta * I without ever forming it.

The outer loop carries no line search or trust region; the only safeguards
are a maximum step length and a divergence guard, which is what makes the
iteration tolerant of noisy objective, gradient and constraint data.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from madopt.kkt import (CompoundVector, ConvergenceMetrics, EvaluationError,
                        ProblemInterface, assemble_residual, check_converged)
from madopt.precond import IdentityPreconditioner, Preconditioner

__all__ = [
    "BUDGET_EXHAUSTED",
    "CONVERGED",
    "DIVERGED",
    "EVALUATION_ERROR",
    "IterationRecord",
    "IterationTrace",
    "SecantMatrices",
    "SolveHistory",
    "SolverParams",
    "build_secant_matrices",
    "clip_step",
    "compute_step",
    "mad_solve",
    "run_multisecant",
    "solve_gamma",
]

CONVERGED = "converged"
BUDGET_EXHAUSTED = "budget_exhausted"
DIVERGED = "diverged"
EVALUATION_ERROR = "evaluation_error"

# Residual growth beyond this factor of the initial norm ends the solve.
DIVERGENCE_RATIO = 1e12
# Secant pairs whose regularized residual difference is this small relative
# to the largest column are dropped; repeated iterates would otherwise feed
# numerically empty columns to the SVD.
DEGENERATE_PAIR_RTOL = 1e-14


@dataclass
class SolverParams:
    """Tunables of the multisecant iteration.

    alpha      : scaling of the preconditioned base step (> 0)
    beta       : Hessian regularization added to primal residual rows (>= 0)
    q          : secant-history depth; q = 0 degenerates to scaled descent
    delta_max  : maximum step 2-norm; longer steps are rescaled
    k_max      : iteration budget (number of steps)
    eps_r      : relative convergence tolerance, in (0, 1)
    eps_a      : absolute convergence tolerance (> 0)
    svd_cutoff : relative singular-value truncation threshold, in (0, 1)
    """

    alpha: float = 0.1
    beta: float = 0.5
    q: int = 10
    delta_max: float = 1.0
    k_max: int = 2000
    eps_r: float = 1e-4
    eps_a: float = 1e-6
    svd_cutoff: float = 1e-6

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if int(self.q) != self.q or self.q < 0:
            raise ValueError(f"q must be a nonnegative integer, got {self.q}")
        self.q = int(self.q)
        if not self.delta_max > 0:
            raise ValueError(f"delta_max must be > 0, got {self.delta_max}")
        if int(self.k_max) != self.k_max or self.k_max < 0:
            raise ValueError(f"k_max must be a nonnegative integer, got {self.k_max}")
        self.k_max = int(self.k_max)
        if not 0 < self.eps_r < 1:
            raise ValueError(f"eps_r must lie in (0, 1), got {self.eps_r}")
        if not self.eps_a > 0:
            raise ValueError(f"eps_a must be > 0, got {self.eps_a}")
        if not 0 < self.svd_cutoff < 1:
            raise ValueError(f"svd_cutoff must lie in (0, 1), got {self.svd_cutoff}")


class SolveHistory:
    """Ring of the most recent q+1 iterates and their raw residuals.

    Residuals are stored unregularized; beta enters only when the secant
    matrices are rebuilt.  Oldest entries are evicted first.  ``n_primal``
    records how many leading components form the primal block.
    """

    def __init__(self, depth: int, n_primal: int):
        self.depth = int(depth)
        self.n_primal = int(n_primal)
        self.iterates: deque = deque(maxlen=self.depth + 1)
        self.residuals: deque = deque(maxlen=self.depth + 1)

    def push(self, y, r) -> None:
        self.iterates.append(np.asarray(y, dtype=float))
        self.residuals.append(np.asarray(r, dtype=float))

    def __len__(self) -> int:
        return len(self.iterates)


@dataclass
class SecantMatrices:
    """Difference matrices rebuilt from the history each iteration.

    Column j of Y is y_{j+1} - y_j over consecutive stored iterates; the
    matching column of R is the raw residual difference with beta * dx
    added to its primal rows.
    """

    Y: np.ndarray
    R: np.ndarray

    @property
    def p(self) -> int:
        return self.R.shape[1]


@dataclass
class IterationRecord:
    k: int
    objective: float
    optimality: float
    feasibility: float
    step_norm: float


@dataclass
class IterationTrace:
    """Per-iteration convergence data plus the final solve status.

    ``step_norm`` of record k is the norm of the update that produced
    iterate k (zero for the starting point).  ``status`` is one of
    converged | budget_exhausted | diverged | evaluation_error.
    """

    records: list = field(default_factory=list)
    status: str = ""
    message: str = ""

    @property
    def iterations(self) -> int:
        """Number of steps taken."""
        return max(len(self.records) - 1, 0)


def build_secant_matrices(history: SolveHistory, beta: float) -> SecantMatrices:
    """Assemble (Y, R) from the stored iterates, applying beta regularization.

    Degenerate pairs (regularized residual difference below
    ``DEGENERATE_PAIR_RTOL`` relative to the largest column) are dropped.
    Fewer than two stored entries give empty matrices.
    """
    m = len(history)
    n_cols = max(m - 1, 0)
    width = history.iterates[0].size if m else 0
    if n_cols == 0:
        return SecantMatrices(np.zeros((width, 0)), np.zeros((width, 0)))
    ys = list(history.iterates)
    rs = list(history.residuals)
    n = history.n_primal
    Y = np.empty((width, n_cols))
    R = np.empty((width, n_cols))
    for j in range(n_cols):
        dy = ys[j + 1] - ys[j]
        dr = rs[j + 1] - rs[j]
        if beta != 0.0:
            dr = dr.copy()
            dr[:n] += beta * dy[:n]
        Y[:, j] = dy
        R[:, j] = dr
    col_norms = np.linalg.norm(R, axis=0)
    max_norm = col_norms.max()
    if max_norm == 0.0:
        return SecantMatrices(np.zeros((width, 0)), np.zeros((width, 0)))
    keep = col_norms >= DEGENERATE_PAIR_RTOL * max_norm
    return SecantMatrices(Y[:, keep], R[:, keep])


def solve_gamma(R: np.ndarray, r_k: np.ndarray, svd_cutoff: float) -> np.ndarray:
    """Minimum-norm solution of argmin ||r_k - R gamma|| via truncated SVD.

    Singular values below ``svd_cutoff`` relative to the largest are treated
    as zero, which keeps near-duplicate history columns from blowing up the
    coefficients.  An empty R yields an empty gamma.
    """
    R = np.asarray(R, dtype=float)
    if R.size == 0:
        return np.zeros(R.shape[1] if R.ndim == 2 else 0)
    U, s, Vt = np.linalg.svd(R, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros(R.shape[1])
    keep = s >= svd_cutoff * s[0]
    U = U[:, keep]
    s = s[keep]
    Vt = Vt[keep]
    return Vt.T @ ((U.T @ r_k) / s)


def compute_step(r_k: np.ndarray, Y: np.ndarray, R: np.ndarray,
                 gamma: np.ndarray, precond: Preconditioner,
                 alpha: float) -> np.ndarray:
    """Multisecant step dy = -alpha P^{-1} r_k - (Y - alpha P^{-1} R) gamma.

    With no secant columns this is plain preconditioned descent.
    """
    p_r = precond.apply(r_k)
    if gamma.size == 0:
        return -alpha * p_r
    PR = np.column_stack([precond.apply(R[:, j]) for j in range(R.shape[1])])
    return -alpha * p_r - (Y - alpha * PR) @ gamma


def clip_step(dy: np.ndarray, delta_max: float) -> np.ndarray:
    """Rescale dy to 2-norm delta_max if it is longer; otherwise return it."""
    norm = float(np.linalg.norm(dy))
    if norm > delta_max:
        return dy * (delta_max / norm)
    return dy


def run_multisecant(residual, y0, params: SolverParams,
                    precond: Preconditioner | None = None,
                    n_primal: int | None = None,
                    objective=None):
    """Drive the multisecant iteration on a flat residual function.

    This is the engine behind :func:`mad_solve`; it is exposed separately so
    arbitrary square systems r(y) = 0 (for instance linear ones) can be run
    through the exact same loop.

    Parameters
    ----------
    residual : callable
        Maps a flat vector y to the flat residual r(y).  May raise
        :class:`EvaluationError`.
    y0 : array_like
        Starting point.
    params : SolverParams
    precond : Preconditioner, optional
        Defaults to the identity.
    n_primal : int, optional
        Size of the leading block that receives beta regularization and
        defines the optimality metric; defaults to all of y.
    objective : callable, optional
        Maps y to a scalar recorded in the trace; omitted entries are NaN.

    Returns
    -------
    (y, trace, history)
        Final iterate, iteration trace with status, and the secant history
        as it stood when the solve ended.
    """
    y = np.array(y0, dtype=float)
    if n_primal is None:
        n_primal = y.size
    if precond is None:
        precond = IdentityPreconditioner()

    trace = IterationTrace()
    history = SolveHistory(params.q, n_primal)

    def metrics_of(r):
        return ConvergenceMetrics(float(np.linalg.norm(r[:n_primal])),
                                  float(np.linalg.norm(r[n_primal:])))

    def objective_of(yv):
        return float(objective(yv)) if objective is not None else math.nan

    try:
        r = np.asarray(residual(y), dtype=float)
        obj = objective_of(y)
    except EvaluationError as err:
        trace.status = EVALUATION_ERROR
        trace.message = str(err)
        return y, trace, history

    history.push(y, r)
    metrics = metrics_of(r)
    initial = metrics
    norm_r0 = metrics.residual_norm
    trace.records.append(IterationRecord(0, obj, metrics.optimality,
                                         metrics.feasibility, 0.0))

    for k in range(params.k_max + 1):
        if check_converged(metrics, initial, params.eps_r, params.eps_a):
            trace.status = CONVERGED
            return y, trace, history
        r_norm = metrics.residual_norm
        if not np.isfinite(r_norm) or r_norm > DIVERGENCE_RATIO * norm_r0:
            trace.status = DIVERGED
            trace.message = (f"residual norm {r_norm:.3e} breached the "
                             f"divergence guard at iteration {k}")
            return y, trace, history
        if k == params.k_max:
            break

        precond.update(k)
        mats = build_secant_matrices(history, params.beta)
        gamma = solve_gamma(mats.R, r, params.svd_cutoff)
        dy = clip_step(compute_step(r, mats.Y, mats.R, gamma, precond,
                                    params.alpha), params.delta_max)
        y = y + dy
        try:
            r = np.asarray(residual(y), dtype=float)
            obj = objective_of(y)
        except EvaluationError as err:
            trace.status = EVALUATION_ERROR
            trace.message = str(err)
            return y, trace, history
        history.push(y, r)
        metrics = metrics_of(r)
        trace.records.append(IterationRecord(k + 1, obj, metrics.optimality,
                                             metrics.feasibility,
                                             float(np.linalg.norm(dy))))

    trace.status = BUDGET_EXHAUSTED
    return y, trace, history


def mad_solve(problem: ProblemInterface, x0, params: SolverParams | None = None,
              precond: Preconditioner | None = None):
    """Solve the stationarity system of a constrained problem.

    Starts from y0 = (x0, 0, 0) and iterates the multisecant update on the
    assembled residual until the two-part convergence test is met, the
    iteration budget runs out, the residual diverges, or the problem fails
    to evaluate.

    Parameters
    ----------
    problem : ProblemInterface
    x0 : array_like
        Initial primal point, length problem.n.
    params : SolverParams, optional
    precond : Preconditioner, optional

    Returns
    -------
    (y, trace) : (CompoundVector, IterationTrace)
        Final iterate and the per-iteration record with final status.
    """
    if params is None:
        params = SolverParams()
    x0 = np.asarray(x0, dtype=float)
    if x0.size != problem.n:
        raise ValueError(f"x0 has length {x0.size}, expected {problem.n}")
    n, m_e, m_i = problem.n, problem.m_e, problem.m_i
    y0 = np.concatenate([x0, np.zeros(m_e + m_i)])

    def residual(yv):
        yc = CompoundVector.from_full(yv, n, m_e, m_i)
        return assemble_residual(problem, yc).full

    def objective(yv):
        return problem.objective(yv[:n])

    y, trace, _ = run_multisecant(residual, y0, params, precond,
                                  n_primal=n, objective=objective)
    return CompoundVector.from_full(y, n, m_e, m_i), trace
