"""Dense reference machinery for cross-checking the matrix-free solver.

Everything here takes the slow, explicit route on purpose: Jacobians by
central differences, Newton steps by dense factorization, least squares by
an explicit pseudo-inverse.  None of it shares code paths with the engine,
so agreement between the two is meaningful evidence.
"""

from dataclasses import dataclass

import numpy as np

from madopt.kkt import CompoundVector, ProblemInterface, assemble_residual
from madopt.precond import MatrixPreconditioner

__all__ = [
    "DenseJacobian",
    "dense_lstsq",
    "fd_jacobian",
    "inverse_jacobian_preconditioner",
    "newton_solve",
]

FD_STEP_SCALE = 1e-6
KINK_MARGIN_FACTOR = 10.0


@dataclass
class DenseJacobian:
    """Central-difference Jacobian of the stationarity residual.

    ``kink_columns[i]`` is True when the column-i perturbation may straddle
    a complementarity kink (some |h_j(x) - lam_j| within 10 steps); values
    there average the slopes on both sides and callers decide whether to
    trust them.
    """

    matrix: np.ndarray
    kink_columns: np.ndarray


def fd_jacobian(problem: ProblemInterface, y: CompoundVector) -> DenseJacobian:
    """Approximate the residual Jacobian at y column by column.

    Column i uses the central difference (r(y + h e_i) - r(y - h e_i)) / 2h
    with h = 1e-6 * (1 + |y_i|).  Evaluation failures propagate.
    """
    n, m_e, m_i = problem.n, problem.m_e, problem.m_i
    base = y.full
    size = base.size

    if m_i:
        margin = float(np.min(np.abs(
            np.asarray(problem.ineq_constraints(y.x), dtype=float) - y.lam_ineq)))
    else:
        margin = np.inf

    matrix = np.empty((size, size))
    kink_columns = np.zeros(size, dtype=bool)
    for i in range(size):
        h = FD_STEP_SCALE * (1.0 + abs(base[i]))
        kink_columns[i] = margin <= KINK_MARGIN_FACTOR * h
        plus = base.copy()
        plus[i] += h
        minus = base.copy()
        minus[i] -= h
        r_plus = assemble_residual(
            problem, CompoundVector.from_full(plus, n, m_e, m_i)).full
        r_minus = assemble_residual(
            problem, CompoundVector.from_full(minus, n, m_e, m_i)).full
        matrix[:, i] = (r_plus - r_minus) / (2.0 * h)
    return DenseJacobian(matrix, kink_columns)


def newton_solve(problem: ProblemInterface, y0: CompoundVector,
                 tol: float = 1e-10, max_iter: int = 50) -> CompoundVector:
    """Dense semi-smooth Newton reference solver.

    Iterates y <- y - J(y)^{-1} r(y) with the finite-difference Jacobian
    factorized at every step, until ||r|| <= tol.  ``max_iter`` bounds the
    number of steps.

    Raises
    ------
    numpy.linalg.LinAlgError
        If a Jacobian along the path is singular.
    RuntimeError
        If the tolerance is not met within ``max_iter`` steps.
    """
    n, m_e, m_i = problem.n, problem.m_e, problem.m_i
    y = y0.full.copy()
    for step in range(max_iter + 1):
        yc = CompoundVector.from_full(y, n, m_e, m_i)
        r = assemble_residual(problem, yc).full
        if np.linalg.norm(r) <= tol:
            return yc
        if step == max_iter:
            break
        jac = fd_jacobian(problem, yc).matrix
        y = y + np.linalg.solve(jac, -r)
    raise RuntimeError(
        f"Newton reference solve did not reach tol={tol:g} in {max_iter} steps")


def dense_lstsq(R: np.ndarray, r: np.ndarray, svd_cutoff: float = 1e-6) -> np.ndarray:
    """Minimum-norm least squares through an explicit pseudo-inverse.

    A full SVD is formed, singular values below ``svd_cutoff`` relative to
    the largest are zeroed, and the pseudo-inverse is materialized before
    multiplying.  Deliberately heavier than the engine's path.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2:
        R = R.reshape(len(R), -1)
    cols = R.shape[1]
    if R.size == 0:
        return np.zeros(cols)
    U, s, Vt = np.linalg.svd(R, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(cols)
    s_inv = np.zeros_like(s)
    kept = s >= svd_cutoff * s[0]
    s_inv[kept] = 1.0 / s[kept]
    sigma_plus = np.zeros((cols, R.shape[0]))
    np.fill_diagonal(sigma_plus, s_inv)
    pinv = Vt.T @ sigma_plus @ U.T
    return pinv @ np.asarray(r, dtype=float)


def inverse_jacobian_preconditioner(problem: ProblemInterface,
                                    y: CompoundVector) -> MatrixPreconditioner:
    """Stationary preconditioner from the dense inverse Jacobian at y.

    The ideal base matrix for the multisecant update; used as the CLI's
    "oracle" preconditioner mode and in one-step convergence tests.
    """
    jac = fd_jacobian(problem, y)
    return MatrixPreconditioner(np.linalg.inv(jac.matrix))
