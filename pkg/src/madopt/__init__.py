"""Matrix-free multisecant solver for nonlinearly constrained optimization.

The first-order optimality conditions are recast as a semi-smooth square
system and solved with a preconditioned, regularized multisecant
quasi-Newton iteration that tolerates inaccurate objective, gradient and
constraint data.
"""

from madopt.engine import (BUDGET_EXHAUSTED, CONVERGED, DIVERGED,
                           EVALUATION_ERROR, IterationRecord, IterationTrace,
                           SecantMatrices, SolveHistory, SolverParams,
                           build_secant_matrices, clip_step, compute_step,
                           mad_solve, run_multisecant, solve_gamma)
from madopt.kkt import (CompoundVector, ConvergenceMetrics, EvaluationError,
                        ProblemInterface, assemble_residual, check_converged,
                        complementarity_residual, convergence_metrics,
                        lagrangian_gradient)
from madopt.oracle import (DenseJacobian, dense_lstsq, fd_jacobian,
                           inverse_jacobian_preconditioner, newton_solve)
from madopt.precond import (CallablePreconditioner, DiagonalPreconditioner,
                            IdentityPreconditioner, MatrixPreconditioner,
                            Preconditioner)
from madopt.problems import (NoiseModel, ProblemSpec, ToyIdf, make_problem,
                             noisy_wrap, problem_names)

__version__ = "0.1.0"

__all__ = [
    "BUDGET_EXHAUSTED",
    "CONVERGED",
    "DIVERGED",
    "EVALUATION_ERROR",
    "CallablePreconditioner",
    "CompoundVector",
    "ConvergenceMetrics",
    "DenseJacobian",
    "DiagonalPreconditioner",
    "EvaluationError",
    "IdentityPreconditioner",
    "IterationRecord",
    "IterationTrace",
    "MatrixPreconditioner",
    "NoiseModel",
    "Preconditioner",
    "ProblemInterface",
    "ProblemSpec",
    "SecantMatrices",
    "SolveHistory",
    "SolverParams",
    "ToyIdf",
    "assemble_residual",
    "build_secant_matrices",
    "check_converged",
    "clip_step",
    "complementarity_residual",
    "compute_step",
    "convergence_metrics",
    "dense_lstsq",
    "fd_jacobian",
    "inverse_jacobian_preconditioner",
    "lagrangian_gradient",
    "mad_solve",
    "make_problem",
    "newton_solve",
    "noisy_wrap",
    "problem_names",
    "run_multisecant",
    "solve_gamma",
]
