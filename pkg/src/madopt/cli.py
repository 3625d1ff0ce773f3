"""Batch driver for single solves, parameter sweeps, and oracle verification.

Single runs write a per-iteration convergence history as CSV and print one
``status iters final_opt final_feas`` line.  Sweeps run a (q, alpha, beta)
grid and write one summary row per cell, never aborting the grid when a
cell fails to converge.  All options can also be read from a plain
``key = value`` config file, with command-line flags taking precedence.
"""

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from madopt.engine import (BUDGET_EXHAUSTED, CONVERGED, DIVERGED,
                           EVALUATION_ERROR, IterationTrace, SolverParams,
                           mad_solve)
from madopt.kkt import CompoundVector, assemble_residual
from madopt.oracle import fd_jacobian, inverse_jacobian_preconditioner, newton_solve
from madopt.precond import DiagonalPreconditioner, IdentityPreconditioner
from madopt.problems import NoiseModel, make_problem, noisy_wrap, problem_names

__all__ = ["ConfigError", "RunConfig", "main", "run_single", "run_sweep",
           "run_verify", "write_history_csv", "write_summary_csv"]

HISTORY_HEADER = "iter,objective,optimality,feasibility,step_norm"
SUMMARY_HEADER = "q,alpha,beta,status,iters"

EXIT_BY_STATUS = {
    CONVERGED: 0,
    BUDGET_EXHAUSTED: 2,
    DIVERGED: 3,
    EVALUATION_ERROR: 4,
}

PRECOND_CHOICES = ("identity", "diagonal", "oracle")


class ConfigError(Exception):
    """Bad flag value, unknown key, or unreadable config file."""


@dataclass
class RunConfig:
    """Everything one solve needs: problem, solver knobs, noise, outputs."""

    problem: str
    alpha: float = 0.1
    beta: float = 0.5
    q: int = 10
    delta_max: float = 1.0
    max_iter: int = 2000
    eps_rel: float = 1e-4
    eps_abs: float = 1e-6
    svd_cutoff: float = 1e-6
    noise: float = 0.0
    seed: int = 0
    precond: str = "identity"
    history_out: str = "history.csv"
    summary_out: str = "sweep_summary.csv"

    def solver_params(self) -> SolverParams:
        try:
            return SolverParams(alpha=self.alpha, beta=self.beta, q=self.q,
                                delta_max=self.delta_max, k_max=self.max_iter,
                                eps_r=self.eps_rel, eps_a=self.eps_abs,
                                svd_cutoff=self.svd_cutoff)
        except ValueError as err:
            raise ConfigError(str(err)) from None


_FLAG_NAMES = ("problem", "q", "alpha", "beta", "delta_max", "max_iter",
               "eps_rel", "eps_abs", "svd_cutoff", "noise", "seed", "precond",
               "history_out", "summary_out")

_SCALAR_PARSERS = {
    "problem": str,
    "q": int,
    "alpha": float,
    "beta": float,
    "delta_max": float,
    "max_iter": int,
    "eps_rel": float,
    "eps_abs": float,
    "svd_cutoff": float,
    "noise": float,
    "seed": int,
    "precond": str,
    "history_out": str,
    "summary_out": str,
}


def parse_config_file(path: str) -> dict:
    """Read ``key = value`` lines; '#' starts a comment, blank lines skipped."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _SCALAR_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown option {key!r}")
        values[key] = value
    return values


def _coerce(key: str, raw: str):
    try:
        return _SCALAR_PARSERS[key](raw)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for option {key!r}") from None


def _parse_grid_list(key: str, raw: str) -> list:
    kind = _SCALAR_PARSERS[key]
    try:
        items = [kind(part.strip()) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"invalid list {raw!r} for option {key!r}") from None
    if not items:
        raise ConfigError(f"option {key!r} needs at least one value")
    return items


def _merge_config(args, grid_keys=()) -> tuple:
    """Combine config-file values and flags; flags win.  Returns the
    RunConfig plus the raw strings for any grid-valued keys."""
    values = parse_config_file(args.config) if args.config else {}
    for name in _FLAG_NAMES:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if "problem" not in values:
        raise ConfigError("no problem selected; pass --problem or set it in the config file")

    grids = {}
    kwargs = {}
    for key, raw in values.items():
        if key in grid_keys:
            grids[key] = _parse_grid_list(key, str(raw))
        else:
            kwargs[key] = _coerce(key, str(raw))
    config = RunConfig(**kwargs)
    if config.precond not in PRECOND_CHOICES:
        raise ConfigError(f"unknown preconditioner {config.precond!r}; "
                          f"choose from {', '.join(PRECOND_CHOICES)}")
    if config.noise < 0:
        raise ConfigError(f"noise magnitude must be >= 0, got {config.noise}")
    return config, grids


def _build_problem(config: RunConfig):
    try:
        problem, spec = make_problem(config.problem)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    clean = problem
    if config.noise > 0:
        problem = noisy_wrap(problem, NoiseModel(config.noise, config.seed))
    return problem, clean, spec


def _build_precond(config: RunConfig, clean_problem, spec):
    if config.precond == "identity":
        return IdentityPreconditioner()
    if config.precond == "diagonal":
        d = spec.diag_scaling
        if d is None:
            d = np.ones(clean_problem.size)
        return DiagonalPreconditioner(d)
    # oracle mode: dense inverse Jacobian of the clean problem at the start
    y0 = CompoundVector.from_primal(spec.default_x0, clean_problem.m_e,
                                    clean_problem.m_i)
    try:
        return inverse_jacobian_preconditioner(clean_problem, y0)
    except np.linalg.LinAlgError as err:
        raise ConfigError(f"oracle preconditioner failed: {err}") from None


def write_history_csv(trace: IterationTrace, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(HISTORY_HEADER + "\n")
        for rec in trace.records:
            fh.write(f"{rec.k},{rec.objective:.12e},{rec.optimality:.12e},"
                     f"{rec.feasibility:.12e},{rec.step_norm:.12e}\n")


def write_summary_csv(rows, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for q, alpha, beta, status, iters in rows:
            fh.write(f"{q},{alpha:g},{beta:g},{status},{iters}\n")


def run_single(config: RunConfig) -> int:
    """One solve; writes the history CSV and prints the final status line."""
    problem, clean, spec = _build_problem(config)
    precond = _build_precond(config, clean, spec)
    params = config.solver_params()
    _, trace = mad_solve(problem, spec.default_x0, params, precond)
    if config.history_out:
        write_history_csv(trace, config.history_out)
    if trace.records:
        final = trace.records[-1]
        print(f"{trace.status} {trace.iterations} "
              f"{final.optimality:.6e} {final.feasibility:.6e}")
    else:
        print(f"{trace.status} 0 nan nan")
    if trace.message:
        print(trace.message, file=sys.stderr)
    return EXIT_BY_STATUS[trace.status]


def run_sweep(config: RunConfig, q_list, alpha_list, beta_list) -> int:
    """Grid of solves over (q, alpha, beta); writes one summary row per cell.

    Individual cells that fail to converge are recorded by status; the grid
    always runs to completion.
    """
    if not (q_list and alpha_list and beta_list):
        raise ConfigError("sweep lists must be nonempty")
    # Validate every cell's parameters up front so bad values are config
    # errors, not mid-grid surprises.
    cells = [(q, alpha, beta)
             for q in q_list for alpha in alpha_list for beta in beta_list]
    base = config.solver_params()
    for q, alpha, beta in cells:
        try:
            SolverParams(alpha=alpha, beta=beta, q=q, delta_max=base.delta_max,
                         k_max=base.k_max, eps_r=base.eps_r, eps_a=base.eps_a,
                         svd_cutoff=base.svd_cutoff)
        except ValueError as err:
            raise ConfigError(str(err)) from None

    rows = []
    for q, alpha, beta in cells:
        problem, clean, spec = _build_problem(config)
        precond = _build_precond(config, clean, spec)
        params = SolverParams(alpha=alpha, beta=beta, q=q,
                              delta_max=base.delta_max, k_max=base.k_max,
                              eps_r=base.eps_r, eps_a=base.eps_a,
                              svd_cutoff=base.svd_cutoff)
        _, trace = mad_solve(problem, spec.default_x0, params, precond)
        rows.append((q, alpha, beta, trace.status, trace.iterations))
        print(f"q={q} alpha={alpha:g} beta={beta:g} -> "
              f"{trace.status} {trace.iterations}")
    write_summary_csv(rows, config.summary_out)
    return 0


def run_verify(config: RunConfig) -> int:
    """Cross-check the matrix-free pieces against the dense oracle."""
    try:
        problem, spec = make_problem(config.problem)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    params = config.solver_params()
    y0 = CompoundVector.from_primal(spec.default_x0, problem.m_e, problem.m_i)
    checks = []

    # Gradient versus central differences of the objective.
    x = spec.default_x0 + 0.1
    grad = problem.objective_gradient(x)
    fd = np.empty_like(grad)
    for i in range(problem.n):
        h = 1e-6 * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd[i] = (problem.objective(xp) - problem.objective(xm)) / (2 * h)
    grad_err = np.linalg.norm(grad - fd) / (1.0 + np.linalg.norm(grad))
    checks.append(("gradient_vs_fd", grad_err <= 1e-6, grad_err))

    # Jacobian-transpose products versus dense finite-difference blocks.
    jac = fd_jacobian(problem, y0)
    n, m_e = problem.n, problem.m_e
    if m_e:
        eq_rows = -jac.matrix[n:n + m_e, :n]
        v = np.linspace(1.0, 2.0, m_e)
        err = np.linalg.norm(problem.eq_jac_t_vec(y0.x, v) - eq_rows.T @ v)
        err /= 1.0 + np.linalg.norm(eq_rows.T @ v)
        checks.append(("eq_jac_t_vec_vs_fd", err <= 1e-5, err))
    if problem.m_i:
        ineq_cols = -jac.matrix[:n, n + m_e:]
        w = np.linspace(1.0, 2.0, problem.m_i)
        err = np.linalg.norm(problem.ineq_jac_t_vec(y0.x, w) - ineq_cols @ w)
        err /= 1.0 + np.linalg.norm(ineq_cols @ w)
        checks.append(("ineq_jac_t_vec_vs_fd", err <= 1e-5, err))

    # Final iterates of the two solvers must agree.
    r0 = assemble_residual(problem, y0).norm()
    y_mad, trace = mad_solve(problem, spec.default_x0, params)
    try:
        y_newton = newton_solve(problem, y0, tol=1e-10, max_iter=200)
        agreement = (y_mad - y_newton).norm()
        bound = 10.0 * (params.eps_r * r0 + params.eps_a)
        checks.append(("newton_vs_mad", agreement <= bound, agreement))
    except (RuntimeError, np.linalg.LinAlgError) as err:
        print(f"newton reference solve failed: {err}", file=sys.stderr)
        checks.append(("newton_vs_mad", False, float("nan")))

    all_ok = True
    for name, ok, value in checks:
        print(f"{name}: {'PASS' if ok else 'FAIL'} ({value:.3e})")
        all_ok = all_ok and ok
    return 0 if all_ok else 1


def _add_run_flags(parser: argparse.ArgumentParser, grid: bool) -> None:
    listy = " (comma-separated list)" if grid else ""
    parser.add_argument("--problem", help="registry problem name: "
                        + ", ".join(problem_names()))
    parser.add_argument("--q", help=f"secant history depth{listy}")
    parser.add_argument("--alpha", help=f"preconditioner scaling{listy}")
    parser.add_argument("--beta", help=f"Hessian regularization{listy}")
    parser.add_argument("--delta-max", dest="delta_max", help="maximum step length")
    parser.add_argument("--max-iter", dest="max_iter", help="iteration budget")
    parser.add_argument("--eps-rel", dest="eps_rel", help="relative tolerance")
    parser.add_argument("--eps-abs", dest="eps_abs", help="absolute tolerance")
    parser.add_argument("--svd-cutoff", dest="svd_cutoff",
                        help="relative singular-value truncation threshold")
    parser.add_argument("--noise", help="noise magnitude applied to all evaluations")
    parser.add_argument("--seed", help="noise stream seed")
    parser.add_argument("--precond", help="identity | diagonal | oracle")
    parser.add_argument("--history-out", dest="history_out",
                        help="per-iteration CSV path (single runs)")
    parser.add_argument("--summary-out", dest="summary_out",
                        help="sweep summary CSV path")
    parser.add_argument("--config", help="key = value config file; flags override")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="madopt",
        description="Multisecant accelerated descent benchmark driver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_single = sub.add_parser("single", help="run one solve, write its history CSV")
    _add_run_flags(p_single, grid=False)

    p_sweep = sub.add_parser("sweep", help="run a (q, alpha, beta) grid of solves")
    _add_run_flags(p_sweep, grid=True)

    p_verify = sub.add_parser("verify",
                              help="cross-check a problem against the dense oracle")
    _add_run_flags(p_verify, grid=False)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "single":
            config, _ = _merge_config(args)
            return run_single(config)
        if args.command == "sweep":
            config, grids = _merge_config(args, grid_keys=("q", "alpha", "beta"))
            q_list = grids.get("q", [config.q])
            alpha_list = grids.get("alpha", [config.alpha])
            beta_list = grids.get("beta", [config.beta])
            return run_sweep(config, q_list, alpha_list, beta_list)
        config, _ = _merge_config(args)
        return run_verify(config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
