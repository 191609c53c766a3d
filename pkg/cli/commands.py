"""
Subcommands: solve, interp-check and verify

Each command takes a validated RunConfig (or a suite level), prints short
status lines and returns an exit code.
"""
import json
import logging
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import polars as pl

from config import (
    EXIT_ERROR,
    EXIT_OK,
    EXIT_PARTIAL,
    INTERP_CHECK_POINTS,
    INTERP_CHECK_THRESHOLD,
    INTERP_FILE,
    PROJECT_NAME,
    REPORT_FILE,
    RESIDUALS_FILE,
    SOLUTIONS_FILE,
    SWEEP_FILE,
    TIMEZONE,
)
from errors import ChebBiCGError, SingularShiftedTridiagonalError
from chebyshev.interpolation import ChebBasisParams, MatrixChebPoly, interp_errors, matrix_poly_from_samples
from linalg.matrix_market import write_matrix_market
from linearization.companion import CompanionOperator, build_companion
from linearization.preconditioner import InnerSpec, Preconditioner, build_preconditioner
from problems.evaluator import ParamProblem, eval_A_at, sample_f_at_nodes
from problems.generators import GENERATORS
from problems.loader import check_sample_nodes, load_problem_manifest
from solvers.exact import solve_exact
from solvers.inexact import solve_inexact
from solvers.report import ResidualChecker, SolveReport
from solvers.shifts import ShiftSet, build_shift_set
from cli.run_config import RunConfig, validate_run_config
from cli.verify import run_suite

logger = logging.getLogger(__name__)


@dataclass
class PreparedRun:
    """Everything built before the outer iteration starts"""
    problem: ParamProblem
    params: ChebBasisParams
    poly: MatrixChebPoly
    op: CompanionOperator
    prec: Preconditioner
    shifts: ShiftSet
    checker: ResidualChecker


def build_problem(config: RunConfig) -> ParamProblem:
    """Builtin generator or user manifest named by the config"""
    if config.problem == 'manifest':
        return load_problem_manifest(config.manifest)
    return GENERATORS[config.problem](**config.generator_params())


def interpolate_problem(problem: ParamProblem, params: ChebBasisParams) -> MatrixChebPoly:
    """Chebyshev interpolant of A(mu), after checking tabulated node positions"""
    is_valid, msg = check_sample_nodes(problem, params)
    if not is_valid:
        raise ChebBiCGError(msg)
    return matrix_poly_from_samples(sample_f_at_nodes(problem, params), params)


def prepare_run(config: RunConfig, problem: Optional[ParamProblem] = None) -> PreparedRun:
    """
    Interpolate, linearize, factor P(sigma) and order the shifts.

    Raises:
        ChebBiCGError: On any problem, interpolation or factorization failure
    """
    problem = problem or build_problem(config)
    params = ChebBasisParams(a=config.a, d=config.d)
    poly = interpolate_problem(problem, params)
    op = build_companion(poly)
    inner = InnerSpec(mode=config.inner_mode, method=config.inner_method, tol=config.inner_tol)
    prec = build_preconditioner(op, config.sigma, inner)
    shifts = build_shift_set(config.sigma, config.mus, config.a)
    A_of_mu = (lambda mu: eval_A_at(problem, mu)) if problem.evaluable else None
    checker = ResidualChecker(problem.b, poly, A_of_mu=A_of_mu)
    logger.info("Prepared %s: n=%d, d=%d, companion dimension %d, %d shift(s)",
                problem.name, op.n, op.d, op.dim, len(shifts))
    return PreparedRun(problem, params, poly, op, prec, shifts, checker)


def run_solver(config: RunConfig, run: PreparedRun) -> SolveReport:
    """Run the configured outer solver on a prepared problem"""
    every = 'true-residuals' in config.diagnostics
    if config.solver == 'exact':
        return solve_exact(run.op, run.prec, run.problem.b, run.shifts, tol=config.tol, maxit=config.maxit,
                           side=config.side, checker=run.checker, true_residuals_every_iteration=every)
    return solve_inexact(run.op, run.prec, run.problem.b, run.shifts, tol=config.tol, maxit=config.maxit,
                         epsilon=config.epsilon, tol_policy=config.tol_policy, fixed_tol=config.inner_tol,
                         checker=run.checker, diagnostics='residual-gap' in config.diagnostics,
                         true_residuals_every_iteration=every, keep_basis=config.sweep > 0)


def sweep_residuals(config: RunConfig, run: PreparedRun, report: SolveReport) -> pl.DataFrame:
    """Relative residual of x(mu) on an N-point grid over [-a, a] from the stored basis"""
    grid = [float(mu) for mu in np.linspace(-config.a, config.a, config.sweep) if mu != config.sigma]
    rows = []
    for mu in grid:
        try:
            relres = run.checker.relres(mu, report.solution_at(mu))
        except SingularShiftedTridiagonalError:
            relres = float('nan')
        rows.append({'mu': mu, 'relres': relres})
    return pl.DataFrame(rows, schema={'mu': pl.Float64, 'relres': pl.Float64})


def write_outputs(config: RunConfig, run: PreparedRun, report: SolveReport) -> Dict[str, str]:
    """residuals.csv, solutions.mtx and report.json in config.out"""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        'residuals': str(out / RESIDUALS_FILE),
        'solutions': str(out / SOLUTIONS_FILE),
        'report': str(out / REPORT_FILE),
    }

    table = pl.DataFrame(
        report.residual_rows(timings=not config.deterministic),
        schema={
            'iteration': pl.Int64,
            'mu': pl.Float64,
            'relres_recursive': pl.Float64,
            'relres_true_if_available': pl.Float64,
            'cpu_seconds_cumulative': pl.Float64,
        },
    )
    table.write_csv(paths['residuals'])

    mus = ', '.join(f"{mu:g}" for mu in report.mus)
    write_matrix_market(paths['solutions'], report.solutions, comment=f"x(mu) for mu = {mus}")

    summary = {
        'project': PROJECT_NAME,
        'timestamp': None if config.deterministic else datetime.now(TIMEZONE).isoformat(),
        'problem': {
            'name': run.problem.name,
            'descriptor': run.problem.descriptor,
            'n': run.op.n,
            'companion_dimension': run.op.dim,
        },
        'config': config.as_dict(),
        'report': report.summary(),
        'wall_seconds': None if config.deterministic else float(sum(report.wall_seconds)),
        'outputs': dict(paths),
    }
    if config.sweep > 0 and config.solver == 'inexact':
        paths['sweep'] = str(out / SWEEP_FILE)
        sweep_residuals(config, run, report).write_csv(paths['sweep'])
        summary['outputs']['sweep'] = paths['sweep']

    with open(paths['report'], 'w') as f:
        json.dump(summary, f, indent=2)
    return paths


def _fail(message: str) -> int:
    print(f"✗ {message}")
    return EXIT_ERROR


def cmd_solve(config: RunConfig) -> int:
    """
    Solve for every shift and write the outputs.

    Returns:
        0 when every shift converged, 2 on partial convergence, 1 on error
    """
    is_valid, msg = validate_run_config(config)
    if not is_valid:
        return _fail(msg)
    if config.sweep > 0 and config.solver != 'inexact':
        print("⚠ --sweep needs the inexact solver; skipping the sweep")

    try:
        run = prepare_run(config)
        print(f"✓ {run.problem.descriptor}")
        print(f"  d={config.d}, a={config.a:g}, sigma={config.sigma:g}, {len(run.shifts)} shift(s), "
              f"{config.solver} solver, {config.side} preconditioning, inner={config.inner_mode}")
        report = run_solver(config, run)
        paths = write_outputs(config, run, report)
    except (ChebBiCGError, OSError) as e:
        logger.debug("Solve failed", exc_info=True)
        return _fail(str(e))

    counts = report.iterations_to_tol()
    for mu, relres, ok, count in zip(report.mus, report.final_relres, report.converged, counts):
        mark = '✓' if ok else '⚠'
        reached = f"tol reached at iteration {count}" if count is not None else "tol not reached"
        print(f"  {mark} mu={mu:g}: relres {relres:.3e}, {reached}")
    print(f"  {report.iterations} iterations, {report.inner_solves} inner solves, termination: {report.termination}")
    for name, path in paths.items():
        print(f"  {name}: {path}")

    if report.all_converged:
        print("✓ All shifts converged")
        return EXIT_OK
    print(f"⚠ {int(np.sum(report.converged))} of {len(report.mus)} shifts converged")
    return EXIT_PARTIAL


def cmd_interp_check(config: RunConfig, threshold: float = INTERP_CHECK_THRESHOLD,
                     points: int = INTERP_CHECK_POINTS) -> int:
    """
    Relative interpolation error of A(mu) on a uniform grid over [-a, a].

    Returns:
        0 when the maximum error is within threshold, 1 otherwise or on error
    """
    is_valid, msg = validate_run_config(config)
    if not is_valid:
        return _fail(msg)
    try:
        problem = build_problem(config)
        if not problem.evaluable:
            return _fail(f"Problem '{problem.name}' has sampled terms; A(mu) cannot be evaluated off the nodes")
        params = ChebBasisParams(a=config.a, d=config.d)
        poly = interpolate_problem(problem, params)
        grid = np.linspace(-config.a, config.a, points)
        errors = interp_errors(poly, lambda mu: eval_A_at(problem, mu), grid)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        pl.DataFrame({'mu': grid, 'rel_error': errors}).write_csv(out / INTERP_FILE)
    except (ChebBiCGError, OSError) as e:
        logger.debug("Interpolation check failed", exc_info=True)
        return _fail(str(e))

    worst = float(errors.max())
    print(f"  {problem.name}: d={config.d}, a={config.a:g}, {points} points, max relative error {worst:.3e}")
    print(f"  table: {out / INTERP_FILE}")
    if worst <= threshold:
        print(f"✓ Interpolation error within {threshold:.0e}")
        return EXIT_OK
    return _fail(f"Interpolation error {worst:.3e} exceeds {threshold:.0e}; increase d")


def cmd_verify(level: str = 'quick') -> int:
    """Run a verification suite; nonzero exit when any check fails"""
    print("=" * 60)
    print(f"{PROJECT_NAME} verification ({level})")
    print("=" * 60)
    results = run_suite(level)
    for result in results:
        mark = '✓' if result.passed else '✗'
        print(f"{mark} {result.name} ({result.seconds:.1f}s): {result.detail}")
    failed = [r.name for r in results if not r.passed]
    print("-" * 60)
    if failed:
        print(f"✗ {len(failed)} of {len(results)} checks failed: {', '.join(failed)}")
        return EXIT_ERROR
    print(f"✓ All {len(results)} checks passed")
    return EXIT_OK


def summarize_shifts(report: SolveReport) -> Tuple[pl.DataFrame, pl.DataFrame]:
    """Per-shift table and per-iteration table for display"""
    per_shift = pl.DataFrame({
        'mu': report.mus,
        'converged': [bool(c) for c in report.converged],
        'final_relres': [float(r) for r in report.final_relres],
        'iterations_to_tol': report.iterations_to_tol(),
    })
    per_iteration = pl.DataFrame(report.residual_rows())
    return per_shift, per_iteration
