"""
Built-in verification suites

Each check builds its own instances, compares against a dense oracle or a
known identity, and returns a CheckResult. The quick suite runs in well
under a minute; the full suite adds the problem-scale runs.
"""
import logging
import math
import time
from typing import Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from config import COST_RATIO_LIMIT, PROBLEM_PRESETS
from chebyshev.interpolation import (
    ChebBasisParams,
    cheb_basis,
    cheb_nodes,
    evaluate_cheb_series,
    matrix_poly_from_samples,
    scalar_cheb_coeffs,
)
from linearization.companion import apply_M, assemble_dense, build_btilde, build_companion
from linearization.preconditioner import InnerSpec, build_preconditioner, apply_prec, apply_prec_T
from problems.evaluator import eval_A_at, sample_f_at_nodes
from problems.generators import gen_helmholtz_fd, gen_random_poly, gen_time_delay, make_rng
from solvers.exact import post_process, solve_exact
from solvers.inexact import residual_gap, shifted_tridiag_solve, solve_inexact
from solvers.report import ResidualChecker
from solvers.shifts import build_shift_set

logger = logging.getLogger(__name__)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _timed(name: str, check: Callable[[], tuple]) -> CheckResult:
    start = time.perf_counter()
    try:
        passed, detail = check()
    except Exception as e:
        logger.exception("Check %s raised", name)
        passed, detail = False, f"raised {type(e).__name__}: {e}"
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


def _random_shape(rng: np.random.Generator):
    return int(rng.integers(2, 9)), int(rng.integers(2, 11)), float(rng.uniform(0.5, 5.0))


def check_companion_oracle(instances: int = 50, seed: int = 1):
    """Dense solves of (K - mu M) u = b_tilde have u_l = tau_l(mu) u_0 and P(mu) u_0 = b"""
    rng = make_rng(seed)
    worst = 0.0
    for idx in range(instances):
        n, d, a = _random_shape(rng)
        poly, b = gen_random_poly(n, d, a, seed=seed * 1000 + idx)
        op = build_companion(poly)
        K, M = assemble_dense(op)
        mu = float(rng.uniform(-a, a))
        u = np.linalg.solve(K - mu * M, build_btilde(b, d)).reshape(d, n)
        tau = cheb_basis(mu, poly.params)
        structure = np.linalg.norm(u - np.outer(tau[:d], u[0])) / np.linalg.norm(u)
        residual = np.linalg.norm(poly(mu) @ u[0] - b) / np.linalg.norm(b)
        worst = max(worst, structure, residual)
    return worst <= 1e-9, f"{instances} instances, worst relative error {worst:.2e}"


def check_preconditioner_identity(instances: int = 50, seed: int = 2):
    """(K - sigma M) apply_prec(y) = y and the transposed analogue, one inner solve each"""
    rng = make_rng(seed)
    worst = 0.0
    counts_ok = True
    for idx in range(instances):
        n, d, a = _random_shape(rng)
        poly, _ = gen_random_poly(n, d, a, seed=seed * 1000 + idx)
        op = build_companion(poly)
        K, M = assemble_dense(op)
        sigma = float(rng.uniform(-0.9 * a, 0.9 * a))
        prec = build_preconditioner(op, sigma, InnerSpec(mode='direct'))
        A = K - sigma * M
        y = rng.standard_normal(op.dim)
        before = prec.inner_solves
        forward = np.linalg.norm(A @ apply_prec(prec, y) - y) / np.linalg.norm(y)
        counts_ok &= prec.inner_solves == before + 1
        adjoint = np.linalg.norm(A.T @ apply_prec_T(prec, y) - y) / np.linalg.norm(y)
        counts_ok &= prec.inner_solves == before + 2
        worst = max(worst, forward, adjoint)
    detail = f"{instances} instances, worst relative defect {worst:.2e}"
    if not counts_ok:
        detail += ", inner solve count differs from one per application"
    return worst <= 1e-10 and counts_ok, detail


def check_interpolation(d: int = 17, a: float = 4.0, points: int = 101):
    """exp(-mu) on [-a, a] interpolated at degree d"""
    params = ChebBasisParams(a=a, d=d)
    coeffs = scalar_cheb_coeffs(np.exp(-cheb_nodes(params)))
    grid = np.linspace(-a, a, points)
    exact = np.exp(-grid)
    err = float(np.max(np.abs(evaluate_cheb_series(coeffs, grid, params) - exact) / np.abs(exact)))
    return err <= 1e-8, f"d={d}, a={a}: max relative error {err:.2e}"


def check_colinearity(n: int = 30, d: int = 8, seed: int = 3, iterations: int = 30):
    """Explicit shifted residuals b_tilde - (omega I - B) u_tilde equal r_i / zeta_i"""
    a = 2.0
    poly, b = gen_random_poly(n, d, a, seed=seed)
    op = build_companion(poly)
    sigma = 0.3
    prec = build_preconditioner(op, sigma, InnerSpec(mode='direct'))
    shifts = build_shift_set(sigma, [-1.5, -0.7, 0.1, 0.9, 1.6], a)
    bt = build_btilde(b, d)
    scale = np.linalg.norm(bt)
    worst = [0.0]

    def _compare(i, seed_state, states):
        for st in states:
            if st.broken:
                continue
            Bu = apply_M(op, apply_prec(prec, st.u_tilde))
            explicit = bt - (st.omega * st.u_tilde - Bu)
            worst[0] = max(worst[0], np.linalg.norm(explicit - seed_state.r / st.zeta) / scale)

    solve_exact(op, prec, b, shifts, tol=1e-13, maxit=iterations, side='right', iteration_callback=_compare)
    return worst[0] <= 1e-8, f"n={n}, d={d}, 5 shifts: worst gap {worst[0]:.2e} relative to ||b_tilde||"


def _time_delay_setup():
    preset = PROBLEM_PRESETS['time_delay']
    problem = gen_time_delay(**preset['params'], a=preset['a'])
    params = ChebBasisParams(a=preset['a'], d=preset['d'])
    poly = matrix_poly_from_samples(sample_f_at_nodes(problem, params), params)
    op = build_companion(poly)
    prec = build_preconditioner(op, preset['sigma'], InnerSpec(mode='direct'))
    shifts = build_shift_set(preset['sigma'], preset['mus'], preset['a'])
    checker = ResidualChecker(problem.b, poly, A_of_mu=lambda mu: eval_A_at(problem, mu))
    return problem, op, prec, shifts, checker


def check_time_delay():
    """Preset run: every shift converges and smaller |mu| needs no more iterations"""
    preset = PROBLEM_PRESETS['time_delay']
    problem, op, prec, shifts, checker = _time_delay_setup()
    report = solve_exact(op, prec, problem.b, shifts, tol=preset['tol'], maxit=300, side='left',
                         checker=checker, true_residuals_every_iteration=True)
    counts = report.iterations_to_tol()
    if not report.all_converged:
        return False, f"termination={report.termination}, final relres {report.final_relres}"
    ordered = True
    for p, mu_p in enumerate(report.mus):
        for q, mu_q in enumerate(report.mus):
            if abs(mu_p) < abs(mu_q) and counts[p] > counts[q] + 2:
                ordered = False
    return ordered, f"iterations to tol per mu {dict(zip(report.mus, counts))}"


def check_algorithm_equivalence(iterations: int = 20):
    """Short-recurrence iterates equal the tridiagonal extraction on the time-delay preset"""
    problem, op, prec, shifts, checker = _time_delay_setup()
    sigma = prec.sigma
    n = op.n
    first: Dict[int, np.ndarray] = {}
    second: Dict[int, np.ndarray] = {}

    def _short(i, seed_state, states):
        first[i + 1] = np.column_stack([post_process(prec, st.omega, st.u_tilde, 'right') for st in states])

    def _tridiag(i, state, far_solve):
        T = state.T_hat()
        Z = state.Z.as_matrix()[:n]
        second[i] = np.column_stack([Z @ shifted_tridiag_solve(T, float(mu), sigma, state.beta0).y
                                     for mu in shifts.mus])

    solve_exact(op, prec, problem.b, shifts, tol=1e-16, maxit=iterations, side='right',
                checker=checker, iteration_callback=_short)
    solve_inexact(op, prec, problem.b, shifts, tol=1e-16, maxit=iterations, tol_policy='fixed',
                  checker=checker, iteration_callback=_tridiag)
    common = sorted(set(first) & set(second))
    if not common:
        return False, "no iterations to compare"
    worst = max(np.linalg.norm(first[i] - second[i]) / np.linalg.norm(second[i]) for i in common)
    return worst <= 1e-6, f"{len(common)} iterations, worst relative difference {worst:.2e}"


def check_injection(epsilons=(1e-4, 1e-8), n: int = 30, d: int = 6, iterations: int = 25, seed: int = 4):
    """Inner residuals at the theorem bound keep the residual gap below epsilon"""
    a = 2.0
    poly, b = gen_random_poly(n, d, a, seed=seed)
    op = build_companion(poly)
    sigma = 0.2
    details = []
    passed = True
    for eps in epsilons:
        prec = build_preconditioner(op, sigma, InnerSpec(mode='injected', seed=seed))
        shifts = build_shift_set(sigma, [-1.2, 0.6, 1.4], a)
        report = solve_inexact(op, prec, b, shifts, tol=1e-15, maxit=iterations, epsilon=eps,
                               tol_policy='theorem', diagnostics=True)
        worst = max(report.delta_history) if report.delta_history else 0.0
        passed &= worst <= eps * (1 + 1e-6)
        details.append(f"eps={eps:.0e}: max delta {worst:.2e}")
    return passed, ", ".join(details)


def check_residual_gap(nx: int = 30):
    """r_in = r_ex - P_j y_j with fixed-tolerance iterative inner solves"""
    preset = PROBLEM_PRESETS['helmholtz']
    problem = gen_helmholtz_fd(nx, nx, a=preset['a'])
    params = ChebBasisParams(a=preset['a'], d=preset['d'])
    poly = matrix_poly_from_samples(sample_f_at_nodes(problem, params), params)
    op = build_companion(poly)
    prec = build_preconditioner(op, preset['sigma'], InnerSpec(mode='iterative', tol=1e-4))
    shifts = build_shift_set(preset['sigma'], preset['mus'], preset['a'])
    bt = build_btilde(problem.b, op.d)
    scale = np.linalg.norm(bt)
    worst = [0.0]

    def _gap(i, state, far_solve):
        if far_solve is None:
            return
        gap = residual_gap(state, op, bt, far_solve.mu, prec.sigma, far_solve.y,
                           state.Z.matvec(far_solve.y), prec.log)
        worst[0] = max(worst[0], gap.identity_error / scale)

    solve_inexact(op, prec, problem.b, shifts, tol=preset['tol'], maxit=300, tol_policy='fixed',
                  fixed_tol=1e-4, diagnostics=True, iteration_callback=_gap)
    return worst[0] <= 1e-10, f"{nx}x{nx} grid: worst identity error {worst[0]:.2e} relative to ||b_tilde||"


def wall_time_ratio(wall: Sequence[float], early: int = 5, late: int = 50, window: int = 5) -> Tuple[float, int]:
    """
    Median wall time of the `window` iterations ending at `late` (or at the
    final iteration) over the median of the window centred on `early`.

    Returns:
        Tuple of (ratio, compared iteration); ratio is nan when the run is too short
    """
    last = min(late, len(wall))
    if last < early + window:
        return math.nan, last
    lo = max(0, early - 1 - window // 2)
    first = float(np.median(wall[lo:lo + window]))
    final = float(np.median(wall[last - window:last]))
    if first <= 0.0:
        return math.nan, last
    return final / first, last


def check_helmholtz(nx: int = 100):
    """Inexact adaptive run converges, agrees with direct inner solves and keeps a flat iteration cost"""
    preset = PROBLEM_PRESETS['helmholtz']
    problem = gen_helmholtz_fd(nx, nx, a=preset['a'])
    params = ChebBasisParams(a=preset['a'], d=preset['d'])
    poly = matrix_poly_from_samples(sample_f_at_nodes(problem, params), params)
    op = build_companion(poly)
    shifts = build_shift_set(preset['sigma'], preset['mus'], preset['a'])
    checker = ResidualChecker(problem.b, poly, A_of_mu=lambda mu: eval_A_at(problem, mu))

    inexact = solve_inexact(op, build_preconditioner(op, preset['sigma'], InnerSpec(mode='iterative')),
                            problem.b, shifts, tol=preset['tol'], maxit=300, epsilon=1e-12,
                            tol_policy='adaptive', checker=checker)
    exact = solve_inexact(op, build_preconditioner(op, preset['sigma'], InnerSpec(mode='direct')),
                          problem.b, shifts, tol=preset['tol'], maxit=300, tol_policy='fixed', checker=checker)
    if not (inexact.all_converged and exact.all_converged):
        return False, f"termination inexact={inexact.termination}, direct={exact.termination}"
    diff = np.linalg.norm(inexact.solutions - exact.solutions, axis=0) / np.linalg.norm(exact.solutions, axis=0)
    detail = f"{inexact.iterations} iterations, solution difference {diff.max():.2e}"
    passed = bool(diff.max() <= 1e-6)
    ratio, last = wall_time_ratio(inexact.wall_seconds)
    if math.isnan(ratio):
        detail += f", {inexact.iterations} iterations too few to compare wall times"
    else:
        detail += f", iteration {last} / iteration 5 wall time {ratio:.2f} (limit {COST_RATIO_LIMIT})"
        passed &= ratio <= COST_RATIO_LIMIT
    return passed, detail


QUICK_CHECKS = {
    'companion oracle': lambda: check_companion_oracle(instances=10),
    'preconditioner identity': lambda: check_preconditioner_identity(instances=10),
    'interpolation exp(-mu)': check_interpolation,
    'colinearity': check_colinearity,
    'algorithm equivalence': check_algorithm_equivalence,
}

FULL_CHECKS = {
    'companion oracle': check_companion_oracle,
    'preconditioner identity': check_preconditioner_identity,
    'interpolation exp(-mu)': check_interpolation,
    'colinearity': check_colinearity,
    'algorithm equivalence': check_algorithm_equivalence,
    'time-delay preset': check_time_delay,
    'inner residual injection': check_injection,
    'residual gap identity': check_residual_gap,
    'helmholtz 100x100': check_helmholtz,
}

SUITES = {'quick': QUICK_CHECKS, 'full': FULL_CHECKS}


def run_suite(level: str = 'quick') -> List[CheckResult]:
    """Run every check of a suite in order"""
    if level not in SUITES:
        raise ValueError(f"Unknown suite '{level}', expected one of {tuple(SUITES)}")
    results = []
    for name, check in SUITES[level].items():
        result = _timed(name, check)
        logger.info("%s: %s (%.1fs) %s", name, 'pass' if result.passed else 'FAIL', result.seconds, result.detail)
        results.append(result)
    return results
