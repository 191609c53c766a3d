import numpy as np
import pytest
from numpy.testing import assert_allclose

from config import COST_RATIO_LIMIT, FIRST_INNER_TOL, INNER_TOL_CEILING, INNER_TOL_FLOOR, PROBLEM_PRESETS
from errors import ConfigError, SingularShiftedTridiagonalError
from cli.verify import (
    check_algorithm_equivalence,
    check_helmholtz,
    check_injection,
    check_residual_gap,
    wall_time_ratio,
)
from chebyshev.interpolation import ChebBasisParams, matrix_poly_from_samples
from linearization.companion import build_companion
from linearization.preconditioner import InnerSpec, build_preconditioner
from solvers.exact import solve_exact
from solvers.inexact import (
    adaptive_tol,
    next_delta,
    shifted_tridiag_solve,
    solve_inexact,
    theorem_bound,
)
from problems.evaluator import sample_f_at_nodes
from problems.generators import gen_time_delay
from solvers.shifts import build_shift_set

MUS = [-1.2, -0.4, 0.5, 1.1]


def _dense_solutions(op, b, mus):
    return np.column_stack([np.linalg.solve(op.poly(mu).toarray(), b) for mu in mus])


def _tridiagonal(j, seed=0):
    rng = np.random.default_rng(seed)
    return (np.diag(rng.standard_normal(j))
            + np.diag(rng.uniform(0.5, 1.5, j - 1), -1)
            + np.diag(rng.standard_normal(j - 1), 1))


def test_direct_inner_matches_dense(make_instance):
    op, b, prec = make_instance(seed=1)
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_inexact(op, prec, b, shifts, tol=1e-10, maxit=200, tol_policy='fixed')
    assert report.termination == 'converged'
    assert report.solver == 'inexact'
    assert_allclose(report.solutions, _dense_solutions(op, b, MUS), rtol=1e-7, atol=1e-9)


def test_agrees_with_exact_solver(make_instance):
    op, b, prec = make_instance(seed=3)
    shifts = build_shift_set(0.3, MUS, op.a)
    exact = solve_exact(op, prec, b, shifts, tol=1e-10, maxit=200)
    _, _, prec_iter = make_instance(seed=3, inner=InnerSpec(mode='iterative'))
    inexact = solve_inexact(op, prec_iter, b, shifts, tol=1e-10, maxit=200, epsilon=1e-12)
    assert exact.all_converged and inexact.all_converged
    diff = np.linalg.norm(inexact.solutions - exact.solutions, axis=0)
    assert np.all(diff <= 1e-7 * np.linalg.norm(exact.solutions, axis=0))


def test_adaptive_tolerances_recorded(make_instance):
    op, b, prec = make_instance(seed=2, inner=InnerSpec(mode='iterative'))
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_inexact(op, prec, b, shifts, tol=1e-10, maxit=200, epsilon=1e-12)
    assert len(report.tol_history) == report.iterations
    assert len(report.inner_residuals) == report.iterations
    assert all(INNER_TOL_FLOOR <= t <= INNER_TOL_CEILING for t in report.tol_history)
    # Later tolerances relax as the solution components decay
    assert report.tol_history[-1] >= report.tol_history[0]
    summary = report.summary()
    assert summary['tol_policy'] == 'adaptive'
    assert len(summary['inner_tolerances']) == report.iterations
    assert 'residual_gap' not in summary


def test_unattainable_inner_tolerance_still_converges(make_instance):
    op, b, prec = make_instance(seed=2, inner=InnerSpec(mode='iterative'))
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_inexact(op, prec, b, shifts, tol=1e-10, maxit=200, tol_policy='fixed', fixed_tol=1e-17)
    assert report.termination == 'converged', report.message
    assert len(report.roundoff_limited) == report.iterations
    assert all(report.roundoff_limited)
    assert report.summary()['inner_roundoff_limited'] == [True] * report.iterations
    assert_allclose(report.solutions, _dense_solutions(op, b, MUS), rtol=1e-7, atol=1e-9)


def test_adaptive_policy_with_iterative_inner_on_time_delay():
    preset = PROBLEM_PRESETS['time_delay']
    problem = gen_time_delay(n=20, seed=3, entries='normal', a=preset['a'])
    params = ChebBasisParams(a=preset['a'], d=preset['d'])
    op = build_companion(matrix_poly_from_samples(sample_f_at_nodes(problem, params), params))
    prec = build_preconditioner(op, 0.0, InnerSpec(mode='iterative'))
    shifts = build_shift_set(0.0, [-0.5, 0.1, 0.5], preset['a'])
    report = solve_inexact(op, prec, problem.b, shifts, tol=1e-10, maxit=300, epsilon=1e-12)
    assert report.termination == 'converged', report.message
    assert report.tol_history[0] == FIRST_INNER_TOL


def test_diagnostics_record_residual_gap(make_instance):
    op, b, prec = make_instance(seed=4, inner=InnerSpec(mode='injected', seed=4))
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_inexact(op, prec, b, shifts, tol=1e-14, maxit=15, epsilon=1e-6,
                           tol_policy='theorem', diagnostics=True)
    assert report.delta_history is not None
    assert len(report.delta_history) == report.iterations
    assert max(report.delta_history) <= 1e-6 * (1 + 1e-6)
    assert all(t > 0 for t in report.tol_history)
    assert 'residual_gap' in report.summary()


def test_basis_gives_solutions_for_solved_shifts(make_instance):
    op, b, prec = make_instance(seed=5)
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_inexact(op, prec, b, shifts, tol=1e-10, maxit=200, tol_policy='fixed', keep_basis=True)
    assert report.basis is not None
    for l, mu in enumerate(MUS):
        assert_allclose(report.solution_at(mu), report.solutions[:, l], rtol=1e-10, atol=1e-12)
    assert report.solution_at(0.05).shape == (op.n,)


def test_unknown_policy_rejected(make_instance):
    op, b, prec = make_instance()
    with pytest.raises(ConfigError):
        solve_inexact(op, prec, b, build_shift_set(0.3, MUS, op.a), tol_policy='loose')


def test_every_iteration_true_residuals(make_instance):
    op, b, prec = make_instance(seed=6)
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_inexact(op, prec, b, shifts, tol=1e-10, maxit=200, tol_policy='fixed',
                           true_residuals_every_iteration=True)
    assert not np.isnan(report.relres_true).any()
    assert all(c is not None for c in report.iterations_to_tol())


@pytest.mark.parametrize('epsilon, component, expected, flagged', [
    (1e-12, 1.0, 1e-12, False),
    (1e-12, 1e-8, 1e-4, False),
    (1e-12, 1e-14, INNER_TOL_CEILING, False),
    (1e-20, 1.0, INNER_TOL_FLOOR, False),
    (1e-12, 0.0, INNER_TOL_CEILING, True),
])
def test_adaptive_tol_clamped(epsilon, component, expected, flagged):
    tol, flag = adaptive_tol(epsilon, component)
    assert np.isclose(tol, expected)
    assert flag is flagged


def test_theorem_bound():
    assert np.isclose(theorem_bound(1e-8, 10, 0.5, 2.0), 2.5e-10)
    assert theorem_bound(1e-8, 10, 0.5, 0.0) == np.inf


@pytest.mark.parametrize('mu', [-1.0, 0.2, 1.7])
def test_shifted_tridiag_solve(mu):
    sigma, beta = 0.3, 2.5
    T = _tridiagonal(8)
    solve = shifted_tridiag_solve(T, mu, sigma, beta)
    rhs = np.zeros(8)
    rhs[0] = beta
    assert_allclose((np.eye(8) + (-mu + sigma) * T) @ solve.y, rhs, atol=1e-10)
    assert_allclose(solve.deltas[1:], beta * np.cumprod(np.abs(solve.sines)))
    assert np.isclose(solve.sigma_min(), np.linalg.svd(solve.T_shifted, compute_uv=False)[-1])


def test_next_delta_predicts_following_solve():
    sigma, mu = 0.3, 1.1
    T = _tridiagonal(9, seed=3)
    for j in range(2, 10):
        prev = shifted_tridiag_solve(T[:j - 1, :j - 1], mu, sigma, 1.0)
        full = shifted_tridiag_solve(T[:j, :j], mu, sigma, 1.0)
        assert np.isclose(next_delta(prev, T[j - 1, j - 2], sigma), full.deltas[-1])


def test_singular_shifted_tridiagonal():
    T = np.array([[1.0, 0.0], [0.0, 2.0]])
    # I + (-mu + sigma) T has a zero first entry for mu - sigma = 1
    with pytest.raises(SingularShiftedTridiagonalError) as excinfo:
        shifted_tridiag_solve(T, 1.3, 0.3, 1.0)
    assert excinfo.value.mu == 1.3


def test_short_recurrences_equal_tridiagonal_extraction():
    ok, detail = check_algorithm_equivalence(iterations=10)
    assert ok, detail


def test_inner_residual_gap_identity():
    ok, detail = check_residual_gap(nx=10)
    assert ok, detail


def test_injected_residuals_respect_epsilon():
    ok, detail = check_injection(n=12, d=5, iterations=12)
    assert ok, detail


@pytest.mark.slow
def test_helmholtz_inexact_run():
    ok, detail = check_helmholtz()
    assert ok, detail


def test_wall_time_ratio_uses_window_medians():
    wall = [1.0] * 60
    wall[4] = 50.0       # one slow sample near iteration 5
    wall[49] = 50.0      # and one near iteration 50
    ratio, last = wall_time_ratio(wall)
    assert last == 50 and ratio == pytest.approx(1.0)
    ratio, last = wall_time_ratio([1.0] * 10 + [3.0] * 10)
    assert last == 20 and ratio == pytest.approx(3.0)
    assert ratio > COST_RATIO_LIMIT


def test_wall_time_ratio_on_short_runs():
    ratio, last = wall_time_ratio([1.0] * 6)
    assert np.isnan(ratio) and last == 6
    ratio, last = wall_time_ratio([0.0] * 20)
    assert np.isnan(ratio)
