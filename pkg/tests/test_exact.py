import numpy as np
import pytest
from numpy.testing import assert_allclose

from config import PROBLEM_PRESETS
from errors import ConfigError
from chebyshev.interpolation import ChebBasisParams, matrix_poly_from_samples
from cli.verify import check_colinearity, check_time_delay
from linearization.companion import assemble_dense, build_btilde, build_companion, extract_x
from linearization.preconditioner import InnerSpec, build_preconditioner
from solvers.exact import post_process, solve_exact
from solvers.report import ResidualChecker
from problems.evaluator import eval_A_at, sample_f_at_nodes
from problems.generators import gen_time_delay
from solvers.shifts import build_shift_set

MUS = [-1.2, -0.4, 0.5, 1.1]


def _dense_solutions(op, b, mus):
    return np.column_stack([np.linalg.solve(op.poly(mu).toarray(), b) for mu in mus])


@pytest.mark.parametrize('seed', range(4))
def test_right_preconditioned_solve_matches_dense(make_instance, seed):
    op, b, prec = make_instance(seed=seed, sigma=0.3)
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_exact(op, prec, b, shifts, tol=1e-10, maxit=200)
    assert report.termination == 'converged'
    assert report.all_converged
    assert report.mus == MUS
    assert_allclose(report.solutions, _dense_solutions(op, b, MUS), rtol=1e-7, atol=1e-9)
    assert np.all(report.final_relres <= 1e-10)


def test_left_preconditioned_solve_matches_dense(make_instance):
    op, b, prec = make_instance(sigma=0.0, seed=5)
    shifts = build_shift_set(0.0, MUS, op.a)
    report = solve_exact(op, prec, b, shifts, tol=1e-10, maxit=200, side='left')
    assert report.all_converged
    assert report.side == 'left'
    assert_allclose(report.solutions, _dense_solutions(op, b, MUS), rtol=1e-7, atol=1e-9)


def test_one_inner_solve_per_preconditioner_application(make_instance):
    op, b, prec = make_instance()
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_exact(op, prec, b, shifts, tol=1e-10, maxit=200)
    counters = report.counters
    # B and B^T each need one solve per iteration, plus one per post-processed shift
    assert report.inner_solves == 2 * report.iterations + counters['postprocess']
    assert counters['prec_applies'] + counters['prec_T_applies'] == report.inner_solves


def test_histories_and_iteration_counts(make_instance):
    op, b, prec = make_instance(seed=2)
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_exact(op, prec, b, shifts, tol=1e-10, maxit=200, true_residuals_every_iteration=True)
    assert report.relres_recursive.shape == (report.iterations, len(MUS))
    assert not np.isnan(report.relres_true).any()
    counts = report.iterations_to_tol()
    assert all(c is not None and 1 <= c <= report.iterations for c in counts)
    rows = report.residual_rows(timings=False)
    assert len(rows) == report.iterations * len(MUS)
    assert rows[0]['iteration'] == 1 and rows[0]['cpu_seconds_cumulative'] == 0.0
    summary = report.summary()
    assert summary['iterations_to_tol'] == counts
    assert summary['termination'] == 'converged'


def test_maxit_gives_partial_report(make_instance):
    op, b, prec = make_instance(n=8, d=6)
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_exact(op, prec, b, shifts, tol=1e-14, maxit=3)
    assert report.termination == 'maxit'
    assert report.iterations == 3
    assert not report.all_converged
    assert np.all(np.isfinite(report.final_relres))


def test_solution_at_requires_solved_shift(make_instance):
    op, b, prec = make_instance()
    shifts = build_shift_set(0.3, MUS, op.a)
    report = solve_exact(op, prec, b, shifts, tol=1e-10, maxit=200)
    assert_allclose(report.solution_at(0.5), report.solutions[:, 2])
    with pytest.raises(ValueError):
        report.solution_at(0.6)


def test_post_process_right_mode(make_instance):
    """x = omega (K - sigma M)^{-1} u_tilde restricted to the first block"""
    op, b, prec = make_instance()
    K, M = assemble_dense(op)
    u = np.random.default_rng(0).standard_normal(op.dim)
    expected = 2.0 * np.linalg.solve(K - 0.3 * M, u)[:op.n]
    assert_allclose(post_process(prec, 2.0, u), expected, rtol=1e-10, atol=1e-12)
    assert_allclose(post_process(prec, 2.0, u, side='left'), 2.0 * u[:op.n])


def test_true_residual_checker_used(make_instance):
    op, b, prec = make_instance()
    shifts = build_shift_set(0.3, MUS, op.a)
    checker = ResidualChecker(b, op.poly, A_of_mu=lambda mu: op.poly(mu))
    report = solve_exact(op, prec, b, shifts, tol=1e-10, maxit=200, checker=checker)
    assert report.residual_kind == 'true'
    assert report.all_converged


@pytest.mark.parametrize('kwargs', [
    {'side': 'left'},
    {'side': 'middle'},
])
def test_invalid_sides(make_instance, kwargs):
    op, b, prec = make_instance(sigma=0.3)
    shifts = build_shift_set(0.3, MUS, op.a)
    with pytest.raises(ConfigError):
        solve_exact(op, prec, b, shifts, **kwargs)


def test_rejects_inexact_inner_and_mismatched_sigma(make_instance):
    op, b, prec = make_instance(sigma=0.3, inner=InnerSpec(mode='iterative'))
    with pytest.raises(ConfigError):
        solve_exact(op, prec, b, build_shift_set(0.3, MUS, op.a))
    direct = build_preconditioner(op, 0.3)
    with pytest.raises(ConfigError):
        solve_exact(op, direct, b, build_shift_set(0.2, MUS, op.a))


def test_orthogonal_shadow_vector_rejected(make_instance):
    op, b, prec = make_instance()
    c = np.zeros(op.dim)
    c[0] = 1.0
    with pytest.raises(ConfigError):
        solve_exact(op, prec, b, build_shift_set(0.3, MUS, op.a), c_tilde=c)


def test_shifted_residuals_are_colinear():
    ok, detail = check_colinearity(n=12, d=5, iterations=15)
    assert ok, detail


def test_time_delay_preset_converges_for_all_shifts():
    ok, detail = check_time_delay()
    assert ok, detail


def test_time_delay_preset_left_mode_matches_companion_solve():
    preset = PROBLEM_PRESETS['time_delay']
    problem = gen_time_delay(**preset['params'], a=preset['a'])
    params = ChebBasisParams(a=preset['a'], d=preset['d'])
    op = build_companion(matrix_poly_from_samples(sample_f_at_nodes(problem, params), params))
    prec = build_preconditioner(op, 0.0, InnerSpec(mode='direct'))
    shifts = build_shift_set(0.0, preset['mus'], preset['a'])
    checker = ResidualChecker(problem.b, op.poly, A_of_mu=lambda mu: eval_A_at(problem, mu))

    report = solve_exact(op, prec, problem.b, shifts, tol=preset['tol'], maxit=300, side='left',
                         checker=checker, true_residuals_every_iteration=True)

    assert report.termination == 'converged', report.final_relres
    assert np.all(report.final_relres <= preset['tol'])
    K, M = assemble_dense(op)
    bt = build_btilde(problem.b, op.d)
    for l, mu in enumerate(report.mus):
        x = extract_x(np.linalg.solve(K - mu * M, bt), op.n)
        assert np.linalg.norm(report.solutions[:, l] - x) <= 1e-7 * np.linalg.norm(x)
    counts = dict(zip(report.mus, report.iterations_to_tol()))
    assert counts[0.1] <= counts[0.5] + 2 and counts[-0.1] <= counts[-0.5] + 2
