import json

import numpy as np
import polars as pl
import pytest
from numpy.testing import assert_allclose

from config import EXIT_ERROR, EXIT_OK, EXIT_PARTIAL
from errors import ConfigError
from cli.__main__ import _join_flag_values, build_parser, main
from cli.commands import cmd_interp_check, cmd_solve, cmd_verify, prepare_run, run_solver, summarize_shifts
from cli.run_config import (
    build_run_config,
    load_run_file,
    parse_mu_list,
    preset_config,
    validate_run_config,
)
from linalg.matrix_market import read_matrix_market
from linalg.sparse_ops import as_csr
from problems.evaluator import ParamProblem, eval_A_at
from problems.loader import save_problem


def _small_time_delay(out, **overrides):
    settings = {'problem': 'time_delay', 'n': 10, 'mus': [-0.5, 0.1, 0.5], 'maxit': 100, 'out': str(out)}
    settings.update(overrides)
    return build_run_config(settings)


def test_parse_mu_list_forms():
    assert parse_mu_list(0.5) == [0.5]
    assert parse_mu_list([1, 2]) == [1.0, 2.0]
    assert parse_mu_list("2.5, 3.0") == [2.5, 3.0]
    mus = parse_mu_list("linspace(2.5, 3.5, 11)")
    assert len(mus) == 11
    assert_allclose(mus[:2], [2.5, 2.6])
    assert mus[-1] == 3.5
    with pytest.raises(ConfigError):
        parse_mu_list("linspace(1, 2, many)")
    with pytest.raises(ConfigError):
        parse_mu_list("one, two")


def test_preset_defaults():
    config = preset_config('helmholtz')
    assert (config.d, config.a, config.sigma) == (34, 5.0, 3.0)
    assert config.inner_mode == 'direct'
    config.solver = 'inexact'
    assert config.inner_mode == 'iterative'
    assert config.generator_params() == {'nx': 100, 'ny': 100, 'a': 5.0}
    config.n = 20
    assert config.generator_params()['ny'] == 20
    with pytest.raises(ConfigError):
        preset_config('heat')


@pytest.mark.parametrize('overrides, fragment', [
    ({'mus': [0.0]}, 'equals sigma'),
    ({'mus': [3.0]}, 'outside'),
    ({'mus': []}, 'At least one'),
    ({'d': 1}, 'Degree'),
    ({'sigma': 2.0}, 'strictly inside'),
    ({'solver': 'inexact'}, 'Left preconditioning'),
    ({'side': 'left', 'sigma': 0.2}, 'sigma = 0'),
    ({'side': 'right', 'inner': 'iterative'}, 'direct inner'),
    ({'side': 'right', 'diagnostics': ['residual-gap']}, 'inexact solver'),
    ({'diagnostics': ['history']}, 'diagnostics flag'),
    ({'tol': 0.0}, 'positive'),
    ({'maxit': 0}, 'maxit'),
])
def test_validation_errors(tmp_path, overrides, fragment):
    ok, msg = validate_run_config(_small_time_delay(tmp_path, **overrides))
    assert not ok
    assert fragment in msg


def test_valid_config(tmp_path):
    ok, msg = validate_run_config(_small_time_delay(tmp_path))
    assert ok, msg


def test_run_file(tmp_path):
    path = tmp_path / 'run.toml'
    path.write_text(
        '[problem]\nname = "helmholtz"\nnx = 10\n\n'
        '[solver]\nkind = "inexact"\nmu = "linspace(2.5, 3.5, 5)"\ntol = 1e-6\n\n'
        '[output]\ndir = "runs/h"\ndiagnostics = "true-residuals"\n'
    )
    overrides = load_run_file(path)
    assert overrides['mus'] == [2.5, 2.75, 3.0, 3.25, 3.5]
    assert overrides['diagnostics'] == ['true-residuals']
    config = build_run_config(overrides)
    assert config.problem == 'helmholtz'
    assert config.solver == 'inexact' and config.tol == 1e-6
    assert config.d == 34 and config.out == 'runs/h'
    ok, msg = validate_run_config(config)
    assert not ok and 'equals sigma' in msg


def test_run_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / 'run.toml'
    path.write_text('[plotting]\ncolor = "red"\n')
    with pytest.raises(ConfigError, match='plotting'):
        load_run_file(path)
    path.write_text('[solver]\nspeed = 3\n')
    with pytest.raises(ConfigError, match='speed'):
        load_run_file(path)


def test_solve_writes_outputs(tmp_path):
    config = _small_time_delay(tmp_path / 'run')
    assert cmd_solve(config) == EXIT_OK
    residuals = pl.read_csv(tmp_path / 'run' / 'residuals.csv')
    assert residuals.columns == ['iteration', 'mu', 'relres_recursive', 'relres_true_if_available',
                                 'cpu_seconds_cumulative']
    assert residuals['iteration'].min() == 1
    X = read_matrix_market(tmp_path / 'run' / 'solutions.mtx').toarray()
    assert X.shape == (10, 3)
    problem = prepare_run(config).problem
    for l, mu in enumerate(config.mus):
        residual = eval_A_at(problem, mu) @ X[:, l] - problem.b
        assert np.linalg.norm(residual) <= 1e-9 * np.linalg.norm(problem.b)
    report = json.loads((tmp_path / 'run' / 'report.json').read_text())
    assert report['report']['termination'] == 'converged'
    assert report['config']['side'] == 'left'
    assert report['problem']['companion_dimension'] == 170
    assert report['timestamp'] is not None


def test_partial_convergence_exit_code(tmp_path):
    config = _small_time_delay(tmp_path, maxit=2, tol=1e-14)
    assert cmd_solve(config) == EXIT_PARTIAL


def test_invalid_config_exit_code(tmp_path):
    assert cmd_solve(_small_time_delay(tmp_path, mus=[0.0])) == EXIT_ERROR


def test_deterministic_outputs_are_identical(tmp_path):
    for run in ('first', 'second'):
        assert cmd_solve(_small_time_delay(tmp_path / run, deterministic=True)) == EXIT_OK
    first = (tmp_path / 'first' / 'residuals.csv').read_bytes()
    second = (tmp_path / 'second' / 'residuals.csv').read_bytes()
    assert first == second
    report = json.loads((tmp_path / 'first' / 'report.json').read_text())
    assert report['timestamp'] is None
    assert report['wall_seconds'] is None


def test_inexact_sweep(tmp_path):
    config = _small_time_delay(tmp_path, solver='inexact', side='right', sweep=10,
                               diagnostics=['residual-gap'])
    assert cmd_solve(config) == EXIT_OK
    sweep = pl.read_csv(tmp_path / 'sweep.csv')
    assert sweep.height == 10
    report = json.loads((tmp_path / 'report.json').read_text())
    assert len(report['report']['residual_gap']) == report['report']['iterations']


def test_interp_check_flags_low_degree(tmp_path):
    config = _small_time_delay(tmp_path, d=2, a=4.0)
    assert cmd_interp_check(config) == EXIT_ERROR
    table = pl.read_csv(tmp_path / 'interp_check.csv')
    assert table.height == 101


def test_interp_check_exact_for_polynomials(tmp_path):
    n = 3
    terms = [(as_csr(np.eye(n) * 4.0), 'one'), (as_csr(np.ones((n, n))), 'mu'),
             (as_csr(np.eye(n)), 'mu_squared')]
    manifest = save_problem(ParamProblem(terms=terms, b=np.ones(n), a=2.0, name='quadratic'), tmp_path / 'prob')
    config = build_run_config({'manifest': str(manifest), 'd': 2, 'mus': [0.5], 'out': str(tmp_path / 'out')})
    assert config.problem == 'manifest' and config.a == 2.0
    assert cmd_interp_check(config, threshold=1e-12) == EXIT_OK


def test_summarize_shifts(tmp_path):
    config = _small_time_delay(tmp_path)
    report = run_solver(config, prepare_run(config))
    per_shift, per_iteration = summarize_shifts(report)
    assert per_shift['mu'].to_list() == [-0.5, 0.1, 0.5]
    assert per_iteration.height == report.iterations * 3


def test_main_solve(tmp_path, capsys):
    code = main(['solve', '--problem', 'time_delay', '--n', '10', '--mu', '-0.5,0.5',
                 '--out', str(tmp_path), '--deterministic'])
    assert code == EXIT_OK
    assert '✓ All shifts converged' in capsys.readouterr().out


@pytest.mark.parametrize('argv', [
    ['solve', '--mu', '-0.5,0.5'],
    ['solve', '--mu=-0.5,0.5'],
    ['solve', '--mu', '-0.5,0.5', '--sigma', '-0.1'],
])
def test_negative_shift_lists_parse(argv):
    args = build_parser().parse_args(_join_flag_values(argv))
    assert args.mu == '-0.5,0.5'
    assert parse_mu_list(args.mu) == [-0.5, 0.5]


def test_main_accepts_negative_shift_list(tmp_path, capsys):
    code = main(['solve', '--problem', 'time_delay', '--n', '10', '--mu', '-0.5,-0.1',
                 '--out', str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / 'report.json').read_text())
    assert report['report']['mus'] == [-0.5, -0.1]


def test_main_reports_bad_run_file(tmp_path, capsys):
    path = tmp_path / 'bad.toml'
    path.write_text('[solver]\nmu = "linspace(1, 2, x)"\n')
    assert main(['solve', '--config', str(path)]) == EXIT_ERROR
    assert '✗' in capsys.readouterr().out


@pytest.mark.slow
def test_verify_quick_suite():
    assert cmd_verify('quick') == EXIT_OK


def test_export_script(tmp_path, monkeypatch):
    from scripts.export_problem import main as export_main
    monkeypatch.setattr('sys.argv', ['export_problem.py', 'time_delay', str(tmp_path), '--n', '5'])
    assert export_main() == 0
    assert (tmp_path / 'problem.toml').exists()
    assert read_matrix_market(tmp_path / 'C2.mtx').shape == (5, 5)
