import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from errors import ConfigError, TrueResidualUnavailable
from chebyshev.interpolation import ChebBasisParams, cheb_nodes
from linalg.sparse_ops import as_csr
from problems.evaluator import ParamProblem, eval_A_at, eval_f, sample_f_at_nodes, validate_problem
from problems.generators import gen_helmholtz_fd, gen_random_poly, gen_time_delay, laplacian_2d
from problems.loader import check_sample_nodes, load_problem_manifest, save_problem


def test_laplacian_stencil():
    L = laplacian_2d(3, 3).toarray()
    assert L.shape == (9, 9)
    assert_allclose(np.diag(L), -64.0)
    assert L[4, 3] == 16.0 and L[4, 1] == 16.0
    assert_allclose(L, L.T)


def test_helmholtz_terms():
    problem = gen_helmholtz_fd(3, 4, a=np.pi)
    assert problem.n == 12
    assert [f for _, f in problem.terms] == ['one', 'sin_sq', 'mu_squared', 'cos_sq']
    A = eval_A_at(problem, 0.0).toarray()
    x1 = np.tile(np.arange(1, 4) / 4, 4)
    x2 = np.repeat(np.arange(1, 5) / 5, 3)
    expected = laplacian_2d(3, 4).toarray() + np.diag(1.0 + np.cos(x2))
    assert_allclose(A, expected)
    assert_allclose(problem.b, np.exp(-x1 * x2))


def test_time_delay_is_reproducible():
    first = gen_time_delay(n=10, seed=3)
    second = gen_time_delay(n=10, seed=3)
    assert_allclose(first.b, second.b)
    assert_allclose(first.terms[1][0].toarray(), second.terms[1][0].toarray())
    mu = 0.7
    expected = -mu * np.eye(10) + first.terms[1][0].toarray() + np.exp(-mu) * first.terms[2][0].toarray()
    assert_allclose(eval_A_at(first, mu).toarray(), expected)
    assert np.abs(first.terms[1][0].toarray()).max() <= 0.1


@pytest.mark.parametrize('factory', [lambda: gen_time_delay(n=1), lambda: gen_helmholtz_fd(2, 5)])
def test_generator_size_guards(factory):
    with pytest.raises(ConfigError):
        factory()


def test_random_poly_shapes():
    poly, b = gen_random_poly(4, 3, a=1.5, seed=1)
    assert poly.n == 4 and poly.d == 3 and b.shape == (4,)
    assert poly.params.a == 1.5


def test_eval_f_unknown_tag():
    with pytest.raises(ConfigError):
        eval_f('cosh', 0.5)


def test_sampled_terms_have_no_true_residual():
    params = ChebBasisParams(a=1.0, d=3)
    C = as_csr(sp.identity(2))
    problem = ParamProblem(terms=[(C, np.cos(cheb_nodes(params)))], b=np.ones(2), a=1.0)
    assert not problem.evaluable
    with pytest.raises(TrueResidualUnavailable):
        eval_A_at(problem, 0.1)
    samples = sample_f_at_nodes(problem, params)
    assert_allclose(samples.terms[0][1], np.cos(cheb_nodes(params)))


def test_validate_problem_messages():
    C = as_csr(sp.identity(2))
    ok, msg = validate_problem(ParamProblem(terms=[(C, 'cosh')], b=np.ones(2), a=1.0))
    assert not ok and 'cosh' in msg
    ok, msg = validate_problem(ParamProblem(terms=[(as_csr(sp.identity(3)), 'one')], b=np.ones(2), a=1.0))
    assert not ok and 'shape' in msg
    ok, _ = validate_problem(ParamProblem(terms=[(C, 'one')], b=np.ones(2), a=1.0))
    assert ok


def test_manifest_roundtrip(tmp_path):
    problem = gen_time_delay(n=6, seed=2, a=2.0)
    manifest = save_problem(problem, tmp_path / 'td')
    loaded = load_problem_manifest(manifest)
    assert loaded.name == 'time_delay'
    assert loaded.a == 2.0
    assert [f for _, f in loaded.terms] == ['mu', 'one', 'exp_neg']
    assert_allclose(eval_A_at(loaded, 0.4).toarray(), eval_A_at(problem, 0.4).toarray(), rtol=1e-13, atol=1e-15)


def test_manifest_escapes_quotes_and_backslashes(tmp_path):
    problem = gen_time_delay(n=3, seed=0)
    problem.name = 'my "quoted" C:\\runs\\td'
    problem.descriptor = 'tab\there, newline\nthere, back\\slash "and" quote'
    loaded = load_problem_manifest(save_problem(problem, tmp_path))
    assert loaded.name == problem.name
    assert loaded.descriptor == problem.descriptor


def test_time_delay_normal_entries():
    problem = gen_time_delay(n=40, seed=5, entries='normal')
    A0 = problem.terms[1][0].toarray()
    assert problem.metadata['entries'] == 'normal'
    assert np.abs(A0).max() > 1.0
    assert abs(A0.std() - 1.0) < 0.1
    assert_allclose(gen_time_delay(n=40, seed=5, entries='normal').b, problem.b)
    with pytest.raises(ConfigError, match='gauss'):
        gen_time_delay(n=4, entries='gauss')


def test_manifest_with_sampled_term(tmp_path):
    params = ChebBasisParams(a=2.0, d=5)
    C = as_csr(np.array([[2.0, 1.0], [0.0, 3.0]]))
    problem = ParamProblem(terms=[(C, 'one'), (as_csr(sp.identity(2)), np.exp(cheb_nodes(params)))],
                           b=np.array([1.0, -1.0]), a=2.0, name='sampled')
    manifest = save_problem(problem, tmp_path, params=params)
    loaded = load_problem_manifest(manifest)
    assert not loaded.evaluable
    ok, msg = check_sample_nodes(loaded, params)
    assert ok, msg
    ok, msg = check_sample_nodes(loaded, ChebBasisParams(a=2.0, d=6))
    assert not ok and 'expected d+1 = 7' in msg
    ok, msg = check_sample_nodes(loaded, ChebBasisParams(a=1.0, d=5))
    assert not ok and 'node positions' in msg


def test_sampled_term_export_needs_params(tmp_path):
    problem = ParamProblem(terms=[(as_csr(sp.identity(2)), np.ones(3))], b=np.ones(2), a=1.0)
    with pytest.raises(ConfigError):
        save_problem(problem, tmp_path)


def test_manifest_missing_keys(tmp_path):
    path = tmp_path / 'problem.toml'
    path.write_text('a = 1.0\n')
    with pytest.raises(ConfigError, match="'rhs'"):
        load_problem_manifest(path)
    path.write_text('a = 1.0\nrhs = "b.mtx"\n[[terms]]\nmatrix = "C0.mtx"\nf = "tanh"\n')
    with pytest.raises(ConfigError, match='tanh'):
        load_problem_manifest(path)
