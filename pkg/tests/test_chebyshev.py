import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from errors import ConfigError, DimensionMismatchError
from chebyshev.interpolation import (
    ChebBasisParams,
    MatrixChebPoly,
    ParamMatrixSamples,
    assemble_P_at,
    cheb_basis,
    cheb_basis_matrix,
    cheb_nodes,
    evaluate_cheb_series,
    interp_error,
    interp_errors,
    matrix_poly_from_samples,
    scalar_cheb_coeffs,
)
from linalg.sparse_ops import as_csr


@pytest.mark.parametrize('a, d', [(1.0, 0), (2.0, 5), (5.0, 34)])
def test_nodes_are_interior_and_decreasing(a, d):
    nodes = cheb_nodes(ChebBasisParams(a=a, d=d))
    assert nodes.shape == (d + 1,)
    assert np.all(np.abs(nodes) < a)
    assert np.all(np.diff(nodes) < 0)


def test_nodes_are_roots_of_next_basis_function():
    params = ChebBasisParams(a=3.0, d=7)
    nodes = cheb_nodes(params)
    # tau_{d+1} vanishes at the nodes
    values = cheb_basis_matrix(nodes, ChebBasisParams(a=3.0, d=8))[:, -1]
    assert_allclose(values, 0.0, atol=1e-13)


def test_basis_values():
    params = ChebBasisParams(a=2.0, d=3)
    tau = cheb_basis(1.0, params)
    # x = 1/2: T0 = 1, T1 = 1/2, T2 = -1/2, T3 = -1
    assert_allclose(tau, [1.0, 0.5, -0.5, -1.0], atol=1e-15)
    assert_allclose(cheb_basis(2.0, params), np.ones(4))
    assert_allclose(cheb_basis(-2.0, params), [1.0, -1.0, 1.0, -1.0])


@pytest.mark.parametrize('mu', [0.0, -1.5, np.float64(0.3), np.array(0.7)])
def test_basis_of_scalar_is_flat(mu):
    params = ChebBasisParams(a=2.0, d=4)
    tau = cheb_basis(mu, params)
    assert tau.shape == (5,)
    assert_allclose(tau, cheb_basis_matrix([float(mu)], params)[0])


def test_assemble_with_identity_leading_term():
    params = ChebBasisParams(a=1.0, d=4)
    coeffs = [as_csr(np.eye(3))] + [as_csr(np.zeros((3, 3)))] * 4
    poly = MatrixChebPoly(params=params, coeffs=coeffs)
    assert_allclose(assemble_P_at(poly, 0.0).toarray(), np.eye(3))


def test_invalid_params():
    with pytest.raises(ConfigError):
        ChebBasisParams(a=0.0, d=3)
    with pytest.raises(ConfigError):
        ChebBasisParams(a=1.0, d=-1)


def test_coefficients_of_polynomial_are_exact():
    params = ChebBasisParams(a=2.0, d=6)
    true = np.array([0.3, -1.0, 0.25, 0.0, 2.0, 0.0, 0.0])
    samples = evaluate_cheb_series(true, cheb_nodes(params), params)
    assert_allclose(scalar_cheb_coeffs(samples), true, atol=1e-14)


def test_polynomial_reproduced_on_grid():
    params = ChebBasisParams(a=3.0, d=4)
    f = lambda mu: 1.0 - 2.0 * mu + 0.5 * mu ** 3 - 0.1 * mu ** 4
    coeffs = scalar_cheb_coeffs(f(cheb_nodes(params)))
    grid = np.linspace(-3, 3, 101)
    assert np.max(np.abs(evaluate_cheb_series(coeffs, grid, params) - f(grid))) <= 1e-12


def test_exp_neg_interpolation_error():
    params = ChebBasisParams(a=4.0, d=17)
    coeffs = scalar_cheb_coeffs(np.exp(-cheb_nodes(params)))
    grid = np.linspace(-4, 4, 101)
    rel = np.abs(evaluate_cheb_series(coeffs, grid, params) - np.exp(-grid)) / np.exp(-grid)
    assert rel.max() <= 1e-8


def test_coefficients_match_direct_sum(rng):
    d = 9
    params = ChebBasisParams(a=1.0, d=d)
    f = rng.standard_normal(d + 1)
    k = np.arange(d + 1)
    direct = np.array([
        (2.0 - (l == 0)) / (d + 1) * np.sum(f * np.cos(l * np.pi * (2 * k + 1) / (2 * (d + 1))))
        for l in range(d + 1)
    ])
    assert_allclose(scalar_cheb_coeffs(f), direct, atol=1e-13)


def _two_term_samples(params, n=4, seed=0):
    rng = np.random.default_rng(seed)
    C0 = as_csr(rng.standard_normal((n, n)))
    C1 = as_csr(sp.identity(n))
    nodes = cheb_nodes(params)
    return ParamMatrixSamples(terms=[(C0, np.ones_like(nodes)), (C1, np.sin(nodes))]), C0, C1


def test_matrix_poly_interpolates_at_nodes():
    params = ChebBasisParams(a=2.0, d=8)
    samples, C0, C1 = _two_term_samples(params)
    poly = matrix_poly_from_samples(samples, params)
    assert poly.d == 8 and poly.n == 4 and len(poly.coeffs) == 9
    for mu in cheb_nodes(params):
        expected = C0.toarray() + np.sin(mu) * C1.toarray()
        assert_allclose(assemble_P_at(poly, mu).toarray(), expected, atol=1e-12)


def test_matrix_poly_rejects_wrong_sample_count():
    params = ChebBasisParams(a=2.0, d=4)
    C = as_csr(np.eye(3))
    with pytest.raises(DimensionMismatchError):
        matrix_poly_from_samples(ParamMatrixSamples(terms=[(C, np.ones(4))]), params)
    with pytest.raises(DimensionMismatchError):
        matrix_poly_from_samples(ParamMatrixSamples(terms=[(C, np.ones(5)), (as_csr(np.eye(2)), np.ones(5))]),
                                 params)


def test_interp_error_decreases_with_degree():
    errors = []
    for d in (4, 8, 16):
        params = ChebBasisParams(a=2.0, d=d)
        samples, C0, C1 = _two_term_samples(params)
        poly = matrix_poly_from_samples(samples, params)
        A = lambda mu: as_csr(C0 + np.sin(mu) * C1)
        errors.append(interp_error(poly, A, np.linspace(-2, 2, 41)))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-10


def test_interp_errors_per_check_point():
    params = ChebBasisParams(a=1.0, d=3)
    samples, C0, C1 = _two_term_samples(params)
    poly = matrix_poly_from_samples(samples, params)
    points = cheb_nodes(params)
    errs = interp_errors(poly, lambda mu: as_csr(C0 + np.sin(mu) * C1), points)
    assert errs.shape == points.shape
    assert errs.max() < 1e-12


def test_poly_call_matches_assembly(small_poly):
    poly, _ = small_poly
    assert_allclose(poly(0.7).toarray(), assemble_P_at(poly, 0.7).toarray())
