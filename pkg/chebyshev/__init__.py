"""
Chebyshev interpolation on [-a, a]
"""
from chebyshev.interpolation import (
    ChebBasisParams,
    ParamMatrixSamples,
    MatrixChebPoly,
    cheb_nodes,
    cheb_basis,
    cheb_basis_matrix,
    scalar_cheb_coeffs,
    evaluate_cheb_series,
    matrix_poly_from_samples,
    assemble_P_at,
    interp_errors,
    interp_error,
)

__all__ = [
    'ChebBasisParams',
    'ParamMatrixSamples',
    'MatrixChebPoly',
    'cheb_nodes',
    'cheb_basis',
    'cheb_basis_matrix',
    'scalar_cheb_coeffs',
    'evaluate_cheb_series',
    'matrix_poly_from_samples',
    'assemble_P_at',
    'interp_errors',
    'interp_error',
]
