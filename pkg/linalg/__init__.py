"""
Sparse and dense linear algebra kernels
"""
from linalg.sparse_ops import as_csr, csr_from_triplets, spmv, frobenius_norm, check_csr_invariants
from linalg.dense_ops import DenseLU, GivensRotation, lu_factor, lu_solve, givens, smallest_singular_value
from linalg.matrix_market import read_matrix_market, read_vector_market, write_matrix_market
from linalg.inner_solvers import INNER_METHODS, bicg, bicgstab

__all__ = [
    'as_csr',
    'csr_from_triplets',
    'spmv',
    'frobenius_norm',
    'check_csr_invariants',
    'DenseLU',
    'GivensRotation',
    'lu_factor',
    'lu_solve',
    'givens',
    'smallest_singular_value',
    'read_matrix_market',
    'read_vector_market',
    'write_matrix_market',
    'INNER_METHODS',
    'bicg',
    'bicgstab',
]
