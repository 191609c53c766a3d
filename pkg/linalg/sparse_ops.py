"""
Sparse matrix helpers on scipy CSR matrices
"""
from typing import Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from errors import DimensionMismatchError


def as_csr(A) -> sp.csr_matrix:
    """
    Convert any matrix-like object to canonical float64 CSR.

    Duplicates are summed and column indices sorted within each row.
    """
    A = sp.csr_matrix(A, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    return A


def csr_from_triplets(rows, cols, vals, shape: Tuple[int, int]) -> sp.csr_matrix:
    """Build CSR from coordinate triplets, summing duplicate entries"""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= shape[0]):
        raise DimensionMismatchError(f"Row index out of range for shape {shape}")
    if cols.size and (cols.min() < 0 or cols.max() >= shape[1]):
        raise DimensionMismatchError(f"Column index out of range for shape {shape}")
    A = sp.coo_matrix((np.asarray(vals, dtype=np.float64), (rows, cols)), shape=shape)
    return as_csr(A)


def spmv(A: sp.spmatrix, x: np.ndarray, transpose: bool = False) -> np.ndarray:
    """
    Sparse matrix-vector product.

    Args:
        A: Sparse matrix
        x: Dense vector
        transpose: Multiply by A^T instead of A

    Returns:
        A @ x or A^T @ x
    """
    expected = A.shape[0] if transpose else A.shape[1]
    if x.shape[0] != expected:
        raise DimensionMismatchError(
            f"spmv: vector of length {x.shape[0]} for matrix of shape {A.shape}"
            f"{' (transposed)' if transpose else ''}"
        )
    if transpose:
        return A.T @ x
    return A @ x


def frobenius_norm(A: sp.spmatrix) -> float:
    return float(spla.norm(A, 'fro'))


def check_csr_invariants(A: sp.csr_matrix) -> Tuple[bool, str]:
    """
    Check row pointers, sorted column indices and absence of duplicates.

    Returns:
        Tuple of (is_valid, message)
    """
    if not sp.isspmatrix_csr(A):
        return False, "Matrix is not in CSR format"
    indptr = A.indptr
    if indptr[0] != 0 or indptr[-1] != A.nnz:
        return False, "Row pointer does not span the stored entries"
    if np.any(np.diff(indptr) < 0):
        return False, "Row pointer is not monotone"
    for row in range(A.shape[0]):
        cols = A.indices[indptr[row]:indptr[row + 1]]
        if cols.size and np.any(np.diff(cols) <= 0):
            return False, f"Row {row} has unsorted or duplicate column indices"
    return True, "OK"
