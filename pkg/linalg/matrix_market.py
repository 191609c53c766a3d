"""
Matrix Market (.mtx) reading and writing
"""
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse as sp

from errors import MatrixMarketParseError
from linalg.sparse_ops import as_csr, csr_from_triplets

SUPPORTED_FIELDS = ('real', 'integer')
SUPPORTED_SYMMETRY = ('general', 'symmetric')


def _read_header(path: str, lines: List[str]) -> Tuple[str, str, str]:
    if not lines:
        raise MatrixMarketParseError("Empty file", path, 1)
    tokens = lines[0].strip().split()
    if len(tokens) != 5 or tokens[0].lower() != '%%matrixmarket' or tokens[1].lower() != 'matrix':
        raise MatrixMarketParseError(f"Invalid header '{lines[0].strip()}'", path, 1)
    fmt, field, symmetry = (t.lower() for t in tokens[2:])
    if fmt not in ('coordinate', 'array'):
        raise MatrixMarketParseError(f"Unsupported format '{fmt}'", path, 1)
    if field not in SUPPORTED_FIELDS:
        raise MatrixMarketParseError(f"Unsupported field '{field}'", path, 1)
    if symmetry not in SUPPORTED_SYMMETRY:
        raise MatrixMarketParseError(f"Unsupported symmetry '{symmetry}'", path, 1)
    return fmt, field, symmetry


def _data_lines(lines: List[str]):
    """Yield (line_number, tokens) for every non-comment, non-blank line after the header"""
    for number, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith('%'):
            continue
        yield number, stripped.split()


def _parse_ints(path: str, number: int, tokens: List[str], count: int) -> List[int]:
    if len(tokens) != count:
        raise MatrixMarketParseError(f"Expected {count} integers, got {len(tokens)}", path, number)
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise MatrixMarketParseError(f"Non-integer value in '{' '.join(tokens)}'", path, number)


def read_matrix_market(path: Union[str, Path]) -> sp.csr_matrix:
    """
    Read a Matrix Market file (coordinate or dense array) into canonical CSR.

    Symmetric storage is expanded to full storage and duplicate entries
    are summed. Explicit zeros of an array file are dropped.

    Args:
        path: File path

    Returns:
        CSR matrix

    Raises:
        MatrixMarketParseError: On malformed header, size line or entries
    """
    path = str(path)
    with open(path, 'r') as f:
        lines = f.readlines()

    fmt, _, symmetry = _read_header(path, lines)
    if fmt == 'array':
        return as_csr(_read_array(path, lines, symmetry))

    entries = _data_lines(lines)
    try:
        number, tokens = next(entries)
    except StopIteration:
        raise MatrixMarketParseError("Missing size line", path, len(lines) + 1)
    nrows, ncols, nnz = _parse_ints(path, number, tokens, 3)
    if nrows <= 0 or ncols <= 0 or nnz < 0:
        raise MatrixMarketParseError(f"Invalid dimensions {nrows} {ncols} {nnz}", path, number)
    if symmetry == 'symmetric' and nrows != ncols:
        raise MatrixMarketParseError("Symmetric matrix must be square", path, number)

    rows, cols, vals = [], [], []
    count = 0
    for number, tokens in entries:
        if len(tokens) != 3:
            raise MatrixMarketParseError(f"Expected 'row col value', got '{' '.join(tokens)}'", path, number)
        i, j = _parse_ints(path, number, tokens[:2], 2)
        try:
            v = float(tokens[2])
        except ValueError:
            raise MatrixMarketParseError(f"Invalid value '{tokens[2]}'", path, number)
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketParseError(f"Index ({i}, {j}) outside {nrows}x{ncols}", path, number)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if symmetry == 'symmetric' and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
        count += 1

    if count != nnz:
        raise MatrixMarketParseError(f"Header announces {nnz} entries, found {count}", path, len(lines))

    return csr_from_triplets(rows, cols, vals, (nrows, ncols))


def _read_array(path: str, lines: List[str], symmetry: str) -> np.ndarray:
    """Dense column-major body of an array file; symmetric files store the lower triangle"""
    entries = _data_lines(lines)
    try:
        number, tokens = next(entries)
    except StopIteration:
        raise MatrixMarketParseError("Missing size line", path, len(lines) + 1)
    nrows, ncols = _parse_ints(path, number, tokens, 2)
    if nrows <= 0 or ncols <= 0:
        raise MatrixMarketParseError(f"Invalid dimensions {nrows} {ncols}", path, number)
    if symmetry == 'symmetric' and nrows != ncols:
        raise MatrixMarketParseError("Symmetric matrix must be square", path, number)
    values = []
    for number, tokens in entries:
        if len(tokens) != 1:
            raise MatrixMarketParseError("Expected one value per line", path, number)
        try:
            values.append(float(tokens[0]))
        except ValueError:
            raise MatrixMarketParseError(f"Invalid value '{tokens[0]}'", path, number)

    if symmetry == 'symmetric':
        expected = nrows * (nrows + 1) // 2
        if len(values) != expected:
            raise MatrixMarketParseError(f"Header announces {expected} values, found {len(values)}",
                                         path, len(lines))
        A = np.zeros((nrows, ncols))
        cols, rows = np.triu_indices(nrows)
        A[rows, cols] = values
        return A + np.tril(A, -1).T

    if len(values) != nrows * ncols:
        raise MatrixMarketParseError(f"Header announces {nrows * ncols} values, found {len(values)}",
                                     path, len(lines))
    return np.asarray(values, dtype=np.float64).reshape((nrows, ncols), order='F')


def read_vector_market(path: Union[str, Path]) -> np.ndarray:
    """
    Read a one-column Matrix Market file (array or coordinate) as a dense vector.
    """
    path = str(path)
    with open(path, 'r') as f:
        lines = f.readlines()
    fmt, _, symmetry = _read_header(path, lines)

    if fmt == 'coordinate':
        A = read_matrix_market(path).toarray()
    else:
        A = _read_array(path, lines, symmetry)
    if A.shape[1] != 1:
        raise MatrixMarketParseError(f"Expected one column, found {A.shape[1]}", path, 2)
    return A.ravel()


def write_matrix_market(path: Union[str, Path], A, comment: str = '') -> None:
    """Write a sparse matrix (coordinate) or a dense array (array format)"""
    if sp.issparse(A):
        A = as_csr(A)
    else:
        A = np.asarray(A, dtype=np.float64)
        if A.ndim == 1:
            A = A.reshape(-1, 1)
    scipy.io.mmwrite(str(path), A, comment=comment, precision=17)
