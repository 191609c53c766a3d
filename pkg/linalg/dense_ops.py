"""
Small dense kernels: LU with transposed solves, Givens rotations,
smallest singular value
"""
import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as sla

from errors import DimensionMismatchError, SingularMatrixError

# Pivots with magnitude at or below this relative size count as zero
PIVOT_TOL = 1e-300


@dataclass
class DenseLU:
    """LU factors with partial pivoting, as returned by scipy.linalg.lu_factor"""
    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]


def lu_factor(A: np.ndarray) -> DenseLU:
    """
    Factor a square dense matrix.

    Raises:
        SingularMatrixError: If a pivot is exactly (numerically) zero
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"lu_factor needs a square matrix, got {A.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() <= PIVOT_TOL:
        k = int(np.argmin(pivots))
        raise SingularMatrixError(f"Zero pivot at position {k}")
    return DenseLU(lu=lu, piv=piv)


def lu_solve(factors: DenseLU, b: np.ndarray, transpose: bool = False) -> np.ndarray:
    """Solve A x = b, or A^T x = b when transpose is set"""
    if b.shape[0] != factors.n:
        raise DimensionMismatchError(
            f"lu_solve: right-hand side of length {b.shape[0]} for order {factors.n}"
        )
    return sla.lu_solve((factors.lu, factors.piv), b, trans=1 if transpose else 0)


@dataclass(frozen=True)
class GivensRotation:
    """Plane rotation [[c, s], [-s, c]] acting on two consecutive rows"""
    c: float
    s: float

    def apply(self, x: float, y: float) -> Tuple[float, float]:
        return self.c * x + self.s * y, -self.s * x + self.c * y


def givens(a: float, b: float) -> Tuple[GivensRotation, float]:
    """
    Rotation that maps (a, b) to (r, 0) with r >= 0.

    Returns:
        Tuple of (rotation, r)
    """
    r = math.hypot(a, b)
    if r == 0.0:
        return GivensRotation(1.0, 0.0), 0.0
    return GivensRotation(a / r, b / r), r


def smallest_singular_value(T: np.ndarray) -> float:
    """Smallest singular value of a small dense matrix (0 for an empty one)"""
    T = np.asarray(T, dtype=np.float64)
    if T.size == 0:
        return 0.0
    return float(sla.svdvals(T, check_finite=False).min())
