"""
Matrix-free companion pencil (K, M) of a Chebyshev matrix polynomial

With u = (u_0, ..., u_{d-1}) and u_l = tau_l(mu) x, the system
P(mu) x = b becomes (K - mu M) u = b_tilde where

    K = [ 0  I                                   ]
        [ I  0  I                                ]
        [    .  .  .                             ]
        [       I  0  I                          ]
        [ P_0 ... P_{d-3} (-P_d + P_{d-2}) P_{d-1} ]

    M = (1/a) blockdiag(I, 2I, ..., 2I, -2 P_d)

and b_tilde = (0, ..., 0, b).
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp

from config import DENSE_ORACLE_MAX_DIM
from errors import ConfigError, DimensionMismatchError, SizeGuardError
from chebyshev.interpolation import MatrixChebPoly, cheb_basis


@dataclass(frozen=True)
class CompanionOperator:
    """K and M stored implicitly through the coefficients of P"""
    poly: MatrixChebPoly
    last_row: Tuple[sp.csr_matrix, ...]

    @property
    def n(self) -> int:
        return self.poly.n

    @property
    def d(self) -> int:
        """Number of blocks (equals the polynomial degree)"""
        return self.poly.d

    @property
    def dim(self) -> int:
        return self.poly.d * self.poly.n

    @property
    def a(self) -> float:
        return self.poly.params.a

    @property
    def P_d(self) -> sp.csr_matrix:
        return self.poly.coeffs[-1]


def build_companion(poly: MatrixChebPoly) -> CompanionOperator:
    """
    Build the companion operator for P(mu) of degree d >= 2.

    Raises:
        ConfigError: If d < 2
    """
    d = poly.d
    if d < 2:
        raise ConfigError(f"Companion linearization needs degree d >= 2, got d={d}")
    P = poly.coeffs
    last_row: List[sp.csr_matrix] = [P[ell] for ell in range(d - 2)]
    last_row.append((P[d - 2] - P[d]).tocsr())
    last_row.append(P[d - 1])
    return CompanionOperator(poly=poly, last_row=tuple(last_row))


def _blocks(op: CompanionOperator, v: np.ndarray, name: str) -> np.ndarray:
    if v.ndim != 1 or v.shape[0] != op.dim:
        raise DimensionMismatchError(f"{name}: vector of length {v.shape[0]}, expected d*n = {op.dim}")
    return v.reshape(op.d, op.n)


def apply_K(op: CompanionOperator, v: np.ndarray, transpose: bool = False) -> np.ndarray:
    """K v or K^T v"""
    V = _blocks(op, v, 'apply_K')
    d = op.d
    out = np.zeros_like(V)
    if not transpose:
        out[0] = V[1]
        for k in range(1, d - 1):
            out[k] = V[k - 1] + V[k + 1]
        for ell, block in enumerate(op.last_row):
            out[d - 1] += block @ V[ell]
    else:
        out[1] += V[0]
        for k in range(1, d - 1):
            out[k - 1] += V[k]
            out[k + 1] += V[k]
        for ell, block in enumerate(op.last_row):
            out[ell] += block.T @ V[d - 1]
    return out.reshape(-1)


def apply_M(op: CompanionOperator, v: np.ndarray, transpose: bool = False) -> np.ndarray:
    """M v or M^T v"""
    V = _blocks(op, v, 'apply_M')
    d = op.d
    a = op.a
    out = np.empty_like(V)
    out[0] = V[0] / a
    out[1:d - 1] = (2.0 / a) * V[1:d - 1]
    P_d = op.P_d.T if transpose else op.P_d
    out[d - 1] = (-2.0 / a) * (P_d @ V[d - 1])
    return out.reshape(-1)


def build_btilde(b: np.ndarray, d: int) -> np.ndarray:
    """(0, ..., 0, b) with d blocks"""
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros(d * b.shape[0])
    out[(d - 1) * b.shape[0]:] = b
    return out


def extract_x(u: np.ndarray, n: int) -> np.ndarray:
    """Block 0 of u, which is x since tau_0 = 1"""
    if u.shape[0] % n != 0:
        raise DimensionMismatchError(f"extract_x: length {u.shape[0]} is not a multiple of n={n}")
    return u[:n].copy()


def structured_vector(x: np.ndarray, mu: float, op: CompanionOperator) -> np.ndarray:
    """(tau_0(mu) x, ..., tau_{d-1}(mu) x)"""
    tau = cheb_basis(mu, op.poly.params)[:op.d]
    return np.outer(tau, x).reshape(-1)


def assemble_sparse(op: CompanionOperator) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    d, n, a = op.d, op.n, op.a
    I = sp.identity(n, format='csr')
    K_blocks = [[None] * d for _ in range(d)]
    K_blocks[0][1] = I
    for k in range(1, d - 1):
        K_blocks[k][k - 1] = I
        K_blocks[k][k + 1] = I
    for ell, block in enumerate(op.last_row):
        K_blocks[d - 1][ell] = block
    K = sp.bmat(K_blocks, format='csr')

    diag = [I / a] + [2.0 * I / a for _ in range(d - 2)] + [(-2.0 / a) * op.P_d]
    M = sp.block_diag(diag, format='csr')
    return K, M


def assemble_dense(op: CompanionOperator, max_dim: int = DENSE_ORACLE_MAX_DIM) -> Tuple[np.ndarray, np.ndarray]:
    """
    Dense K and M for small test problems.

    Raises:
        SizeGuardError: If d*n exceeds max_dim
    """
    if op.dim > max_dim:
        raise SizeGuardError(f"Dense companion of dimension {op.dim} exceeds the limit {max_dim}")
    K, M = assemble_sparse(op)
    return K.toarray(), M.toarray()
