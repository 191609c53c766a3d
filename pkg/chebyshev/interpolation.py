"""
Chebyshev interpolation of matrix-valued functions on [-a, a]

A(mu) = sum_i C_i f_i(mu) is replaced by P(mu) = sum_l P_l tau_l(mu), where
tau_l(mu) = T_l(mu / a) and P_l = sum_i c_{i,l} C_i with c_{i,.} the
Chebyshev coefficients of f_i.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
import scipy.fft
import scipy.sparse as sp
from numpy.polynomial import chebyshev as npcheb

from errors import ConfigError, DimensionMismatchError
from linalg.sparse_ops import as_csr, frobenius_norm


@dataclass(frozen=True)
class ChebBasisParams:
    """Half-width a of [-a, a] and truncation degree d"""
    a: float
    d: int

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a <= 0:
            raise ConfigError(f"Interval half-width must be positive, got a={self.a}")
        if int(self.d) != self.d or self.d < 0:
            raise ConfigError(f"Degree must be a non-negative integer, got d={self.d}")


@dataclass
class ParamMatrixSamples:
    """Terms (C_i, f_i sampled at the d+1 Chebyshev nodes)"""
    terms: List[Tuple[sp.csr_matrix, np.ndarray]] = field(default_factory=list)


@dataclass
class MatrixChebPoly:
    """P(mu) = P_0 tau_0(mu) + ... + P_d tau_d(mu)"""
    params: ChebBasisParams
    coeffs: List[sp.csr_matrix]

    @property
    def n(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def d(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, mu: float) -> sp.csr_matrix:
        return assemble_P_at(self, mu)


def cheb_nodes(params: ChebBasisParams) -> np.ndarray:
    """
    First-kind Chebyshev points a*cos(pi(2k+1)/(2(d+1))), k = 0..d.

    Returned in decreasing order, all strictly inside (-a, a).
    """
    m = params.d + 1
    k = np.arange(m)
    return params.a * np.cos(np.pi * (2 * k + 1) / (2 * m))


def cheb_basis(mu: float, params: ChebBasisParams) -> np.ndarray:
    """(tau_0(mu), ..., tau_d(mu)) for a scalar mu, shape (d+1,)"""
    return npcheb.chebvander(float(mu) / params.a, params.d)[0]


def cheb_basis_matrix(mus: Sequence[float], params: ChebBasisParams) -> np.ndarray:
    """Rows are cheb_basis(mu) for each mu"""
    return npcheb.chebvander(np.asarray(mus, dtype=np.float64) / params.a, params.d)


def scalar_cheb_coeffs(samples: Sequence[float]) -> np.ndarray:
    """
    Chebyshev coefficients of the interpolant through values at cheb_nodes.

    c_l = (2 - delta_{l0}) / (d+1) * sum_k f_k cos(l pi (2k+1) / (2(d+1))),
    which is a type-II DCT of the samples.

    Args:
        samples: d+1 values ordered like cheb_nodes

    Returns:
        d+1 coefficients
    """
    f = np.asarray(samples, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise DimensionMismatchError(f"Expected a non-empty vector of samples, got shape {f.shape}")
    c = scipy.fft.dct(f, type=2) / f.size
    c[0] *= 0.5
    return c


def evaluate_cheb_series(coeffs: Sequence[float], mu, params: ChebBasisParams):
    """Scalar series sum_l c_l tau_l(mu)"""
    return npcheb.chebval(np.asarray(mu, dtype=np.float64) / params.a, coeffs)


def matrix_poly_from_samples(samples: ParamMatrixSamples, params: ChebBasisParams) -> MatrixChebPoly:
    """
    Interpolate A(mu) = sum_i C_i f_i(mu) at the d+1 nodes.

    Args:
        samples: Terms with f_i values at cheb_nodes(params)
        params: Interval and degree

    Returns:
        Matrix polynomial with d+1 CSR coefficients
    """
    if not samples.terms:
        raise DimensionMismatchError("At least one term is required")

    n = samples.terms[0][0].shape[0]
    coeff_rows = []
    matrices = []
    for idx, (C, f_samples) in enumerate(samples.terms):
        if C.shape != (n, n):
            raise DimensionMismatchError(f"Term {idx}: matrix of shape {C.shape}, expected ({n}, {n})")
        f_samples = np.asarray(f_samples, dtype=np.float64)
        if f_samples.shape != (params.d + 1,):
            raise DimensionMismatchError(
                f"Term {idx}: {f_samples.size} samples, expected d+1 = {params.d + 1}"
            )
        coeff_rows.append(scalar_cheb_coeffs(f_samples))
        matrices.append(as_csr(C))

    coeffs = []
    for ell in range(params.d + 1):
        P = sp.csr_matrix((n, n), dtype=np.float64)
        for c_row, C in zip(coeff_rows, matrices):
            P = P + c_row[ell] * C
        coeffs.append(as_csr(P))

    return MatrixChebPoly(params=params, coeffs=coeffs)


def assemble_P_at(poly: MatrixChebPoly, sigma: float) -> sp.csr_matrix:
    """P(sigma) = sum_l tau_l(sigma) P_l as one CSR matrix"""
    tau = cheb_basis(sigma, poly.params)
    P = sp.csr_matrix(poly.coeffs[0].shape, dtype=np.float64)
    for t, P_ell in zip(tau, poly.coeffs):
        P = P + t * P_ell
    return as_csr(P)


def interp_errors(poly: MatrixChebPoly,
                  A_evaluator: Callable[[float], sp.spmatrix],
                  probe_mus: Sequence[float]) -> np.ndarray:
    """Relative Frobenius error ||P(mu) - A(mu)|| / ||A(mu)|| at each probe"""
    errors = np.empty(len(probe_mus))
    for idx, mu in enumerate(probe_mus):
        A = as_csr(A_evaluator(float(mu)))
        ref = frobenius_norm(A)
        diff = frobenius_norm(assemble_P_at(poly, float(mu)) - A)
        errors[idx] = diff / ref if ref > 0 else diff
    return errors


def interp_error(poly: MatrixChebPoly,
                 A_evaluator: Callable[[float], sp.spmatrix],
                 probe_mus: Sequence[float]) -> float:
    """Maximum of interp_errors over the probes"""
    if len(probe_mus) == 0:
        return 0.0
    return float(interp_errors(poly, A_evaluator, probe_mus).max())
