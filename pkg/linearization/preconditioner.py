"""
Shift-and-invert preconditioner (K - sigma M)^{-1} and its adjoint

(K - sigma M) Pi = L U with Pi moving block column 0 to the end. L is block
lower triangular with identity blocks on the diagonal except P(sigma) in
the last position, so each application costs one solve with P(sigma) and
O(d) block vector operations.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config import (
    DEFAULT_INNER_METHOD,
    DEFAULT_INNER_TOL,
    DENSE_LU_MAX_N,
    INNER_MAXIT_FACTOR,
)
from errors import ConfigError, DimensionMismatchError, InnerSolveError, SingularMatrixError
from chebyshev.interpolation import assemble_P_at, cheb_basis
from linalg.dense_ops import DenseLU, lu_factor, lu_solve
from linearization.companion import CompanionOperator
from linalg.inner_solvers import INNER_METHODS

logger = logging.getLogger(__name__)

INNER_MODES = ('direct', 'iterative', 'injected')


@dataclass
class InnerSpec:
    """How to apply P(sigma)^{-1}"""
    mode: str = 'direct'
    method: str = DEFAULT_INNER_METHOD
    tol: float = DEFAULT_INNER_TOL
    maxit: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in INNER_MODES:
            raise ConfigError(f"Unknown inner mode '{self.mode}', expected one of {INNER_MODES}")
        if self.method not in INNER_METHODS:
            raise ConfigError(f"Unknown inner method '{self.method}', expected one of {tuple(INNER_METHODS)}")


@dataclass
class InnerResult:
    z: np.ndarray
    residual: np.ndarray
    rel_res: float
    iterations: int
    roundoff_limited: bool = False


class InnerSolver:
    """
    Solves P(sigma) z = r and P(sigma)^T z = r.

    direct: one factorization reused for both directions.
    iterative: BiCG (or BiCGStab) to the requested tolerance.
    injected: direct solve of a perturbed right-hand side so that the
    residual norm equals the requested tolerance exactly (diagnostics).
    """

    def __init__(self, P_sigma: sp.csr_matrix, spec: InnerSpec, sigma: float):
        self.P = P_sigma
        self.spec = spec
        self.sigma = sigma
        self.n = P_sigma.shape[0]
        self.maxit = spec.maxit or INNER_MAXIT_FACTOR * self.n
        self._dense: Optional[DenseLU] = None
        self._sparse = None
        self._rng = np.random.default_rng(spec.seed)
        self._anorm: Optional[float] = None
        if spec.mode in ('direct', 'injected'):
            self._factor()

    @property
    def mode(self) -> str:
        return self.spec.mode

    def _factor(self):
        if self.n <= DENSE_LU_MAX_N:
            try:
                self._dense = lu_factor(self.P.toarray())
            except SingularMatrixError as e:
                raise SingularMatrixError(f"P(sigma) is singular at sigma={self.sigma}: {e}", sigma=self.sigma)
            return
        try:
            self._sparse = spla.splu(self.P.tocsc())
        except RuntimeError as e:
            raise SingularMatrixError(f"P(sigma) is singular at sigma={self.sigma}: {e}", sigma=self.sigma)

    def _direct(self, r: np.ndarray, transpose: bool) -> np.ndarray:
        if self._dense is not None:
            return lu_solve(self._dense, r, transpose=transpose)
        return self._sparse.solve(r, trans='T' if transpose else 'N')

    def solve(self, r: np.ndarray, tol: Optional[float] = None, atol: float = 0.0,
              transpose: bool = False) -> InnerResult:
        """
        Args:
            r: Right-hand side
            tol: Relative tolerance (iterative and injected modes)
            atol: Absolute tolerance, used when larger than tol * ||r||
            transpose: Solve with P(sigma)^T

        Returns:
            InnerResult with the explicit residual P z - r
        """
        if r.shape != (self.n,):
            raise DimensionMismatchError(f"Inner solve: right-hand side {r.shape}, expected ({self.n},)")
        tol = self.spec.tol if tol is None else tol
        P = self.P.T if transpose else self.P
        r_norm = float(np.linalg.norm(r))

        iterations = 0
        limited = False
        if self.mode == 'direct':
            z = self._direct(r, transpose)
        elif self.mode == 'injected':
            target = max(tol * r_norm, atol)
            e = self._rng.standard_normal(self.n)
            e *= target / np.linalg.norm(e)
            z = self._direct(r + e, transpose)
        else:
            if self._anorm is None:
                self._anorm = float(spla.norm(self.P))
            solver = INNER_METHODS[self.spec.method]
            z, info = solver(self.P, r, tol=tol, atol=atol, maxiter=self.maxit, transpose=transpose,
                             anorm=self._anorm)
            iterations = info['niter']
            limited = info['roundoff_limited']
            if not info['success']:
                raise InnerSolveError(
                    f"Inner {self.spec.method} stopped after {iterations} iterations at "
                    f"relative residual {info['rel_res']:.3e} (requested {tol:.3e})",
                    achieved=info['rel_res'], iterations=iterations,
                )

        residual = P @ z - r
        rel_res = float(np.linalg.norm(residual)) / r_norm if r_norm > 0 else 0.0
        return InnerResult(z=z, residual=residual, rel_res=rel_res, iterations=iterations,
                           roundoff_limited=limited)


@dataclass
class InnerResidualRecord:
    iteration: int
    transpose: bool
    requested_tol: float
    residual_norm: float
    rel_res: float
    inner_iterations: int
    residual: Optional[np.ndarray] = None
    roundoff_limited: bool = False


@dataclass
class InnerResidualLog:
    """One record per preconditioner application"""
    keep_vectors: bool = False
    records: List[InnerResidualRecord] = field(default_factory=list)

    def add(self, record: InnerResidualRecord):
        if not self.keep_vectors:
            record.residual = None
        self.records.append(record)

    def forward(self) -> List[InnerResidualRecord]:
        return [rec for rec in self.records if not rec.transpose]


class Preconditioner:
    """Block LU application of (K - sigma M)^{-1} and (K - sigma M)^{-T}"""

    def __init__(self, op: CompanionOperator, sigma: float, inner: InnerSolver):
        self.op = op
        self.sigma = float(sigma)
        self.inner = inner
        d = op.d
        self.tau = cheb_basis(self.sigma, op.poly.params)
        self.scale = 2.0 * self.sigma / op.a
        # Last block row of L, columns 0..d-2
        P = op.poly.coeffs
        weights = [P[ell] for ell in range(1, d - 2)]
        if d >= 3:
            weights.append((P[d - 2] - P[d]).tocsr())
        weights.append((P[d - 1] + self.scale * P[d]).tocsr())
        self.weights = weights
        self.log: Optional[InnerResidualLog] = None
        self.iteration = 0
        self.inner_solves = 0

    @property
    def n(self) -> int:
        return self.op.n

    @property
    def d(self) -> int:
        return self.op.d

    def _blocks(self, y: np.ndarray) -> np.ndarray:
        if y.ndim != 1 or y.shape[0] != self.op.dim:
            raise DimensionMismatchError(f"Preconditioner: vector of length {y.shape[0]}, expected {self.op.dim}")
        return y.reshape(self.d, self.n)

    def _inner(self, rhs: np.ndarray, tol: Optional[float], atol: float, transpose: bool) -> np.ndarray:
        result = self.inner.solve(rhs, tol=tol, atol=atol, transpose=transpose)
        self.inner_solves += 1
        if self.log is not None:
            self.log.add(InnerResidualRecord(
                iteration=self.iteration,
                transpose=transpose,
                requested_tol=self.inner.spec.tol if tol is None else tol,
                residual_norm=float(np.linalg.norm(result.residual)),
                rel_res=result.rel_res,
                inner_iterations=result.iterations,
                residual=result.residual,
                roundoff_limited=result.roundoff_limited,
            ))
        return result.z


def build_preconditioner(op: CompanionOperator, sigma: float, inner_spec: Optional[InnerSpec] = None) -> Preconditioner:
    """
    Assemble P(sigma) and prepare the inner solver.

    Raises:
        ConfigError: If sigma is not inside (-a, a)
        SingularMatrixError: If P(sigma) is singular (direct mode)
    """
    if not -op.a < sigma < op.a:
        raise ConfigError(f"sigma={sigma} must lie strictly inside (-{op.a}, {op.a})")
    inner_spec = inner_spec or InnerSpec()
    P_sigma = assemble_P_at(op.poly, sigma)
    inner = InnerSolver(P_sigma, inner_spec, sigma)
    logger.debug("Preconditioner built: sigma=%g, n=%d, d=%d, inner=%s", sigma, op.n, op.d, inner_spec.mode)
    return Preconditioner(op, sigma, inner)


def apply_Linv(p: Preconditioner, y: np.ndarray, tol: Optional[float] = None, atol: float = 0.0) -> np.ndarray:
    """Forward substitution with L; one inner solve on the last block"""
    Y = p._blocks(y)
    d = p.d
    out = np.empty_like(Y)
    prev2 = np.zeros(p.n)
    prev1 = np.zeros(p.n)
    for k in range(d - 1):
        out[k] = Y[k] + p.scale * prev1 - prev2 if k > 0 else Y[0]
        prev2, prev1 = prev1, out[k]
    rhs = Y[d - 1].copy()
    for j, W in enumerate(p.weights):
        rhs -= W @ out[j]
    out[d - 1] = p._inner(rhs, tol, atol, transpose=False)
    return out.reshape(-1)


def apply_Uinv(p: Preconditioner, y: np.ndarray) -> np.ndarray:
    """out_k = y_k + tau_{k+1}(sigma) y_{d-1} for k < d-1"""
    Y = p._blocks(y)
    d = p.d
    out = Y.copy()
    out[:d - 1] += np.outer(p.tau[1:d], Y[d - 1])
    return out.reshape(-1)


def apply_Uinv_T(p: Preconditioner, y: np.ndarray) -> np.ndarray:
    Y = p._blocks(y)
    d = p.d
    out = Y.copy()
    out[d - 1] += p.tau[1:d] @ Y[:d - 1]
    return out.reshape(-1)


def apply_Linv_T(p: Preconditioner, y: np.ndarray, tol: Optional[float] = None, atol: float = 0.0) -> np.ndarray:
    """Backward substitution with L^T, starting with the inner solve on the last block"""
    Y = p._blocks(y)
    d = p.d
    out = np.empty_like(Y)
    last = p._inner(Y[d - 1].copy(), tol, atol, transpose=True)
    out[d - 1] = last
    for k in range(d - 2, -1, -1):
        value = Y[k] - p.weights[k].T @ last
        if k + 1 <= d - 2:
            value += p.scale * out[k + 1]
        if k + 2 <= d - 2:
            value -= out[k + 2]
        out[k] = value
    return out.reshape(-1)


def apply_prec(p: Preconditioner, y: np.ndarray, tol: Optional[float] = None, atol: float = 0.0) -> np.ndarray:
    """(K - sigma M)^{-1} y = Pi U^{-1} L^{-1} y"""
    w = apply_Uinv(p, apply_Linv(p, y, tol, atol)).reshape(p.d, p.n)
    return np.roll(w, 1, axis=0).reshape(-1)


def apply_prec_T(p: Preconditioner, y: np.ndarray, tol: Optional[float] = None, atol: float = 0.0) -> np.ndarray:
    """(K - sigma M)^{-T} y = L^{-T} U^{-T} Pi^T y"""
    q = np.roll(p._blocks(y), -1, axis=0).reshape(-1)
    return apply_Linv_T(p, apply_Uinv_T(p, q), tol, atol)
