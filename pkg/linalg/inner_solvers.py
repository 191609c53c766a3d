"""
Iterative solvers for the inner systems P(sigma) z = r
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config import INNER_ROUNDOFF_FACTOR
from errors import DimensionMismatchError

logger = logging.getLogger(__name__)


EPS = float(np.finfo(np.float64).eps)


def roundoff_floor(anorm: float, x: np.ndarray, b_norm: float) -> float:
    """Residual norm below which rounding, not the iteration, limits a solve"""
    return INNER_ROUNDOFF_FACTOR * EPS * (anorm * float(np.linalg.norm(x)) + b_norm)


def _finish(A, b: np.ndarray, x: np.ndarray, niter: int, threshold: float, anorm: float) -> Dict:
    """Info dict from the true residual; a stop within 10x the roundoff floor counts as success"""
    b_norm = float(np.linalg.norm(b))
    res_norm = float(np.linalg.norm(b - A @ x))
    floor = roundoff_floor(anorm, x, b_norm)
    met = res_norm <= threshold * (1 + 1e-8)
    limited = not met and res_norm <= 10.0 * floor
    return {
        'niter': niter,
        'success': bool(math.isfinite(res_norm) and (met or limited or b_norm == 0.0)),
        'res_norm': res_norm,
        'rel_res': res_norm / b_norm if b_norm > 0 else res_norm,
        'roundoff_limited': limited,
    }


def bicg(A: sp.spmatrix, b: np.ndarray, x0: Optional[np.ndarray] = None,
         tol: float = 1e-6, atol: float = 0.0, maxiter: int = 1000,
         transpose: bool = False, anorm: Optional[float] = None) -> Tuple[np.ndarray, Dict]:
    """
    Biconjugate gradient method for A x = b (or A^T x = b).

    Stops when ||b - A x|| <= max(tol * ||b||, atol), or once the residual
    reaches the roundoff floor when the request lies below it. The shadow
    system uses A^T products applied directly from the CSR storage.

    Args:
        A: Square sparse matrix
        b: Right-hand side
        x0: Initial guess (zero if omitted)
        tol: Relative tolerance
        atol: Absolute tolerance
        maxiter: Maximum number of iterations
        transpose: Solve with A^T instead of A
        anorm: ||A||_F, computed when omitted

    Returns:
        x and an info dict with 'niter', 'success', 'res_norm', 'rel_res',
        'roundoff_limited'
    """
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise DimensionMismatchError(f"bicg: matrix {A.shape} with right-hand side {b.shape}")
    anorm = float(spla.norm(A)) if anorm is None else anorm

    op, op_t = (A.T, A) if transpose else (A, A.T)

    x = np.zeros(n) if x0 is None else x0.astype(np.float64, copy=True)
    r = b - op @ x
    p = r.copy()
    rs = r.copy()
    ps = p.copy()

    b_norm = float(np.linalg.norm(b))
    threshold = max(tol * b_norm, atol)
    res_norm = float(np.linalg.norm(r))

    m = 0
    for m in range(1, maxiter + 1):
        if res_norm <= max(threshold, roundoff_floor(anorm, x, b_norm)):
            m -= 1
            break

        v = op @ p
        vs = op_t @ ps

        c = rs @ r
        denom = ps @ v
        if c == 0.0 or denom == 0.0:
            logger.debug("bicg: breakdown at iteration %d (res %.3e)", m, res_norm)
            m -= 1
            break
        alpha = c / denom

        x += alpha * p
        r -= alpha * v
        rs -= alpha * vs

        beta = (rs @ r) / c
        p = r + beta * p
        ps = rs + beta * ps

        res_norm = float(np.linalg.norm(r))

    # Recursive residuals drift; report the true one
    info = _finish(op, b, x, m, threshold, anorm)
    if info['roundoff_limited']:
        logger.debug("bicg: stopped at the roundoff floor, rel res %.3e (requested %.3e)", info['rel_res'], tol)
    return x, info


def bicgstab(A: sp.spmatrix, b: np.ndarray, x0: Optional[np.ndarray] = None,
             tol: float = 1e-6, atol: float = 0.0, maxiter: int = 1000,
             transpose: bool = False, anorm: Optional[float] = None) -> Tuple[np.ndarray, Dict]:
    """BiCGStab from scipy with the same calling convention and info dict as bicg"""
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise DimensionMismatchError(f"bicgstab: matrix {A.shape} with right-hand side {b.shape}")
    anorm = float(spla.norm(A)) if anorm is None else anorm

    op = A.T.tocsr() if transpose else A
    counter = {'niter': 0}

    def _count(_):
        counter['niter'] += 1

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n), {'niter': 0, 'success': True, 'res_norm': 0.0, 'rel_res': 0.0,
                             'roundoff_limited': False}

    x, _ = spla.bicgstab(op, b, x0=x0, rtol=tol, atol=atol, maxiter=maxiter, callback=_count)
    return x, _finish(op, b, x, counter['niter'], max(tol * b_norm, atol), anorm)


INNER_METHODS = {
    'bicg': bicg,
    'bicgstab': bicgstab,
}
