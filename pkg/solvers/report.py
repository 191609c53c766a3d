"""
Solve reports, residual evaluation and operation counters
"""
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from chebyshev.interpolation import MatrixChebPoly, assemble_P_at
from errors import TrueResidualUnavailable
from solvers.shifts import ShiftSet

TERMINATIONS = ('converged', 'maxit', 'breakdown', 'inner_failure')


@dataclass
class OperationCounter:
    prec_applies: int = 0
    prec_T_applies: int = 0
    M_applies: int = 0
    K_applies: int = 0
    tridiag_solves: int = 0
    basis_products: int = 0
    postprocess: int = 0

    def as_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


class ResidualChecker:
    """
    Relative residual ||A(mu) x - b|| / ||b||.

    Uses the true A(mu) when an evaluator is given, otherwise the
    interpolant P(mu). Assembled matrices are cached per mu.
    """

    def __init__(self, b: np.ndarray, poly: Optional[MatrixChebPoly] = None,
                 A_of_mu: Optional[Callable[[float], sp.spmatrix]] = None):
        self.b = b
        self.b_norm = float(np.linalg.norm(b))
        self.poly = poly
        self.A_of_mu = A_of_mu
        self.kind = 'true' if A_of_mu is not None else 'interpolant'
        self._cache: Dict[float, sp.spmatrix] = {}

    def matrix(self, mu: float) -> sp.spmatrix:
        if mu not in self._cache:
            if self.A_of_mu is not None:
                try:
                    self._cache[mu] = self.A_of_mu(mu)
                except TrueResidualUnavailable:
                    self.A_of_mu = None
                    self.kind = 'interpolant'
                    return self.matrix(mu)
            else:
                self._cache[mu] = assemble_P_at(self.poly, mu)
        return self._cache[mu]

    def relres(self, mu: float, x: np.ndarray) -> float:
        r = self.matrix(mu) @ x - self.b
        return float(np.linalg.norm(r)) / self.b_norm if self.b_norm > 0 else float(np.linalg.norm(r))


class IterationClock:
    """Wall time per iteration and cumulative CPU time"""

    def __init__(self):
        self.wall: List[float] = []
        self.cpu: List[float] = []
        self._cpu0 = time.process_time()
        self._t = time.perf_counter()

    def tick(self):
        now = time.perf_counter()
        self.wall.append(now - self._t)
        self.cpu.append(time.process_time() - self._cpu0)
        self._t = now


@dataclass
class SolveReport:
    """
    Outcome of a multishift solve. Per-shift arrays are in the caller's
    order of mu; histories have one row per executed iteration.
    """
    solver: str
    side: str
    sigma: float
    mus: List[float]
    tol: float
    maxit: int
    solutions: np.ndarray
    relres_recursive: np.ndarray
    relres_true: np.ndarray
    final_relres: np.ndarray
    converged: np.ndarray
    termination: str
    iterations: int
    wall_seconds: List[float]
    cpu_seconds: List[float]
    inner_solves: int
    counters: Dict[str, int]
    residual_kind: str = 'true'
    broken_shifts: List[float] = field(default_factory=list)
    message: str = ''
    seed_history: Optional[tuple] = None

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def iterations_to_tol(self) -> List[Optional[int]]:
        """
        First iteration (1-based) at which each shift met tol.

        Uses the true residual history where it was recorded every
        iteration, otherwise the recursive residual estimate.
        """
        counts = []
        for l in range(len(self.mus)):
            history = self.relres_true[:, l]
            if np.isnan(history).any():
                history = self.relres_recursive[:, l]
            hits = np.nonzero(history <= self.tol)[0]
            counts.append(int(hits[0]) + 1 if hits.size else None)
        return counts

    def solution_at(self, mu: float) -> np.ndarray:
        """Solution for one of the solved shifts"""
        matches = np.nonzero(np.asarray(self.mus) == mu)[0]
        if matches.size == 0:
            raise ValueError(f"mu={mu} is not one of the solved shifts {list(self.mus)}")
        return self.solutions[:, int(matches[0])]

    def residual_rows(self, timings: bool = True) -> List[Dict]:
        """One row per (iteration, mu)"""
        rows = []
        for i in range(self.iterations):
            for l, mu in enumerate(self.mus):
                rows.append({
                    'iteration': i + 1,
                    'mu': mu,
                    'relres_recursive': float(self.relres_recursive[i, l]),
                    'relres_true_if_available': float(self.relres_true[i, l]),
                    'cpu_seconds_cumulative': self.cpu_seconds[i] if timings else 0.0,
                })
        return rows

    def summary(self) -> Dict:
        return {
            'solver': self.solver,
            'side': self.side,
            'sigma': self.sigma,
            'mus': list(self.mus),
            'tol': self.tol,
            'maxit': self.maxit,
            'iterations': self.iterations,
            'termination': self.termination,
            'message': self.message,
            'converged': [bool(c) for c in self.converged],
            'final_relres': [float(r) for r in self.final_relres],
            'iterations_to_tol': self.iterations_to_tol(),
            'residual_kind': self.residual_kind,
            'broken_shifts': list(self.broken_shifts),
            'inner_solves': self.inner_solves,
            'counters': dict(self.counters),
        }


@dataclass
class InexactReport(SolveReport):
    epsilon: float = 0.0
    tol_policy: str = 'adaptive'
    j_budget: int = 0
    tol_history: List[float] = field(default_factory=list)
    tol_flags: List[bool] = field(default_factory=list)
    inner_residuals: List[float] = field(default_factory=list)
    inner_iterations: List[int] = field(default_factory=list)
    roundoff_limited: List[bool] = field(default_factory=list)
    delta_history: Optional[List[float]] = None
    basis: Optional[object] = None

    def solution_at(self, mu: float) -> np.ndarray:
        """Approximate x(mu) for any mu from the stored basis, else for the solved shifts"""
        if self.basis is None:
            return super().solution_at(mu)
        return self.basis.solution_at(mu)

    def summary(self) -> Dict:
        out = super().summary()
        out.update({
            'epsilon': self.epsilon,
            'tol_policy': self.tol_policy,
            'j_budget': self.j_budget,
            'inner_tolerances': [float(t) for t in self.tol_history],
            'inner_tolerance_clamped': [bool(f) for f in self.tol_flags],
            'inner_residual_norms': [float(r) for r in self.inner_residuals],
            'inner_iterations': list(self.inner_iterations),
            'inner_roundoff_limited': [bool(f) for f in self.roundoff_limited],
        })
        if self.delta_history is not None:
            out['residual_gap'] = [float(dl) for dl in self.delta_history]
        return out


def finalize_histories(shifts: ShiftSet, recursive: List[np.ndarray], true: List[np.ndarray]):
    """Stack per-iteration rows (sorted shift order) into user-ordered arrays"""
    k = len(shifts)
    rec = np.vstack(recursive) if recursive else np.empty((0, k))
    tru = np.vstack(true) if true else np.empty((0, k))
    return shifts.to_user_order(rec, axis=1), shifts.to_user_order(tru, axis=1)
