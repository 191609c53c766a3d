"""
Inexact preconditioned multishift BiCG

A two-sided Lanczos process on M (K - sigma M)^{-1}, where each
application of the preconditioner may be inexact with its own
tolerance. The preconditioned vectors z_i are kept so that

    M Z_j = V_j T_j + beta_j v_{j+1} e_j^T

holds for the inexact process, and every shift is extracted from the
small system (I + (-mu + sigma) T_j) y = beta e_1 with u = Z_j y.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla

from config import (
    BREAKDOWN_TOL,
    DEFAULT_EPSILON,
    DEFAULT_INNER_TOL,
    DEFAULT_MAXIT,
    DEFAULT_TOL,
    FIRST_INNER_TOL,
    INNER_TOL_CEILING,
    INNER_TOL_FLOOR,
    THEOREM_SIGMA_REFRESH,
)
from errors import (
    ConfigError,
    InnerSolveError,
    LanczosBreakdownError,
    SingularShiftedTridiagonalError,
)
from linalg.dense_ops import givens, smallest_singular_value
from linearization.companion import CompanionOperator, apply_K, apply_M, build_btilde
from linearization.preconditioner import (
    InnerResidualLog,
    Preconditioner,
    apply_prec,
    apply_prec_T,
)
from solvers.report import (
    InexactReport,
    IterationClock,
    OperationCounter,
    ResidualChecker,
    finalize_histories,
)
from solvers.shifts import ColumnStore, ShiftSet

logger = logging.getLogger(__name__)

TOL_POLICIES = ('adaptive', 'theorem', 'fixed')


class InexactLanczosState:
    """
    Bases and tridiagonal entries of the inexact two-sided Lanczos process.

    alpha[i], beta[i], gamma[i] hold the 1-based quantities alpha_{i+1},
    beta_{i+1}, gamma_{i+1}; beta0 and gamma0 start the recurrence.
    """

    def __init__(self, b_tilde: np.ndarray, c_tilde: np.ndarray, keep_bases: bool = False):
        dim = b_tilde.shape[0]
        self.dim = dim
        self.r_hat = b_tilde.copy()
        self.s_hat = c_tilde.copy()
        self.beta0 = float(np.linalg.norm(b_tilde))
        self.gamma0 = float(c_tilde @ b_tilde) / self.beta0
        self.v_prev = np.zeros(dim)
        self.w_prev = np.zeros(dim)
        self.Z = ColumnStore(dim)
        self.V = ColumnStore(dim) if keep_bases else None
        self.W = ColumnStore(dim) if keep_bases else None
        self.alpha: List[float] = []
        self.beta: List[float] = []
        self.gamma: List[float] = []
        self.last_v: Optional[np.ndarray] = None
        self.last_w: Optional[np.ndarray] = None

    @property
    def j(self) -> int:
        return len(self.alpha)

    @property
    def beta_prev(self) -> float:
        return self.beta[-1] if self.beta else self.beta0

    @property
    def gamma_prev(self) -> float:
        return self.gamma[-1] if self.gamma else self.gamma0

    def T_hat(self, j: Optional[int] = None) -> np.ndarray:
        """Dense j x j tridiagonal matrix"""
        j = self.j if j is None else j
        T = np.diag(self.alpha[:j])
        if j > 1:
            T += np.diag(self.beta[:j - 1], -1) + np.diag(self.gamma[:j - 1], 1)
        return T

    def next_v(self) -> np.ndarray:
        """v_{j+1} = r_hat_j / beta_j"""
        return self.r_hat / self.beta_prev


def lanczos_step_inexact(state: InexactLanczosState, op: CompanionOperator, prec: Preconditioner,
                         tol_i: Optional[float], atol_i: float = 0.0,
                         counter: Optional[OperationCounter] = None) -> None:
    """
    One step of the inexact two-sided Lanczos process.

    Raises:
        LanczosBreakdownError: If s_hat_i^T r_hat_i vanishes (alpha_i and
            beta_i are stored before raising, so T_i is still usable)
    """
    i = state.j + 1
    v = state.r_hat / state.beta_prev
    w = state.s_hat / state.gamma_prev

    z = apply_prec(prec, v, tol_i, atol_i)
    x_hat = apply_prec_T(prec, apply_M(op, w, transpose=True), tol_i, atol_i)
    Mz = apply_M(op, z)
    if counter is not None:
        counter.prec_applies += 1
        counter.prec_T_applies += 1
        counter.M_applies += 2

    alpha = float(w @ Mz)
    r_hat = Mz - alpha * v - state.gamma_prev * state.v_prev
    s_hat = x_hat - alpha * w - state.beta_prev * state.w_prev
    beta = float(np.linalg.norm(r_hat))

    state.Z.append(z)
    if state.V is not None:
        state.V.append(v)
        state.W.append(w)
    state.alpha.append(alpha)
    state.beta.append(beta)
    state.v_prev, state.w_prev = v, w
    state.last_v, state.last_w = v, w
    state.r_hat, state.s_hat = r_hat, s_hat

    if beta == 0.0:
        # Invariant subspace: T_i already yields the exact solution
        state.gamma.append(0.0)
        return
    sr = float(s_hat @ r_hat)
    if abs(sr) <= BREAKDOWN_TOL * np.linalg.norm(s_hat) * beta:
        raise LanczosBreakdownError(f"s_hat^T r_hat vanished at iteration {i}", iteration=i)
    state.gamma.append(sr / beta)


@dataclass
class ShiftedTridiagSolve:
    """Solution of (I + (-mu + sigma) T) y = beta e_1 by a Givens QR sweep"""
    mu: float
    y: np.ndarray
    deltas: np.ndarray
    cosines: np.ndarray
    sines: np.ndarray
    r_diag: np.ndarray
    T_shifted: np.ndarray
    _sigma_min: Optional[float] = None

    def sigma_min(self) -> float:
        if self._sigma_min is None:
            self._sigma_min = smallest_singular_value(self.T_shifted)
        return self._sigma_min

    def exact_residual_norm(self, beta_next: float, sigma: float) -> float:
        """||r_j^ex|| = |(-mu + sigma) beta_j| |(y_j)_j| (v_{j+1} has unit norm)"""
        return abs((-self.mu + sigma) * beta_next) * abs(self.y[-1])


def shifted_tridiag_solve(T_hat: np.ndarray, mu: float, sigma: float, beta: float) -> ShiftedTridiagSolve:
    """
    Args:
        T_hat: j x j tridiagonal matrix
        mu: Shift
        sigma: Target parameter of the preconditioner
        beta: ||b_tilde||

    Returns:
        y, Delta_i = beta |s_1 ... s_{i-1}|, rotations and the diagonal
        entries r_ii of the leading i x i triangular factors

    Raises:
        SingularShiftedTridiagonalError: If a diagonal entry of R vanishes
    """
    j = T_hat.shape[0]
    T = np.eye(j) + (-mu + sigma) * T_hat
    R = T.copy()
    g = np.zeros(j)
    g[0] = beta
    cosines = np.ones(max(j - 1, 0))
    sines = np.zeros(max(j - 1, 0))
    r_diag = np.empty(j)
    deltas = np.empty(j)
    deltas[0] = beta

    for k in range(j - 1):
        r_diag[k] = R[k, k]
        rot, _ = givens(R[k, k], R[k + 1, k])
        cols = slice(k, min(k + 3, j))
        top = R[k, cols].copy()
        bottom = R[k + 1, cols].copy()
        R[k, cols] = rot.c * top + rot.s * bottom
        R[k + 1, cols] = -rot.s * top + rot.c * bottom
        R[k + 1, k] = 0.0
        g[k], g[k + 1] = rot.apply(g[k], g[k + 1])
        cosines[k], sines[k] = rot.c, rot.s
        deltas[k + 1] = deltas[k] * abs(rot.s)
    r_diag[j - 1] = R[j - 1, j - 1]

    diag = np.abs(np.diag(R))
    if np.any(diag <= np.finfo(float).tiny):
        raise SingularShiftedTridiagonalError(
            f"Shifted tridiagonal is singular for mu={mu} (j={j})", mu=mu)
    y = sla.solve_triangular(R, g, lower=False, check_finite=False)
    return ShiftedTridiagSolve(mu=mu, y=y, deltas=deltas, cosines=cosines, sines=sines,
                               r_diag=r_diag, T_shifted=T)


def next_delta(prev: ShiftedTridiagSolve, beta_prev: float, sigma: float) -> float:
    """
    Delta_i from the solve of size i-1 and beta_{i-1}, before T_i exists
    """
    t = (-prev.mu + sigma) * beta_prev
    r = math.hypot(prev.r_diag[-1], t)
    if r == 0.0:
        return 0.0
    return prev.deltas[-1] * abs(t) / r


def adaptive_tol(epsilon: float, prev_y_last_component: float) -> Tuple[float, bool]:
    """
    tol_i = epsilon / |(y_{i-1}(mu*))_{i-1}| clamped to [1e-14, 0.5].

    Returns:
        Tuple of (tolerance, flag) where flag marks a vanished component
    """
    component = abs(prev_y_last_component)
    if component == 0.0 or not math.isfinite(component):
        return INNER_TOL_CEILING, True
    tol = epsilon / component
    return min(max(tol, INNER_TOL_FLOOR), INNER_TOL_CEILING), False


def theorem_bound(epsilon: float, j_budget: int, sigma_min_Tj: float, Delta_i: float) -> float:
    """(1/j) (sigma_min(T_j) / Delta_i) epsilon"""
    if Delta_i <= 0.0:
        return math.inf
    return sigma_min_Tj * epsilon / (j_budget * Delta_i)


@dataclass
class ResidualGap:
    r_in_norm: float
    r_ex_norm: float
    delta: float
    delta_logged: float
    identity_error: float


def residual_gap(state: InexactLanczosState, op: CompanionOperator, b_tilde: np.ndarray,
                 mu: float, sigma: float, y: np.ndarray, u_hat: np.ndarray,
                 log: Optional[InnerResidualLog]) -> ResidualGap:
    """
    Compare the explicit residual b_tilde - (K - mu M) u_hat with the
    residual of an exact process, (mu - sigma) beta_j (e_j^T y) v_{j+1}.

    The gap equals ||P_j y|| with P_j the logged inner residual vectors.
    """
    if log is None or not log.keep_vectors:
        raise ConfigError("residual_gap needs logged inner residual vectors (diagnostics mode)")
    j = len(y)
    r_in = b_tilde - (apply_K(op, u_hat) - mu * apply_M(op, u_hat))
    r_ex = (mu - sigma) * state.beta[j - 1] * y[-1] * (state.r_hat / state.beta[j - 1])

    forward = log.forward()[:j]
    if len(forward) != j:
        raise ConfigError(f"Inner residual log holds {len(forward)} records, expected {j}")
    Py = np.zeros(op.dim)
    last = Py[(op.d - 1) * op.n:]
    for coef, rec in zip(y, forward):
        last += coef * rec.residual

    gap = r_in - r_ex
    return ResidualGap(
        r_in_norm=float(np.linalg.norm(r_in)),
        r_ex_norm=float(np.linalg.norm(r_ex)),
        delta=float(np.linalg.norm(gap)),
        delta_logged=float(np.linalg.norm(Py)),
        identity_error=float(np.linalg.norm(gap + Py)),
    )


class InexactBasis:
    """Z_j and T_j kept after a run, giving x(mu) for any mu"""

    def __init__(self, state: InexactLanczosState, sigma: float, n: int):
        self.state = state
        self.sigma = sigma
        self.n = n

    def solution_at(self, mu: float) -> np.ndarray:
        solve = shifted_tridiag_solve(self.state.T_hat(), mu, self.sigma, self.state.beta0)
        return self.state.Z.as_matrix()[:self.n] @ solve.y


def solve_inexact(op: CompanionOperator,
                  prec: Preconditioner,
                  b: np.ndarray,
                  shifts: ShiftSet,
                  c_tilde: Optional[np.ndarray] = None,
                  tol: float = DEFAULT_TOL,
                  maxit: int = DEFAULT_MAXIT,
                  epsilon: float = DEFAULT_EPSILON,
                  tol_policy: str = 'adaptive',
                  fixed_tol: float = DEFAULT_INNER_TOL,
                  checker: Optional[ResidualChecker] = None,
                  diagnostics: bool = False,
                  true_residuals_every_iteration: bool = False,
                  keep_basis: bool = False,
                  iteration_callback: Optional[Callable] = None) -> InexactReport:
    """
    Solve (K - mu M) u = b_tilde for all shifts with inexact preconditioning.

    Args:
        op: Companion operator
        prec: Preconditioner (iterative, injected or direct inner mode)
        b: Right-hand side of length n
        shifts: Ordered shift set; the last (farthest) shift drives the inner tolerances
        c_tilde: Shadow vector (b_tilde when omitted)
        tol: Outer relative residual tolerance
        maxit: Maximum outer iterations, also the j budget of the theorem policy
        epsilon: Budget for the residual gap
        tol_policy: 'adaptive', 'theorem' or 'fixed'
        fixed_tol: Inner tolerance of the fixed policy
        checker: Residual evaluator (interpolant P(mu) when omitted)
        diagnostics: Keep V, W and inner residual vectors; record the residual gap
        true_residuals_every_iteration: Extract every shift each iteration, not only the farthest
        keep_basis: Keep Z_j and T_j in the report for solution_at
        iteration_callback: Called as f(i, state, far_solve) after each iteration

    Returns:
        InexactReport
    """
    if tol_policy not in TOL_POLICIES:
        raise ConfigError(f"Unknown tolerance policy '{tol_policy}', expected one of {TOL_POLICIES}")
    if shifts.sigma != prec.sigma:
        raise ConfigError(f"Shift set built for sigma={shifts.sigma}, preconditioner uses sigma={prec.sigma}")

    sigma = prec.sigma
    checker = checker or ResidualChecker(b, poly=op.poly)
    counter = OperationCounter()
    bt = build_btilde(b, op.d)
    c = bt.copy() if c_tilde is None else np.asarray(c_tilde, dtype=np.float64)
    if float(bt @ c) == 0.0:
        raise ConfigError("Shadow vector c_tilde is orthogonal to b_tilde")

    state = InexactLanczosState(bt, c, keep_bases=diagnostics)
    log = InnerResidualLog(keep_vectors=diagnostics)
    prec.log = log
    beta = state.beta0
    k = len(shifts)
    far = shifts.farthest
    mu_star = float(shifts.mus[far])

    recursive_rows: List[np.ndarray] = []
    true_rows: List[np.ndarray] = []
    tol_history: List[float] = []
    tol_flags: List[bool] = []
    inner_residuals: List[float] = []
    inner_iterations: List[int] = []
    roundoff_limited: List[bool] = []
    delta_history: Optional[List[float]] = [] if diagnostics else None
    clock = IterationClock()
    solutions = np.zeros((op.n, k))
    broken = np.zeros(k, dtype=bool)
    fresh = set()
    prev_far: Optional[ShiftedTridiagSolve] = None
    sigma_est = 1.0
    termination = 'maxit'
    message = ''

    def _extract(l: int) -> Optional[ShiftedTridiagSolve]:
        try:
            solve = shifted_tridiag_solve(state.T_hat(), float(shifts.mus[l]), sigma, beta)
        except SingularShiftedTridiagonalError as e:
            logger.warning("%s", e)
            broken[l] = True
            return None
        counter.tridiag_solves += 1
        counter.basis_products += 1
        counter.postprocess += 1
        solutions[:, l] = state.Z.as_matrix()[:op.n] @ solve.y
        return solve

    for i in range(1, maxit + 1):
        atol_i = 0.0
        flagged = False
        if tol_policy == 'fixed':
            tol_i = fixed_tol
        elif tol_policy == 'adaptive':
            if prev_far is None:
                tol_i = FIRST_INNER_TOL
            else:
                tol_i, flagged = adaptive_tol(epsilon, prev_far.y[-1])
        else:
            if prev_far is None:
                delta_i = beta
            else:
                delta_i = next_delta(prev_far, state.beta_prev, sigma)
                if (i - 2) % THEOREM_SIGMA_REFRESH == 0:
                    sigma_est = min(sigma_est, prev_far.sigma_min())
            atol_i = theorem_bound(epsilon, maxit, sigma_est, delta_i)
            tol_i = 0.0
        tol_history.append(atol_i if tol_policy == 'theorem' else tol_i)
        tol_flags.append(flagged)

        prec.iteration = i
        n_records = len(log.records)
        breakdown = None
        try:
            lanczos_step_inexact(state, op, prec, tol_i, atol_i, counter)
        except LanczosBreakdownError as e:
            breakdown = e
        except InnerSolveError as e:
            termination = 'inner_failure'
            message = str(e)
            logger.error("Inner solve failed at outer iteration %d: %s", i, e)
            break

        new_records = log.records[n_records:]
        forward = [rec for rec in new_records if not rec.transpose]
        inner_residuals.append(forward[0].residual_norm if forward else 0.0)
        inner_iterations.append(sum(rec.inner_iterations for rec in new_records))
        roundoff_limited.append(any(rec.roundoff_limited for rec in new_records))

        rec_row = np.full(k, np.nan)
        true_row = np.full(k, np.nan)
        far_solve = None
        for l in range(k):
            if broken[l]:
                continue
            try:
                solve = shifted_tridiag_solve(state.T_hat(), float(shifts.mus[l]), sigma, beta)
            except SingularShiftedTridiagonalError as e:
                logger.warning("%s", e)
                broken[l] = True
                continue
            counter.tridiag_solves += 1
            rec_row[l] = solve.exact_residual_norm(state.beta[-1], sigma) / beta
            if l == far:
                far_solve = solve

        active = [l for l in range(k) if not broken[l]]
        if not active:
            termination = 'breakdown'
            message = "Every shifted tridiagonal system is singular"
            recursive_rows.append(rec_row)
            true_rows.append(true_row)
            clock.tick()
            break
        check = active[-1]
        if far_solve is None or check != far:
            far_solve = _extract(check)
        else:
            counter.basis_products += 1
            counter.postprocess += 1
            solutions[:, check] = state.Z.as_matrix()[:op.n] @ far_solve.y
        fresh = {check}
        true_row[check] = checker.relres(float(shifts.mus[check]), solutions[:, check])

        if diagnostics and far_solve is not None:
            u_hat = state.Z.matvec(far_solve.y)
            gap = residual_gap(state, op, bt, float(shifts.mus[check]), sigma, far_solve.y, u_hat, log)
            delta_history.append(gap.delta)

        if true_row[check] <= tol or true_residuals_every_iteration:
            for l in active:
                if l not in fresh:
                    _extract(l)
                    true_row[l] = checker.relres(float(shifts.mus[l]), solutions[:, l])
            fresh = set(active)

        recursive_rows.append(rec_row)
        true_rows.append(true_row)
        clock.tick()
        logger.debug("iter %d: inner tol=%.3e ||p||=%.3e relres(mu=%g)=%.3e",
                     i, tol_history[-1], inner_residuals[-1], shifts.mus[check], true_row[check])

        if iteration_callback is not None:
            iteration_callback(i, state, far_solve)

        if far_solve is not None and check == far:
            prev_far = far_solve

        if all(true_row[l] <= tol for l in active):
            termination = 'converged' if len(active) == k else 'breakdown'
            break
        if breakdown is not None:
            termination = 'breakdown'
            message = str(breakdown)
            logger.warning("Lanczos breakdown: %s", breakdown)
            break
        if state.beta[-1] == 0.0:
            termination = 'breakdown'
            message = f"Invariant subspace reached at iteration {i} without meeting tol"
            break

    iterations = len(recursive_rows)
    final_relres = np.full(k, np.nan)
    converged = np.zeros(k, dtype=bool)
    for l in range(k):
        if state.j > 0 and l not in fresh and not broken[l]:
            _extract(l)
        final_relres[l] = checker.relres(float(shifts.mus[l]), solutions[:, l])
        converged[l] = (not broken[l]) and final_relres[l] <= tol
    if termination == 'converged' and not converged.all():
        termination = 'maxit'
    prec.log = None

    rec_hist, true_hist = finalize_histories(shifts, recursive_rows, true_rows)
    return InexactReport(
        solver='inexact',
        side='right',
        sigma=sigma,
        mus=shifts.user_mus(),
        tol=tol,
        maxit=maxit,
        solutions=shifts.to_user_order(solutions, axis=1),
        relres_recursive=rec_hist,
        relres_true=true_hist,
        final_relres=shifts.to_user_order(final_relres),
        converged=shifts.to_user_order(converged),
        termination=termination,
        iterations=iterations,
        wall_seconds=clock.wall,
        cpu_seconds=clock.cpu,
        inner_solves=prec.inner_solves,
        counters=counter.as_dict(),
        residual_kind=checker.kind,
        broken_shifts=[float(shifts.mus[l]) for l in range(k) if broken[l]],
        message=message,
        epsilon=epsilon,
        tol_policy=tol_policy,
        j_budget=maxit,
        tol_history=tol_history,
        tol_flags=tol_flags,
        inner_residuals=inner_residuals,
        inner_iterations=inner_iterations,
        roundoff_limited=roundoff_limited,
        delta_history=delta_history,
        basis=InexactBasis(state, sigma, op.n) if keep_basis else None,
    )
