"""
Preconditioned multishift BiCG on the companion linearization

One BiCG run on the seed system B u = r_0, with B = M (K - sigma M)^{-1}
(right) or B = (K - sigma M)^{-1} M (left, sigma = 0), yields iterates
for every shifted system (K - mu M) u = b_tilde through the colinearity
coefficients zeta_i = p_i(omega), where p_i is the seed residual
polynomial and omega = -1 / (-mu + sigma).
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from config import BREAKDOWN_TOL, DEFAULT_MAXIT, DEFAULT_TOL
from errors import ConfigError, InnerSolveError, LanczosBreakdownError, ShiftBreakdownError
from linearization.companion import CompanionOperator, apply_M, build_btilde, extract_x
from linearization.preconditioner import Preconditioner, apply_prec, apply_prec_T
from solvers.report import (
    IterationClock,
    OperationCounter,
    ResidualChecker,
    SolveReport,
    finalize_histories,
)
from solvers.shifts import ColumnStore, ShiftSet

logger = logging.getLogger(__name__)

SIDES = ('right', 'left')


@dataclass
class ShiftState:
    """Colinearity coefficients and shifted iterates for one mu"""
    mu: float
    omega: float
    zeta_prev: float = 1.0
    zeta: float = 1.0
    zeta_next: float = 1.0
    alpha_tilde: float = 0.0
    beta_tilde: float = 0.0
    v_tilde: Optional[np.ndarray] = None
    u_tilde: Optional[np.ndarray] = None
    broken: bool = False


@dataclass
class SeedState:
    r: np.ndarray
    s: np.ndarray
    v_star: np.ndarray
    w_star: np.ndarray
    u_sd: np.ndarray
    rho: float = 1.0
    rho_prev: float = 1.0
    alpha: float = 1.0
    alpha_prev: float = 1.0
    beta: float = 0.0


def zeta_update(state: ShiftState, omega: float, alpha_i: float, alpha_im1: float, beta_i: float) -> float:
    """
    zeta_{i+1} = (1 - alpha_i omega - c) zeta_i + c zeta_{i-1}, c = beta_i alpha_i / alpha_{i-1}

    Raises:
        ShiftBreakdownError: If zeta_{i+1} vanishes
    """
    c = beta_i * alpha_i / alpha_im1
    zeta_next = (1.0 - alpha_i * omega - c) * state.zeta + c * state.zeta_prev
    if zeta_next == 0.0 or not np.isfinite(zeta_next):
        raise ShiftBreakdownError(f"Colinearity coefficient vanished for mu={state.mu}", mu=state.mu)
    return zeta_next


def shifted_coeffs(state: ShiftState, alpha_i: float, beta_i: float):
    """alpha_tilde = -alpha_i zeta_i / zeta_{i+1}, beta_tilde = (zeta_{i-1} / zeta_i)^2 beta_i"""
    if state.zeta == 0.0 or state.zeta_next == 0.0:
        raise ShiftBreakdownError(f"Zero colinearity coefficient for mu={state.mu}", mu=state.mu)
    alpha_tilde = -alpha_i * state.zeta / state.zeta_next
    beta_tilde = (state.zeta_prev / state.zeta) ** 2 * beta_i
    return alpha_tilde, beta_tilde


def post_process(prec: Preconditioner, omega: float, u_tilde: np.ndarray, side: str = 'right') -> np.ndarray:
    """x = first n entries of omega (K - sigma M)^{-1} u_tilde (omega u_tilde in left mode)"""
    if side == 'left':
        return extract_x(omega * u_tilde, prec.n)
    if not np.any(u_tilde):
        return np.zeros(prec.n)
    return extract_x(omega * apply_prec(prec, u_tilde), prec.n)


class SeedOperator:
    """Products with B and B^T for the chosen preconditioning side"""

    def __init__(self, op: CompanionOperator, prec: Preconditioner, side: str, counter: OperationCounter):
        self.op = op
        self.prec = prec
        self.side = side
        self.counter = counter

    def apply(self, v: np.ndarray) -> np.ndarray:
        self.counter.prec_applies += 1
        self.counter.M_applies += 1
        if self.side == 'right':
            return apply_M(self.op, apply_prec(self.prec, v))
        return apply_prec(self.prec, apply_M(self.op, v))

    def apply_T(self, w: np.ndarray) -> np.ndarray:
        self.counter.prec_T_applies += 1
        self.counter.M_applies += 1
        if self.side == 'right':
            return apply_prec_T(self.prec, apply_M(self.op, w, transpose=True))
        return apply_M(self.op, apply_prec_T(self.prec, w), transpose=True)


def solve_exact(op: CompanionOperator,
                prec: Preconditioner,
                b: np.ndarray,
                shifts: ShiftSet,
                c_tilde: Optional[np.ndarray] = None,
                tol: float = DEFAULT_TOL,
                maxit: int = DEFAULT_MAXIT,
                side: str = 'right',
                checker: Optional[ResidualChecker] = None,
                true_residuals_every_iteration: bool = False,
                store_history: bool = False,
                iteration_callback: Optional[Callable] = None) -> SolveReport:
    """
    Solve (K - mu M) u = b_tilde for all shifts with one BiCG run.

    Args:
        op: Companion operator
        prec: Direct-mode preconditioner at sigma
        b: Right-hand side of length n
        shifts: Ordered shift set
        c_tilde: Shadow vector (b_tilde, or r_0 in left mode, when omitted)
        tol: Relative residual tolerance on A(mu) x = b
        maxit: Maximum number of iterations
        side: 'right' or 'left' (left requires sigma = 0)
        checker: Residual evaluator (interpolant P(mu) when omitted)
        true_residuals_every_iteration: Post-process every shift each iteration
        store_history: Keep r_i and s_i columns (report attribute seed_history)
        iteration_callback: Called as f(i, seed, shift_states) after each iteration

    Returns:
        SolveReport, partial when termination is not 'converged'
    """
    if side not in SIDES:
        raise ConfigError(f"Unknown side '{side}', expected one of {SIDES}")
    if side == 'left' and prec.sigma != 0.0:
        raise ConfigError(f"Left preconditioning requires sigma = 0, got sigma={prec.sigma}")
    if prec.inner.mode != 'direct':
        raise ConfigError("The exact solver needs a direct-mode preconditioner")
    if shifts.sigma != prec.sigma:
        raise ConfigError(f"Shift set built for sigma={shifts.sigma}, preconditioner uses sigma={prec.sigma}")

    checker = checker or ResidualChecker(b, poly=op.poly)
    counter = OperationCounter()
    seed_op = SeedOperator(op, prec, side, counter)

    bt = build_btilde(b, op.d)
    if side == 'right':
        r0 = bt
    else:
        r0 = apply_prec(prec, bt)
        counter.prec_applies += 1
    c = r0.copy() if c_tilde is None else np.asarray(c_tilde, dtype=np.float64)
    if float(r0 @ c) == 0.0:
        raise ConfigError("Shadow vector c_tilde is orthogonal to the initial residual")

    dim = op.dim
    seed = SeedState(r=r0.copy(), s=c.copy(), v_star=np.zeros(dim), w_star=np.zeros(dim), u_sd=np.zeros(dim))
    states = [ShiftState(mu=float(mu), omega=float(om), v_tilde=np.zeros(dim), u_tilde=np.zeros(dim))
              for mu, om in zip(shifts.mus, shifts.omegas)]
    r0_norm = float(np.linalg.norm(r0))
    k = len(shifts)

    history = (ColumnStore(dim), ColumnStore(dim)) if store_history else None
    if history is not None:
        history[0].append(seed.r)
        history[1].append(seed.s)

    recursive_rows: List[np.ndarray] = []
    true_rows: List[np.ndarray] = []
    clock = IterationClock()
    termination = 'maxit'
    message = ''
    solutions = np.zeros((op.n, k))
    final_relres = np.full(k, np.nan)
    converged = np.zeros(k, dtype=bool)

    def _solution(l: int) -> np.ndarray:
        counter.postprocess += 1
        if side == 'right':
            counter.prec_applies += 1
        return post_process(prec, states[l].omega, states[l].u_tilde, side)

    fresh = set()
    try:
        for i in range(maxit):
            prec.iteration = i + 1
            seed.rho = float(seed.r @ seed.s)
            if abs(seed.rho) <= BREAKDOWN_TOL * np.linalg.norm(seed.r) * np.linalg.norm(seed.s):
                raise LanczosBreakdownError(f"rho vanished at iteration {i + 1}", iteration=i + 1)
            seed.beta = -seed.rho / seed.rho_prev
            seed.v_star = seed.r - seed.beta * seed.v_star
            seed.w_star = seed.s - seed.beta * seed.w_star

            v1 = seed_op.apply(seed.v_star)
            v2 = seed_op.apply_T(seed.w_star)
            denom = float(seed.w_star @ v1)
            if denom == 0.0:
                raise LanczosBreakdownError(f"w*^T B v* vanished at iteration {i + 1}", iteration=i + 1)
            seed.alpha = seed.rho / denom

            r_old = seed.r
            seed.u_sd = seed.u_sd + seed.alpha * seed.v_star
            seed.r = seed.r - seed.alpha * v1
            seed.s = seed.s - seed.alpha * v2
            if history is not None:
                history[0].append(seed.r)
                history[1].append(seed.s)

            rec_row = np.full(k, np.nan)
            r_norm = float(np.linalg.norm(seed.r))
            for l, st in enumerate(states):
                if st.broken:
                    continue
                try:
                    st.zeta_next = zeta_update(st, st.omega, seed.alpha, seed.alpha_prev, seed.beta)
                    st.alpha_tilde, st.beta_tilde = shifted_coeffs(st, seed.alpha, seed.beta)
                except ShiftBreakdownError as e:
                    logger.warning("Shift breakdown at iteration %d: %s", i + 1, e)
                    st.broken = True
                    continue
                st.v_tilde = r_old / st.zeta - st.beta_tilde * st.v_tilde
                st.u_tilde = st.u_tilde + st.alpha_tilde * st.v_tilde
                st.zeta_prev, st.zeta = st.zeta, st.zeta_next
                rec_row[l] = r_norm / abs(st.zeta) / r0_norm

            seed.rho_prev = seed.rho
            seed.alpha_prev = seed.alpha

            active = [l for l, st in enumerate(states) if not st.broken]
            if not active:
                raise LanczosBreakdownError("Every shift broke down", iteration=i + 1)
            far = active[-1]
            true_row = np.full(k, np.nan)
            fresh = set(active if true_residuals_every_iteration else [far])
            for l in fresh:
                solutions[:, l] = _solution(l)
                true_row[l] = checker.relres(states[l].mu, solutions[:, l])

            if true_row[far] <= tol:
                for l in active:
                    if l not in fresh:
                        solutions[:, l] = _solution(l)
                        true_row[l] = checker.relres(states[l].mu, solutions[:, l])
                fresh = set(active)

            recursive_rows.append(rec_row)
            true_rows.append(true_row)
            clock.tick()
            logger.debug("iter %d: rho=%.3e alpha=%.3e relres(mu=%g)=%.3e",
                         i + 1, seed.rho, seed.alpha, states[far].mu, true_row[far])

            if iteration_callback is not None:
                iteration_callback(i, seed, states)

            if all(true_row[l] <= tol for l in active):
                termination = 'converged' if len(active) == k else 'breakdown'
                break
    except LanczosBreakdownError as e:
        logger.warning("Lanczos breakdown: %s", e)
        termination = 'breakdown'
        message = str(e)
    except InnerSolveError as e:
        termination = 'inner_failure'
        message = str(e)
    iterations = len(recursive_rows)

    for l, st in enumerate(states):
        if l not in fresh:
            try:
                solutions[:, l] = _solution(l)
            except InnerSolveError:
                logger.warning("Could not post-process mu=%g after inner failure", st.mu)
        final_relres[l] = checker.relres(st.mu, solutions[:, l])
        converged[l] = (not st.broken) and final_relres[l] <= tol

    if termination == 'converged' and not converged.all():
        termination = 'maxit'
    if termination == 'maxit':
        logger.info("Reached %d iterations without full convergence", iterations)

    rec_hist, true_hist = finalize_histories(shifts, recursive_rows, true_rows)
    report = SolveReport(
        solver='exact',
        side=side,
        sigma=shifts.sigma,
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
        broken_shifts=[st.mu for st in states if st.broken],
        message=message,
        seed_history=history,
    )
    return report
