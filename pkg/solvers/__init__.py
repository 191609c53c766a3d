"""
Multishift BiCG solvers for the companion linearization
"""
from solvers.shifts import ShiftSet, ColumnStore, build_shift_set
from solvers.report import SolveReport, InexactReport, OperationCounter, ResidualChecker
from solvers.exact import ShiftState, zeta_update, shifted_coeffs, post_process, solve_exact
from solvers.inexact import (
    InexactLanczosState,
    ShiftedTridiagSolve,
    lanczos_step_inexact,
    shifted_tridiag_solve,
    adaptive_tol,
    theorem_bound,
    residual_gap,
    solve_inexact,
)

__all__ = [
    'ShiftSet',
    'ColumnStore',
    'build_shift_set',
    'SolveReport',
    'InexactReport',
    'OperationCounter',
    'ResidualChecker',
    'ShiftState',
    'zeta_update',
    'shifted_coeffs',
    'post_process',
    'solve_exact',
    'InexactLanczosState',
    'ShiftedTridiagSolve',
    'lanczos_step_inexact',
    'shifted_tridiag_solve',
    'adaptive_tol',
    'theorem_bound',
    'residual_gap',
    'solve_inexact',
]
