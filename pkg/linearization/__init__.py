"""
Companion linearization and shift-and-invert preconditioning
"""
from linearization.companion import (
    CompanionOperator,
    build_companion,
    apply_K,
    apply_M,
    build_btilde,
    extract_x,
    structured_vector,
    assemble_dense,
)
from linearization.preconditioner import (
    InnerSpec,
    InnerSolver,
    InnerResidualLog,
    Preconditioner,
    build_preconditioner,
    apply_Linv,
    apply_Uinv,
    apply_prec,
    apply_prec_T,
)

__all__ = [
    'CompanionOperator',
    'build_companion',
    'apply_K',
    'apply_M',
    'build_btilde',
    'extract_x',
    'structured_vector',
    'assemble_dense',
    'InnerSpec',
    'InnerSolver',
    'InnerResidualLog',
    'Preconditioner',
    'build_preconditioner',
    'apply_Linv',
    'apply_Uinv',
    'apply_prec',
    'apply_prec_T',
]
