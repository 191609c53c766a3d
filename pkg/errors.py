"""
Exception types for chebbicg
"""
from typing import Optional


class ChebBiCGError(Exception):
    """Base class for every error raised by this package"""


class DimensionMismatchError(ChebBiCGError, ValueError):
    """Operand sizes do not agree"""


class SingularMatrixError(ChebBiCGError):
    """A factorization or triangular solve met a zero pivot"""

    def __init__(self, message: str, sigma: Optional[float] = None):
        super().__init__(message)
        self.sigma = sigma


class SingularShiftedTridiagonalError(SingularMatrixError):
    """I + (-mu + sigma) T_j has a zero diagonal entry in its QR factor"""

    def __init__(self, message: str, mu: float):
        super().__init__(message)
        self.mu = mu


class MatrixMarketParseError(ChebBiCGError, ValueError):
    """Malformed Matrix Market input"""

    def __init__(self, message: str, path: str = '', line_number: int = 0):
        location = f"{path}:{line_number}" if path else f"line {line_number}"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line_number = line_number


class ConfigError(ChebBiCGError, ValueError):
    """Invalid run configuration"""


class SizeGuardError(ChebBiCGError):
    """Dense assembly requested above the configured dimension"""


class LanczosBreakdownError(ChebBiCGError):
    """The biorthogonalization cannot continue (rho_i = 0 or s_i^T r_i = 0)"""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class ShiftBreakdownError(ChebBiCGError):
    """A colinearity coefficient vanished for one shift"""

    def __init__(self, message: str, mu: float, iteration: int = -1):
        super().__init__(message)
        self.mu = mu
        self.iteration = iteration


class InnerSolveError(ChebBiCGError):
    """The inner iterative solver stopped before reaching its tolerance"""

    def __init__(self, message: str, achieved: float, iterations: int):
        super().__init__(message)
        self.achieved = achieved
        self.iterations = iterations


class TrueResidualUnavailable(ChebBiCGError):
    """A(mu) cannot be evaluated because a term is only known at the nodes"""
