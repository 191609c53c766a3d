"""
Scalar functions f_i(mu), evaluation of A(mu) and sampling at Chebyshev nodes
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple, Union

import numpy as np
import scipy.sparse as sp

from config import F_TAGS
from errors import ConfigError, DimensionMismatchError, TrueResidualUnavailable
from chebyshev.interpolation import ChebBasisParams, ParamMatrixSamples, cheb_nodes
from linalg.sparse_ops import as_csr

F_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    'one': lambda mu: np.ones_like(mu),
    'mu': lambda mu: mu,
    'mu_squared': lambda mu: mu ** 2,
    'sin_sq': lambda mu: np.sin(mu) ** 2,
    'cos_sq': lambda mu: np.cos(mu) ** 2,
    'exp_neg': lambda mu: np.exp(-mu),
}

# A term's f is either a tag from F_FUNCTIONS or its values at the nodes
FSpec = Union[str, np.ndarray]


@dataclass
class ParamProblem:
    """A(mu) = sum_i f_i(mu) C_i with right-hand side b"""
    terms: List[Tuple[sp.csr_matrix, FSpec]]
    b: np.ndarray
    a: float
    descriptor: str = ''
    name: str = 'custom'
    metadata: Dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def evaluable(self) -> bool:
        return all(isinstance(f, str) for _, f in self.terms)


def validate_problem(problem: ParamProblem) -> Tuple[bool, str]:
    """
    Check term shapes and function tags.

    Returns:
        Tuple of (is_valid, message)
    """
    if not problem.terms:
        return False, "Problem has no terms"
    n = problem.n
    for idx, (C, f) in enumerate(problem.terms):
        if C.shape != (n, n):
            return False, f"Term {idx}: matrix of shape {C.shape}, expected ({n}, {n})"
        if isinstance(f, str) and f not in F_FUNCTIONS:
            valid = ', '.join(t for t in F_TAGS if t != 'samples')
            return False, f"Term {idx}: unknown function tag '{f}' (valid: {valid})"
    if problem.a <= 0:
        return False, f"Interval half-width must be positive, got {problem.a}"
    return True, "OK"


def eval_f(tag: str, mu):
    if tag not in F_FUNCTIONS:
        raise ConfigError(f"Unknown function tag '{tag}'")
    return F_FUNCTIONS[tag](np.asarray(mu, dtype=np.float64))


def eval_A_at(problem: ParamProblem, mu: float) -> sp.csr_matrix:
    """
    sum_i f_i(mu) C_i as one CSR matrix.

    Raises:
        TrueResidualUnavailable: If a term is only known at the nodes
    """
    if not problem.evaluable:
        raise TrueResidualUnavailable(
            f"Problem '{problem.name}' has sampled terms; A(mu) is only known at the nodes")
    A = sp.csr_matrix((problem.n, problem.n), dtype=np.float64)
    for C, tag in problem.terms:
        A = A + float(eval_f(tag, mu)) * C
    return as_csr(A)


def sample_f_at_nodes(problem: ParamProblem, params: ChebBasisParams) -> ParamMatrixSamples:
    """Samples of every f_i at cheb_nodes(params)"""
    nodes = cheb_nodes(params)
    terms = []
    for idx, (C, f) in enumerate(problem.terms):
        if isinstance(f, str):
            samples = eval_f(f, nodes)
        else:
            samples = np.asarray(f, dtype=np.float64)
            if samples.shape != nodes.shape:
                raise DimensionMismatchError(
                    f"Term {idx}: {samples.size} node samples, expected d+1 = {nodes.size}")
        terms.append((C, samples))
    return ParamMatrixSamples(terms=terms)
