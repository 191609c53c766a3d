"""
Built-in problem families: a random time-delay system and a
finite-difference Helmholtz equation on the unit square
"""
import os
import sys

import numpy as np
import scipy.sparse as sp

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import PROBLEM_PRESETS
from errors import ConfigError
from chebyshev.interpolation import ChebBasisParams, MatrixChebPoly
from linalg.sparse_ops import as_csr
from problems.evaluator import ParamProblem


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; a fixed seed gives identical streams on every platform"""
    return np.random.Generator(np.random.PCG64(seed))


TIME_DELAY_ENTRIES = ('uniform', 'normal')


def gen_time_delay(n: int = 80, seed: int = 42, a: float = PROBLEM_PRESETS['time_delay']['a'],
                   entries: str = 'uniform') -> ParamProblem:
    """
    A(mu) = -mu I + A0 + A1 exp(-mu) with unit delay.

    Args:
        n: Matrix size
        seed: Random seed
        a: Interval half-width
        entries: 'uniform' draws A0, A1 from U[-1,1]/n, 'normal' from N(0,1)

    Returns:
        ParamProblem with terms (-I, mu), (A0, one), (A1, exp_neg)
    """
    if n < 2:
        raise ConfigError(f"Time-delay problem needs n >= 2, got n={n}")
    if entries not in TIME_DELAY_ENTRIES:
        raise ConfigError(f"Unknown entry distribution '{entries}', expected one of {TIME_DELAY_ENTRIES}")
    rng = make_rng(seed)
    if entries == 'uniform':
        A0 = rng.uniform(-1.0, 1.0, size=(n, n)) / n
        A1 = rng.uniform(-1.0, 1.0, size=(n, n)) / n
        b = rng.uniform(-1.0, 1.0, size=n)
        label = 'U[-1,1]/n'
    else:
        # eigenvalues of A(mu) near mu = 0 spread over a disk of radius ~sqrt(2n)
        A0 = rng.standard_normal((n, n))
        A1 = rng.standard_normal((n, n))
        b = rng.standard_normal(n)
        label = 'N(0,1)'
    terms = [
        (as_csr(-sp.identity(n)), 'mu'),
        (as_csr(A0), 'one'),
        (as_csr(A1), 'exp_neg'),
    ]
    return ParamProblem(
        terms=terms,
        b=b,
        a=a,
        descriptor=f"time-delay: A(mu) = -mu I + A0 + A1 exp(-mu), n={n}, seed={seed}, entries {label}",
        name='time_delay',
        metadata={'n': n, 'seed': seed, 'entries': entries},
    )


def laplacian_2d(nx: int, ny: int) -> sp.csr_matrix:
    """5-point discretization of +nabla^2 with Dirichlet boundary, row-major interior points"""
    hx = 1.0 / (nx + 1)
    hy = 1.0 / (ny + 1)
    Tx = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(nx, nx)) / hx ** 2
    Ty = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(ny, ny)) / hy ** 2
    return as_csr(sp.kron(sp.identity(ny), Tx) + sp.kron(Ty, sp.identity(nx)))


def grid_points(nx: int, ny: int):
    """Interior coordinates (x1, x2) flattened with x1 fastest"""
    x1 = np.arange(1, nx + 1) / (nx + 1)
    x2 = np.arange(1, ny + 1) / (ny + 1)
    X1, X2 = np.meshgrid(x1, x2)
    return X1.ravel(), X2.ravel()


def gen_helmholtz_fd(nx: int = 100, ny: int = 100, a: float = PROBLEM_PRESETS['helmholtz']['a']) -> ParamProblem:
    """
    A(mu) = A0 + sin^2(mu) A1 + mu^2 A2 + cos^2(mu) A3 on the unit square.

    nx, ny count interior points; h = 1 / (nx + 1).
    """
    if nx < 3 or ny < 3:
        raise ConfigError(f"Helmholtz grid needs nx, ny >= 3, got {nx}x{ny}")
    x1, x2 = grid_points(nx, ny)
    n = nx * ny
    terms = [
        (laplacian_2d(nx, ny), 'one'),
        (as_csr(sp.diags(1.0 + np.sin(x1))), 'sin_sq'),
        (as_csr(sp.identity(n)), 'mu_squared'),
        (as_csr(sp.diags(1.0 + np.cos(x2))), 'cos_sq'),
    ]
    return ParamProblem(
        terms=terms,
        b=np.exp(-x1 * x2),
        a=a,
        descriptor=(f"helmholtz-fd: nabla^2 u + sin^2(mu)(1+sin x1) u + mu^2 u + cos^2(mu)(1+cos x2) u "
                    f"= exp(-x1 x2) on the unit square, {nx}x{ny} interior points"),
        name='helmholtz',
        metadata={'nx': nx, 'ny': ny},
    )


def gen_random_poly(n: int, d: int, a: float = 1.0, seed: int = 0):
    """
    Random matrix polynomial with P(mu) nonsingular on [-a, a].

    P_0 = 2I + R_0 / n and P_l = R_l / (n (l+1)^2) with R_l uniform in [-1, 1],
    so ||P(mu) - 2I|| < 2 wherever |tau_l(mu)| <= 1.

    Returns:
        Tuple of (MatrixChebPoly, b)
    """
    rng = make_rng(seed)
    coeffs = [as_csr(2.0 * np.eye(n) + rng.uniform(-1.0, 1.0, size=(n, n)) / n)]
    for ell in range(1, d + 1):
        coeffs.append(as_csr(rng.uniform(-1.0, 1.0, size=(n, n)) / (n * (ell + 1) ** 2)))
    b = rng.uniform(-1.0, 1.0, size=n)
    return MatrixChebPoly(params=ChebBasisParams(a=a, d=d), coeffs=coeffs), b


GENERATORS = {
    'time_delay': gen_time_delay,
    'helmholtz': gen_helmholtz_fd,
}
