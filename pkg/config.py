"""
Configuration settings for chebbicg
Solver defaults, problem presets and output conventions
"""
import sys

import pytz

# Project
PROJECT_NAME = "chebbicg"
PROJECT_DESCRIPTION = "Chebyshev BiCG for parameterized linear systems"

# Run files and manifests are read with tomllib
MIN_PYTHON = (3, 11)


def require_python(version_info=sys.version_info):
    if tuple(version_info[:2]) < MIN_PYTHON:
        found = '.'.join(str(v) for v in version_info[:3])
        raise RuntimeError(f"{PROJECT_NAME} needs Python >= {MIN_PYTHON[0]}.{MIN_PYTHON[1]}, found {found}")


require_python()

# Timezone used for run timestamps in report.json
TIMEZONE = pytz.timezone('Europe/Stockholm')

# Outer solver defaults
DEFAULT_TOL = 1e-10
DEFAULT_MAXIT = 300
DEFAULT_SIDE = 'right'          # 'right' | 'left'
DEFAULT_SOLVER = 'exact'        # 'exact' | 'inexact'

# Breakdown detection: |rho_i| <= BREAKDOWN_TOL * ||r_i|| * ||s_i||
BREAKDOWN_TOL = 1e-14

# Inner solver (action of P(sigma)^{-1})
DEFAULT_INNER = 'direct'        # 'direct' | 'iterative' | 'injected'
DEFAULT_INNER_METHOD = 'bicg'   # 'bicg' | 'bicgstab'
DEFAULT_INNER_TOL = 1e-12
INNER_MAXIT_FACTOR = 10         # inner max iterations = factor * n
DENSE_LU_MAX_N = 2000           # above this, direct mode uses a sparse LU
# Inner stops are also accepted at ||r|| <= factor * eps * (||P||_F ||z|| + ||r_0||)
INNER_ROUNDOFF_FACTOR = 1e2

# Inexact algorithm
DEFAULT_EPSILON = 1e-12
DEFAULT_TOL_POLICY = 'adaptive'  # 'adaptive' | 'theorem' | 'fixed'
FIRST_INNER_TOL = 1e-14
INNER_TOL_FLOOR = 1e-14
INNER_TOL_CEILING = 0.5
THEOREM_SIGMA_REFRESH = 5        # iterations between sigma_min refreshes

# Dense oracle guard (companion dimension d*n)
DENSE_ORACLE_MAX_DIM = 5000

# Scalar functions f_i(mu) a problem term may carry
F_TAGS = {
    'one': {'display': '1', 'description': 'Constant one'},
    'mu': {'display': 'mu', 'description': 'Identity'},
    'mu_squared': {'display': 'mu^2', 'description': 'Square'},
    'sin_sq': {'display': 'sin(mu)^2', 'description': 'Squared sine'},
    'cos_sq': {'display': 'cos(mu)^2', 'description': 'Squared cosine'},
    'exp_neg': {'display': 'exp(-mu)', 'description': 'Unit time delay'},
    'samples': {'display': 'samples', 'description': 'Values at the Chebyshev nodes only'},
}

# Builtin problems with display names and default run parameters
PROBLEM_PRESETS = {
    'time_delay': {
        'display_name': 'Time-delay transfer function',
        'description': 'A(mu) = -mu I + A0 + A1 exp(-mu), random A0, A1',
        'params': {'n': 80, 'seed': 42, 'entries': 'normal'},
        'a': 2.0,
        'd': 17,
        'sigma': 0.0,
        'mus': [-0.5, -0.1, 0.1, 0.5],
        'side': 'left',
        'tol': 1e-10,
    },
    'helmholtz': {
        'display_name': 'Helmholtz (finite differences)',
        'description': 'A(mu) = A0 + sin^2(mu) A1 + mu^2 A2 + cos^2(mu) A3 on the unit square',
        'params': {'nx': 100, 'ny': 100},
        'a': 5.0,
        'd': 34,
        'sigma': 3.0,
        'mus': [2.5, 2.75, 3.25, 3.5],
        'side': 'right',
        'tol': 1e-8,
    },
}

# Interpolation check
INTERP_CHECK_POINTS = 101
INTERP_CHECK_THRESHOLD = 1e-6

# Verification: per-iteration wall time may grow at most this much between
# iteration 5 and iteration 50 (or the last one)
COST_RATIO_LIMIT = 2.0

# Output files
RESIDUALS_FILE = 'residuals.csv'
SOLUTIONS_FILE = 'solutions.mtx'
REPORT_FILE = 'report.json'
SWEEP_FILE = 'sweep.csv'
INTERP_FILE = 'interp_check.csv'

# Exit codes
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2
