"""
Run configuration: presets, TOML run files and command-line overrides

Run file layout (every key optional, every key overridable by a flag):

    [problem]
    name = "helmholtz"          # builtin preset, or
    manifest = "prob/problem.toml"
    nx = 30
    ny = 30

    [interpolation]
    d = 34
    a = 5.0

    [solver]
    kind = "inexact"            # exact | inexact
    side = "right"              # right | left
    sigma = 3.0
    mu = "linspace(2.5, 3.5, 11)"   # or a list of numbers, or "2.5, 3.0"
    tol = 1e-8
    maxit = 300
    inner = "iterative"         # direct | iterative | injected
    inner_method = "bicg"       # bicg | bicgstab
    inner_tol = 1e-12
    epsilon = 1e-12
    tol_policy = "adaptive"     # adaptive | theorem | fixed

    [output]
    dir = "runs/helmholtz"
    diagnostics = ["true-residuals"]
    sweep = 0
    deterministic = false
"""
import re
import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from config import (
    DEFAULT_EPSILON,
    DEFAULT_INNER_METHOD,
    DEFAULT_INNER_TOL,
    DEFAULT_MAXIT,
    DEFAULT_SOLVER,
    DEFAULT_TOL_POLICY,
    PROBLEM_PRESETS,
)
from errors import ConfigError

SOLVERS = ('exact', 'inexact')
SIDES = ('right', 'left')
INNERS = ('direct', 'iterative', 'injected')
INNER_METHODS = ('bicg', 'bicgstab')
TOL_POLICIES = ('adaptive', 'theorem', 'fixed')
DIAGNOSTICS = ('true-residuals', 'residual-gap')

_LINSPACE = re.compile(r'^\s*linspace\s*\(\s*([^,]+),([^,]+),([^,)]+)\)\s*$')

# TOML table/key -> RunConfig field
_RUN_FILE_KEYS = {
    'problem': {'name': 'problem', 'manifest': 'manifest', 'n': 'n', 'nx': 'nx', 'ny': 'ny', 'seed': 'seed'},
    'interpolation': {'d': 'd', 'a': 'a'},
    'solver': {
        'kind': 'solver', 'side': 'side', 'sigma': 'sigma', 'mu': 'mus', 'tol': 'tol', 'maxit': 'maxit',
        'inner': 'inner', 'inner_method': 'inner_method', 'inner_tol': 'inner_tol',
        'epsilon': 'epsilon', 'tol_policy': 'tol_policy',
    },
    'output': {'dir': 'out', 'diagnostics': 'diagnostics', 'sweep': 'sweep', 'deterministic': 'deterministic'},
}


@dataclass
class RunConfig:
    """One solve: problem, interpolation, solver and output settings"""
    problem: str = 'time_delay'
    manifest: Optional[str] = None
    n: Optional[int] = None
    nx: Optional[int] = None
    ny: Optional[int] = None
    seed: Optional[int] = None
    d: int = 17
    a: float = 2.0
    sigma: float = 0.0
    mus: List[float] = field(default_factory=list)
    tol: float = 1e-10
    maxit: int = DEFAULT_MAXIT
    solver: str = DEFAULT_SOLVER
    side: str = 'right'
    inner: Optional[str] = None
    inner_method: str = DEFAULT_INNER_METHOD
    inner_tol: float = DEFAULT_INNER_TOL
    epsilon: float = DEFAULT_EPSILON
    tol_policy: str = DEFAULT_TOL_POLICY
    out: str = 'out'
    diagnostics: List[str] = field(default_factory=list)
    sweep: int = 0
    deterministic: bool = False

    @property
    def inner_mode(self) -> str:
        """Inner mode, defaulting to direct for exact runs and iterative for inexact ones"""
        if self.inner is not None:
            return self.inner
        return 'direct' if self.solver == 'exact' else 'iterative'

    def generator_params(self) -> Dict:
        """Keyword arguments for the builtin generator of this preset"""
        preset = PROBLEM_PRESETS[self.problem]
        params = dict(preset['params'])
        if self.problem == 'time_delay':
            if self.n is not None:
                params['n'] = self.n
            if self.seed is not None:
                params['seed'] = self.seed
        else:
            nx = self.nx if self.nx is not None else self.n
            ny = self.ny if self.ny is not None else nx
            if nx is not None:
                params['nx'] = nx
            if ny is not None:
                params['ny'] = ny
        params['a'] = self.a
        return params

    def as_dict(self) -> Dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out['inner'] = self.inner_mode
        return out


def parse_mu_list(value: Union[str, float, List]) -> List[float]:
    """
    Parse shifts given as a number, a list, "m1, m2, ..." or "linspace(lo, hi, count)".

    Examples:
        >>> parse_mu_list("linspace(2.5, 3.5, 3)")
        [2.5, 3.0, 3.5]
    """
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    text = str(value).strip()
    match = _LINSPACE.match(text)
    if match:
        lo, hi, count = match.groups()
        try:
            num = int(count)
            return [float(m) for m in np.linspace(float(lo), float(hi), num)]
        except ValueError:
            raise ConfigError(f"Cannot parse shift range '{text}'")
    try:
        return [float(tok) for tok in text.split(',') if tok.strip()]
    except ValueError:
        raise ConfigError(f"Cannot parse shift list '{text}'")


def preset_config(problem: str) -> RunConfig:
    """RunConfig carrying a builtin preset's defaults"""
    if problem not in PROBLEM_PRESETS:
        raise ConfigError(f"Unknown problem '{problem}' (builtin: {', '.join(PROBLEM_PRESETS)})")
    preset = PROBLEM_PRESETS[problem]
    return RunConfig(
        problem=problem,
        d=preset['d'],
        a=preset['a'],
        sigma=preset['sigma'],
        mus=list(preset['mus']),
        side=preset['side'],
        tol=preset['tol'],
    )


def load_run_file(path: Union[str, Path]) -> Dict:
    """
    Flatten a TOML run file into RunConfig field overrides.

    Relative manifest paths are resolved against the run file's directory.
    """
    path = Path(path)
    try:
        with open(path, 'rb') as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: {e}")

    overrides = {}
    for table, values in data.items():
        if table not in _RUN_FILE_KEYS or not isinstance(values, dict):
            raise ConfigError(f"{path}: unknown table [{table}] (valid: {', '.join(_RUN_FILE_KEYS)})")
        for key, value in values.items():
            if key not in _RUN_FILE_KEYS[table]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{table}]")
            overrides[_RUN_FILE_KEYS[table][key]] = value

    if 'mus' in overrides:
        overrides['mus'] = parse_mu_list(overrides['mus'])
    if isinstance(overrides.get('diagnostics'), str):
        overrides['diagnostics'] = [overrides['diagnostics']]
    if overrides.get('manifest'):
        manifest = Path(overrides['manifest'])
        if not manifest.is_absolute():
            overrides['manifest'] = str(path.parent / manifest)
    return overrides


def _manifest_half_width(path: str) -> float:
    try:
        with open(path, 'rb') as f:
            return float(tomllib.load(f)['a'])
    except (OSError, KeyError, ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: cannot read the interval half-width a ({e})")


def build_run_config(overrides: Dict) -> RunConfig:
    """
    Preset defaults, then overrides (run file, then flags; None means unset).

    A manifest problem starts from the time_delay solver defaults and takes
    a from the manifest unless overridden.
    """
    overrides = {k: v for k, v in overrides.items() if v is not None}
    problem = overrides.get('problem', 'time_delay')
    if overrides.get('manifest'):
        problem = 'manifest'
        config = preset_config('time_delay')
        config.problem = problem
        config.side = 'right'
        config.a = _manifest_half_width(overrides['manifest'])
    else:
        config = preset_config(problem)
    valid = {f.name for f in fields(RunConfig)}
    for key, value in overrides.items():
        if key not in valid:
            raise ConfigError(f"Unknown run setting '{key}'")
        if key == 'problem':
            continue
        setattr(config, key, value)
    return config


def validate_run_config(config: RunConfig) -> Tuple[bool, str]:
    """
    Check a run before anything is allocated.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if config.problem != 'manifest' and config.problem not in PROBLEM_PRESETS:
        return False, f"Unknown problem '{config.problem}'"
    if config.problem == 'manifest' and not config.manifest:
        return False, "A manifest problem needs a manifest path"
    if int(config.d) != config.d or config.d < 2:
        return False, f"Degree d must be an integer >= 2, got {config.d}"
    if not np.isfinite(config.a) or config.a <= 0:
        return False, f"Interval half-width a must be positive, got {config.a}"
    if not -config.a < config.sigma < config.a:
        return False, f"sigma={config.sigma} must lie strictly inside (-{config.a}, {config.a})"
    if not config.mus:
        return False, "At least one shift mu is required"
    for mu in config.mus:
        if not np.isfinite(mu) or abs(mu) > config.a:
            return False, f"mu={mu} lies outside [-{config.a}, {config.a}]"
        if mu == config.sigma:
            return False, f"mu={mu} equals sigma; the shifted system is the preconditioner itself"
    if config.solver not in SOLVERS:
        return False, f"Unknown solver '{config.solver}' (valid: {', '.join(SOLVERS)})"
    if config.side not in SIDES:
        return False, f"Unknown side '{config.side}' (valid: {', '.join(SIDES)})"
    if config.side == 'left':
        if config.solver != 'exact':
            return False, "Left preconditioning is only available for the exact solver"
        if config.sigma != 0.0:
            return False, f"Left preconditioning requires sigma = 0, got {config.sigma}"
    if config.inner_mode not in INNERS:
        return False, f"Unknown inner mode '{config.inner_mode}' (valid: {', '.join(INNERS)})"
    if config.solver == 'exact' and config.inner_mode != 'direct':
        return False, "The exact solver needs direct inner solves"
    if config.inner_method not in INNER_METHODS:
        return False, f"Unknown inner method '{config.inner_method}' (valid: {', '.join(INNER_METHODS)})"
    if config.tol_policy not in TOL_POLICIES:
        return False, f"Unknown tolerance policy '{config.tol_policy}' (valid: {', '.join(TOL_POLICIES)})"
    if not config.tol > 0 or not config.inner_tol > 0 or not config.epsilon > 0:
        return False, "tol, inner_tol and epsilon must be positive"
    if int(config.maxit) != config.maxit or config.maxit < 1:
        return False, f"maxit must be a positive integer, got {config.maxit}"
    for flag in config.diagnostics:
        if flag not in DIAGNOSTICS:
            return False, f"Unknown diagnostics flag '{flag}' (valid: {', '.join(DIAGNOSTICS)})"
    if 'residual-gap' in config.diagnostics and config.solver != 'inexact':
        return False, "The residual-gap diagnostic needs the inexact solver"
    if config.sweep < 0:
        return False, f"sweep must be non-negative, got {config.sweep}"
    if not config.out:
        return False, "An output directory is required"
    return True, ""
