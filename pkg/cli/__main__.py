#!/usr/bin/env python3
"""
chebbicg command line

Usage:
    python -m cli solve --problem time_delay
    python -m cli solve --problem helmholtz --nx 30 --solver inexact --mu "linspace(2.5, 3.5, 11)"
    python -m cli solve --config runs/helmholtz.toml --maxit 100
    python -m cli interp-check --problem helmholtz --d 50 --a 10
    python -m cli solve --problem time_delay --mu=-0.5,-0.1,0.1,0.5
    python -m cli verify quick

A shift list starting with a minus sign is also accepted as a separate
argument (--mu -0.5,0.5); it is joined to the flag before parsing.
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import EXIT_ERROR, INTERP_CHECK_THRESHOLD, PROBLEM_PRESETS
from errors import ChebBiCGError
from cli.commands import cmd_interp_check, cmd_solve, cmd_verify
from cli.run_config import (
    DIAGNOSTICS,
    INNER_METHODS,
    INNERS,
    SIDES,
    SOLVERS,
    TOL_POLICIES,
    build_run_config,
    load_run_file,
    parse_mu_list,
)


VALUE_JOINED_FLAGS = ('--mu',)


def _join_flag_values(argv: List[str]) -> List[str]:
    """'--mu -0.5,0.5' -> '--mu=-0.5,0.5' so argparse does not read the list as an option"""
    joined = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in VALUE_JOINED_FLAGS and i + 1 < len(argv):
            joined.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        joined.append(token)
        i += 1
    return joined


def _add_run_arguments(parser: argparse.ArgumentParser):
    """Flags mirroring RunConfig; unset flags leave preset and run-file values alone"""
    problem = parser.add_argument_group('problem')
    problem.add_argument('--config', help='TOML run file')
    problem.add_argument('--problem', choices=list(PROBLEM_PRESETS), help='Builtin problem')
    problem.add_argument('--manifest', help='TOML manifest of a user problem')
    problem.add_argument('--n', type=int, help='Size of the time-delay problem (grid side for helmholtz)')
    problem.add_argument('--nx', type=int, help='Helmholtz interior points along x1')
    problem.add_argument('--ny', type=int, help='Helmholtz interior points along x2')
    problem.add_argument('--seed', type=int, help='Random seed of the time-delay problem')

    interp = parser.add_argument_group('interpolation')
    interp.add_argument('--d', type=int, help='Chebyshev truncation degree')
    interp.add_argument('--a', type=float, help='Interval half-width')

    solver = parser.add_argument_group('solver')
    solver.add_argument('--solver', choices=SOLVERS)
    solver.add_argument('--side', choices=SIDES)
    solver.add_argument('--sigma', type=float, help='Target of the shift-and-invert preconditioner')
    solver.add_argument('--mu', help='Shifts: "m1,m2,..." or "linspace(lo, hi, count)"')
    solver.add_argument('--tol', type=float)
    solver.add_argument('--maxit', type=int)
    solver.add_argument('--inner', choices=INNERS)
    solver.add_argument('--inner-method', choices=INNER_METHODS)
    solver.add_argument('--inner-tol', type=float)
    solver.add_argument('--epsilon', type=float, help='Residual gap budget of the inexact solver')
    solver.add_argument('--tol-policy', choices=TOL_POLICIES)

    output = parser.add_argument_group('output')
    output.add_argument('--out', help='Output directory')
    output.add_argument('--diagnostics', action='append', choices=DIAGNOSTICS,
                        help='Extra histories (repeatable)')
    output.add_argument('--sweep', type=int, help='Residuals on an N-point mu grid after an inexact run')
    output.add_argument('--deterministic', action='store_true', default=None,
                        help='Zero the timing columns and omit the timestamp')


def _config_from_args(args: argparse.Namespace):
    overrides = load_run_file(args.config) if args.config else {}
    flags = {
        'problem': args.problem,
        'manifest': args.manifest,
        'n': args.n,
        'nx': args.nx,
        'ny': args.ny,
        'seed': args.seed,
        'd': args.d,
        'a': args.a,
        'solver': args.solver,
        'side': args.side,
        'sigma': args.sigma,
        'mus': parse_mu_list(args.mu) if args.mu is not None else None,
        'tol': args.tol,
        'maxit': args.maxit,
        'inner': args.inner,
        'inner_method': args.inner_method,
        'inner_tol': args.inner_tol,
        'epsilon': args.epsilon,
        'tol_policy': args.tol_policy,
        'out': args.out,
        'diagnostics': args.diagnostics,
        'sweep': args.sweep,
        'deterministic': args.deterministic,
    }
    overrides.update({k: v for k, v in flags.items() if v is not None})
    return build_run_config(overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='chebbicg',
        description='Multishift BiCG for parameterized linear systems A(mu) x = b',
    )
    parser.add_argument('--verbose', action='store_true', help='Per-iteration debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    solve = sub.add_parser('solve', help='Solve for every shift and write residuals.csv, solutions.mtx, report.json')
    _add_run_arguments(solve)

    interp = sub.add_parser('interp-check', help='Interpolation error of A(mu) over [-a, a]')
    _add_run_arguments(interp)
    interp.add_argument('--threshold', type=float, default=INTERP_CHECK_THRESHOLD)

    verify = sub.add_parser('verify', help='Run the built-in verification suites')
    verify.add_argument('level', nargs='?', default='quick', choices=['quick', 'full'])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_flag_values(argv))
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    if args.command == 'verify':
        return cmd_verify(args.level)
    try:
        config = _config_from_args(args)
    except ChebBiCGError as e:
        print(f"✗ {e}")
        return EXIT_ERROR
    if args.command == 'solve':
        return cmd_solve(config)
    return cmd_interp_check(config, threshold=args.threshold)


if __name__ == "__main__":
    sys.exit(main())
