#!/usr/bin/env python3
"""
Problem Export Script
Writes a builtin problem as Matrix Market files plus a TOML manifest,
the input format read by `python -m cli solve --manifest ...`

Usage:
    python scripts/export_problem.py time_delay exports/time_delay
    python scripts/export_problem.py helmholtz exports/helmholtz --nx 30 --ny 30

Output:
    <dir>/problem.toml, <dir>/b.mtx, <dir>/C0.mtx, ...
"""
import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import PROBLEM_PRESETS
from errors import ChebBiCGError
from problems.generators import GENERATORS
from problems.loader import load_problem_manifest, save_problem


def main():
    parser = argparse.ArgumentParser(description='Export a builtin problem to Matrix Market')
    parser.add_argument('problem', choices=list(PROBLEM_PRESETS))
    parser.add_argument('directory')
    parser.add_argument('--n', type=int)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--nx', type=int)
    parser.add_argument('--ny', type=int)
    parser.add_argument('--a', type=float)
    args = parser.parse_args()

    preset = PROBLEM_PRESETS[args.problem]
    params = dict(preset['params'])
    for key in ('n', 'seed', 'nx', 'ny'):
        value = getattr(args, key)
        if value is not None and key in params:
            params[key] = value
    params['a'] = args.a if args.a is not None else preset['a']

    print("=" * 60)
    print(f"Exporting {preset['display_name']}")
    print("=" * 60)

    try:
        problem = GENERATORS[args.problem](**params)
        print(f"  {problem.descriptor}")
        manifest = save_problem(problem, args.directory)
        print(f"✓ Wrote {len(problem.terms)} term matrices and b to {args.directory}")

        print("Reading the manifest back...", end=" ", flush=True)
        reloaded = load_problem_manifest(manifest)
        if reloaded.n != problem.n or len(reloaded.terms) != len(problem.terms):
            print("✗ size mismatch")
            return 1
        print(f"✓ n={reloaded.n}, {len(reloaded.terms)} terms")
    except (ChebBiCGError, OSError) as e:
        print(f"✗ {e}")
        return 1

    print(f"\nManifest: {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
