"""
User-supplied problems: Matrix Market files plus a TOML manifest

Manifest layout:

    name = "my_problem"
    a = 2.0
    rhs = "b.mtx"

    [[terms]]
    matrix = "C0.mtx"
    f = "one"

    [[terms]]
    matrix = "C1.mtx"
    f = "samples"
    samples = "f1_nodes.csv"    # columns: node, value (cheb_nodes order)
"""
import json
import tomllib
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import polars as pl

from config import F_TAGS
from errors import ConfigError, DimensionMismatchError
from chebyshev.interpolation import ChebBasisParams, cheb_nodes
from linalg.matrix_market import read_matrix_market, read_vector_market, write_matrix_market
from problems.evaluator import ParamProblem, validate_problem

NODE_TOLERANCE = 1e-12


def load_node_samples(path: Union[str, Path], expected_nodes: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read a node-sample table with columns 'node' and 'value'.

    When expected_nodes is given, node positions must match within 1e-12 * max|node|.

    Returns:
        Tuple of (nodes, values)
    """
    df = pl.read_csv(path)
    missing = {'node', 'value'} - set(df.columns)
    if missing:
        raise ConfigError(f"{path}: missing column(s) {sorted(missing)}")
    nodes = df['node'].to_numpy().astype(np.float64)
    values = df['value'].to_numpy().astype(np.float64)
    if expected_nodes is not None:
        if nodes.shape != expected_nodes.shape:
            raise DimensionMismatchError(
                f"{path}: {nodes.size} node samples, expected d+1 = {expected_nodes.size}")
        scale = max(1.0, float(np.abs(expected_nodes).max()))
        if np.abs(nodes - expected_nodes).max() > NODE_TOLERANCE * scale:
            raise ConfigError(f"{path}: node positions do not match the Chebyshev nodes for this degree")
    return nodes, values


def load_problem_manifest(path: Union[str, Path]) -> ParamProblem:
    """
    Load a problem described by a TOML manifest.

    Paths inside the manifest are relative to the manifest's directory.
    Node positions of sampled terms are kept in metadata['sample_nodes']
    and checked by check_sample_nodes once d is known.
    """
    path = Path(path)
    try:
        with open(path, 'rb') as f:
            manifest = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}")
    base = path.parent

    for key in ('a', 'rhs', 'terms'):
        if key not in manifest:
            raise ConfigError(f"{path}: missing required key '{key}'")

    terms = []
    sample_nodes = {}
    for idx, entry in enumerate(manifest['terms']):
        if 'matrix' not in entry or 'f' not in entry:
            raise ConfigError(f"{path}: term {idx} needs 'matrix' and 'f'")
        tag = entry['f']
        if tag not in F_TAGS:
            raise ConfigError(f"{path}: term {idx} has unknown f '{tag}' (valid: {', '.join(F_TAGS)})")
        C = read_matrix_market(base / entry['matrix'])
        if tag == 'samples':
            if 'samples' not in entry:
                raise ConfigError(f"{path}: term {idx} uses f = 'samples' without a 'samples' table")
            nodes, f = load_node_samples(base / entry['samples'])
            sample_nodes[idx] = nodes
        else:
            f = tag
        terms.append((C, f))

    problem = ParamProblem(
        terms=terms,
        b=read_vector_market(base / manifest['rhs']),
        a=float(manifest['a']),
        descriptor=manifest.get('description', f"manifest {path}"),
        name=manifest.get('name', path.stem),
        metadata={'manifest': str(path), 'sample_nodes': sample_nodes},
    )
    is_valid, msg = validate_problem(problem)
    if not is_valid:
        raise ConfigError(f"{path}: {msg}")
    return problem


def check_sample_nodes(problem: ParamProblem, params: ChebBasisParams) -> Tuple[bool, str]:
    """
    Check that every sampled term was tabulated at cheb_nodes(params).

    Returns:
        Tuple of (is_valid, message)
    """
    expected = cheb_nodes(params)
    scale = max(1.0, float(np.abs(expected).max()))
    for idx, nodes in problem.metadata.get('sample_nodes', {}).items():
        if nodes.shape != expected.shape:
            return False, f"Term {idx}: {nodes.size} node samples, expected d+1 = {expected.size}"
        if np.abs(nodes - expected).max() > NODE_TOLERANCE * scale:
            return False, f"Term {idx}: node positions do not match the Chebyshev nodes for d={params.d}"
    return True, "OK"


def _toml_str(value: str) -> str:
    """TOML basic string; JSON escapes are a subset of TOML's"""
    return json.dumps(str(value), ensure_ascii=False)


def save_problem(problem: ParamProblem, directory: Union[str, Path],
                 params: Optional[ChebBasisParams] = None) -> Path:
    """
    Write each C_i and b as Matrix Market plus a manifest that
    load_problem_manifest reads back.

    Args:
        problem: Problem to export
        directory: Output directory (created if missing)
        params: Needed when the problem has sampled terms, to tabulate the nodes

    Returns:
        Path of the manifest
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [
        f'name = {_toml_str(problem.name)}',
        f'description = {_toml_str(problem.descriptor)}',
        f'a = {problem.a!r}',
        'rhs = "b.mtx"',
        '',
    ]
    write_matrix_market(directory / 'b.mtx', problem.b)
    for idx, (C, f) in enumerate(problem.terms):
        matrix_file = f'C{idx}.mtx'
        write_matrix_market(directory / matrix_file, C)
        lines.append('[[terms]]')
        lines.append(f'matrix = {_toml_str(matrix_file)}')
        if isinstance(f, str):
            lines.append(f'f = "{f}"')
        else:
            if params is None:
                raise ConfigError(f"Term {idx} is sampled; pass the interpolation parameters to export it")
            samples_file = f'C{idx}_samples.csv'
            pl.DataFrame({'node': cheb_nodes(params), 'value': np.asarray(f)}).write_csv(directory / samples_file)
            lines.append('f = "samples"')
            lines.append(f'samples = {_toml_str(samples_file)}')
        lines.append('')

    manifest = directory / 'problem.toml'
    manifest.write_text('\n'.join(lines))
    return manifest
