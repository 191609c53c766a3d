"""
Parameterized problems A(mu) = sum_i f_i(mu) C_i
"""
from problems.evaluator import ParamProblem, validate_problem, eval_f, eval_A_at, sample_f_at_nodes, F_FUNCTIONS
from problems.generators import make_rng, gen_time_delay, gen_helmholtz_fd, gen_random_poly, laplacian_2d, grid_points, GENERATORS
from problems.loader import load_problem_manifest, load_node_samples, check_sample_nodes, save_problem

__all__ = [
    'ParamProblem',
    'validate_problem',
    'eval_f',
    'eval_A_at',
    'sample_f_at_nodes',
    'F_FUNCTIONS',
    'make_rng',
    'gen_time_delay',
    'gen_helmholtz_fd',
    'gen_random_poly',
    'laplacian_2d',
    'grid_points',
    'GENERATORS',
    'load_problem_manifest',
    'load_node_samples',
    'check_sample_nodes',
    'save_problem',
]
