"""
Command-line front end
"""
from cli.run_config import RunConfig, parse_mu_list, build_run_config, load_run_file, validate_run_config
from cli.commands import PreparedRun, prepare_run, run_solver, cmd_solve, cmd_interp_check, cmd_verify

__all__ = [
    'RunConfig',
    'parse_mu_list',
    'build_run_config',
    'load_run_file',
    'validate_run_config',
    'PreparedRun',
    'prepare_run',
    'run_solver',
    'cmd_solve',
    'cmd_interp_check',
    'cmd_verify',
]
