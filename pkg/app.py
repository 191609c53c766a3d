"""
chebbicg - Interactive Streamlit console
Pick a problem, set the interpolation and solver parameters, run, and
inspect per-shift convergence
"""
import streamlit as st
import polars as pl
from datetime import datetime
import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import (
    PROJECT_NAME, PROJECT_DESCRIPTION, PROBLEM_PRESETS, TIMEZONE,
    DEFAULT_MAXIT, DEFAULT_EPSILON
)
from errors import ChebBiCGError
from cli.run_config import (
    SOLVERS, SIDES, TOL_POLICIES, INNER_METHODS,
    parse_mu_list, preset_config, validate_run_config
)
from cli.commands import prepare_run, run_solver, summarize_shifts

# Page config
st.set_page_config(
    page_title=PROJECT_NAME,
    page_icon="📐",
    layout="wide",
    initial_sidebar_state="expanded"
)

# Grid sizes offered for the helmholtz preset
HELMHOLTZ_GRIDS = [10, 20, 30, 50, 100]


def init_session_state():
    """Initialize session state variables"""
    if 'report' not in st.session_state:
        st.session_state.report = None
    if 'run_config' not in st.session_state:
        st.session_state.run_config = None
    if 'run_time' not in st.session_state:
        st.session_state.run_time = None
    if 'run_error' not in st.session_state:
        st.session_state.run_error = None


def render_header():
    st.title(f"📐 {PROJECT_NAME}")
    st.markdown(PROJECT_DESCRIPTION)


def render_sidebar():
    """Run settings; returns a RunConfig"""
    with st.sidebar:
        st.header("Problem")
        problem = st.selectbox(
            "Preset",
            options=list(PROBLEM_PRESETS.keys()),
            format_func=lambda x: PROBLEM_PRESETS[x]['display_name']
        )
        preset = PROBLEM_PRESETS[problem]
        st.caption(preset['description'])
        config = preset_config(problem)

        if problem == 'time_delay':
            config.n = st.number_input("n", min_value=2, max_value=2000, value=preset['params']['n'])
            config.seed = st.number_input("Seed", min_value=0, value=preset['params']['seed'])
        else:
            grid = st.selectbox("Interior grid points per side", options=HELMHOLTZ_GRIDS, index=2)
            config.nx = config.ny = grid

        st.header("Interpolation")
        col1, col2 = st.columns(2)
        with col1:
            config.d = st.number_input("Degree d", min_value=2, max_value=200, value=preset['d'])
        with col2:
            config.a = st.number_input("Half-width a", min_value=0.1, value=float(preset['a']))

        st.header("Solver")
        config.solver = st.radio("Algorithm", options=list(SOLVERS), horizontal=True)
        config.side = st.radio(
            "Preconditioning",
            options=list(SIDES),
            index=list(SIDES).index(preset['side']) if config.solver == 'exact' else 0,
            horizontal=True,
            disabled=config.solver != 'exact'
        )
        if config.solver != 'exact':
            config.side = 'right'
        config.sigma = st.number_input("sigma", value=float(preset['sigma']), format="%.4f")
        mu_text = st.text_input(
            "Shifts mu",
            value=", ".join(f"{mu:g}" for mu in preset['mus']),
            help='Comma separated, or linspace(lo, hi, count)'
        )
        try:
            config.mus = parse_mu_list(mu_text)
        except ChebBiCGError as e:
            st.error(str(e))
            config.mus = []
        config.tol = st.number_input("Tolerance", value=float(preset['tol']), format="%.1e")
        config.maxit = st.number_input("Max iterations", min_value=1, value=DEFAULT_MAXIT)

        if config.solver == 'inexact':
            config.inner = st.selectbox("Inner solves", options=['iterative', 'direct'])
            config.inner_method = st.selectbox("Inner method", options=list(INNER_METHODS))
            config.tol_policy = st.selectbox("Inner tolerance policy", options=list(TOL_POLICIES))
            config.epsilon = st.number_input("epsilon", value=DEFAULT_EPSILON, format="%.1e")
        return config


def run(config):
    """Validate, build and solve; results go to session state"""
    st.session_state.report = None
    st.session_state.run_error = None
    is_valid, msg = validate_run_config(config)
    if not is_valid:
        st.session_state.run_error = msg
        return
    try:
        with st.spinner("Interpolating, factoring P(sigma) and iterating..."):
            prepared = prepare_run(config)
            st.session_state.report = run_solver(config, prepared)
    except ChebBiCGError as e:
        st.session_state.run_error = str(e)
        return
    st.session_state.run_config = config
    st.session_state.run_time = datetime.now(TIMEZONE).strftime('%Y-%m-%d %H:%M:%S %Z')


def render_results():
    """Per-shift convergence table and per-iteration history"""
    if st.session_state.run_error:
        st.error(f"✗ {st.session_state.run_error}")
        return
    report = st.session_state.report
    if report is None:
        st.info("Set the parameters in the sidebar and press Run")
        return

    if report.all_converged:
        st.success(f"✓ All {len(report.mus)} shifts converged in {report.iterations} iterations")
    else:
        st.warning(f"⚠ {int(report.converged.sum())} of {len(report.mus)} shifts converged "
                   f"(termination: {report.termination})")

    col1, col2, col3, col4 = st.columns(4)
    col1.metric("Iterations", report.iterations)
    col2.metric("Inner solves", report.inner_solves)
    col3.metric("CPU seconds", f"{report.cpu_seconds[-1]:.2f}" if report.cpu_seconds else "0")
    col4.metric("Residual", report.residual_kind)

    per_shift, per_iteration = summarize_shifts(report)
    st.subheader("Shifts")
    st.dataframe(per_shift, use_container_width=True, hide_index=True)

    st.subheader("Iterations")
    mu_filter = st.selectbox("Shift", options=["all"] + [f"{mu:g}" for mu in report.mus])
    if mu_filter != "all":
        per_iteration = per_iteration.filter(pl.col('mu') == float(mu_filter))
    st.dataframe(per_iteration, use_container_width=True, hide_index=True)

    if report.solver == 'inexact':
        with st.expander("Inner solves"):
            st.dataframe(pl.DataFrame({
                'iteration': list(range(1, len(report.tol_history) + 1)),
                'inner_tol': report.tol_history,
                'clamped': report.tol_flags,
                'inner_residual': report.inner_residuals,
                'inner_iterations': report.inner_iterations,
            }), use_container_width=True, hide_index=True)

    if report.message:
        st.caption(report.message)
    st.caption(f"Run at {st.session_state.run_time}")


def main():
    """Main application entry point"""
    init_session_state()
    render_header()
    config = render_sidebar()

    if st.button("▶ Run", type="primary"):
        run(config)

    st.markdown("---")
    render_results()


if __name__ == "__main__":
    main()
