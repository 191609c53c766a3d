"""
Interpolation check page
Relative error of the Chebyshev interpolant of A(mu) over [-a, a]
"""
import streamlit as st
import polars as pl
import numpy as np
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import PROBLEM_PRESETS, INTERP_CHECK_POINTS, INTERP_CHECK_THRESHOLD
from errors import ChebBiCGError
from chebyshev.interpolation import ChebBasisParams, interp_errors
from cli.commands import interpolate_problem
from problems.evaluator import eval_A_at
from problems.generators import GENERATORS

st.set_page_config(
    page_title="chebbicg - Interpolation",
    page_icon="📈",
    layout="wide"
)

st.title("📈 Interpolation check")
st.markdown("Increase d until the error is below the solver tolerance you intend to use")

problem_name = st.selectbox(
    "Preset",
    options=list(PROBLEM_PRESETS.keys()),
    format_func=lambda x: PROBLEM_PRESETS[x]['display_name']
)
preset = PROBLEM_PRESETS[problem_name]

col1, col2, col3 = st.columns(3)
with col1:
    d = st.number_input("Degree d", min_value=2, max_value=200, value=preset['d'])
with col2:
    a = st.number_input("Half-width a", min_value=0.1, value=float(preset['a']))
with col3:
    threshold = st.number_input("Threshold", value=INTERP_CHECK_THRESHOLD, format="%.1e")

if st.button("Check", type="primary"):
    params = dict(preset['params'])
    if problem_name == 'helmholtz':
        params.update({'nx': 10, 'ny': 10})
        st.caption("Checked on a 10x10 grid")
    try:
        problem = GENERATORS[problem_name](**params, a=a)
        poly = interpolate_problem(problem, ChebBasisParams(a=a, d=int(d)))
        grid = np.linspace(-a, a, INTERP_CHECK_POINTS)
        errors = interp_errors(poly, lambda mu: eval_A_at(problem, mu), grid)
    except ChebBiCGError as e:
        st.error(f"✗ {e}")
        st.stop()

    worst = float(errors.max())
    if worst <= threshold:
        st.success(f"✓ Max relative error {worst:.3e}")
    else:
        st.warning(f"⚠ Max relative error {worst:.3e} exceeds {threshold:.0e}")
    st.dataframe(pl.DataFrame({'mu': grid, 'rel_error': errors}), use_container_width=True, hide_index=True)
