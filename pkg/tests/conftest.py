"""
Shared fixtures: seeded generators and small random matrix polynomials
"""
import numpy as np
import pytest

from linearization.companion import assemble_dense, build_companion
from linearization.preconditioner import InnerSpec, build_preconditioner
from problems.generators import gen_random_poly


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_poly():
    """P of size 5 and degree 6 on [-2, 2], with b"""
    return gen_random_poly(5, 6, a=2.0, seed=7)


@pytest.fixture
def small_op(small_poly):
    poly, _ = small_poly
    return build_companion(poly)


@pytest.fixture
def dense_pencil(small_op):
    return assemble_dense(small_op)


@pytest.fixture
def make_instance():
    """Factory for (op, b, prec) with direct inner solves"""
    def _make(n=6, d=5, a=2.0, sigma=0.3, seed=0, inner=None):
        poly, b = gen_random_poly(n, d, a=a, seed=seed)
        op = build_companion(poly)
        prec = build_preconditioner(op, sigma, inner or InnerSpec(mode='direct'))
        return op, b, prec
    return _make
