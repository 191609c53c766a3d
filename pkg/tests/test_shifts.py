import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import ConfigError, DimensionMismatchError
from solvers.shifts import ColumnStore, build_shift_set


def test_shifts_sorted_by_distance_from_sigma():
    shifts = build_shift_set(0.2, [1.0, -0.5, 0.3, 0.1], a=2.0)
    assert_allclose(shifts.mus, [0.1, 0.3, -0.5, 1.0])
    assert shifts.farthest == 3
    assert len(shifts) == 4
    assert_allclose(shifts.omegas, -1.0 / (0.2 - shifts.mus))


def test_ties_broken_toward_larger_mu():
    shifts = build_shift_set(0.0, [0.5, -0.5])
    assert_allclose(shifts.mus, [-0.5, 0.5])


@pytest.mark.parametrize('sigma, mus, expected', [
    (0.3, [0.4, 0.2], [0.2, 0.4]),
    (0.2, [0.3, 0.1], [0.1, 0.3]),
    (-0.7, [-0.6, -0.8, 0.5], [-0.8, -0.6, 0.5]),
])
def test_ties_survive_rounding_of_distances(sigma, mus, expected):
    # 0.4 - 0.3 and 0.3 - 0.2 differ in the last bits
    shifts = build_shift_set(sigma, mus, a=2.0)
    assert shifts.mus.tolist() == expected


def test_user_order_restored():
    mus = [1.0, -0.5, 0.3, 0.1]
    shifts = build_shift_set(0.2, mus)
    assert shifts.user_mus() == mus
    per_sorted = shifts.mus * 10
    assert_allclose(shifts.to_user_order(per_sorted), np.array(mus) * 10)

    table = np.vstack([shifts.mus, 2 * shifts.mus])
    assert_allclose(shifts.to_user_order(table, axis=1), np.vstack([mus, 2 * np.array(mus)]))
    assert_allclose(shifts.to_user_order(table.T, axis=0), np.vstack([mus, 2 * np.array(mus)]).T)


@pytest.mark.parametrize('mus, a', [
    ([], None),
    ([0.3, 0.2], None),
    ([0.5, 3.0], 2.0),
    ([np.nan], None),
])
def test_invalid_shift_sets(mus, a):
    with pytest.raises(ConfigError):
        build_shift_set(0.2, mus, a=a)


def test_column_store_grows():
    store = ColumnStore(3, capacity=1)
    for k in range(5):
        store.append(np.full(3, float(k)))
    assert len(store) == 5
    assert store.as_matrix().shape == (3, 5)
    assert_allclose(store[-1], 4.0)
    assert_allclose(store[2], 2.0)
    assert_allclose(store.matvec(np.array([1.0, 1.0])), 1.0)
    with pytest.raises(IndexError):
        store[5]


def test_column_store_rejects_wrong_length():
    store = ColumnStore(3)
    with pytest.raises(DimensionMismatchError):
        store.append(np.ones(4))
