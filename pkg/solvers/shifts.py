"""
Shift sets and growable column storage shared by both outer solvers
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from errors import ConfigError, DimensionMismatchError

# |mu - sigma| is compared at this many decimals, so equidistant shifts tie exactly
TIE_DECIMALS = 12


@dataclass(frozen=True)
class ShiftSet:
    """
    Shifts mu_l sorted by |mu_l - sigma| ascending, so the last one is the
    farthest from sigma (ties broken toward the larger mu).

    order[l] is the position of sorted shift l in the caller's list.
    """
    sigma: float
    mus: np.ndarray
    omegas: np.ndarray
    order: np.ndarray

    def __len__(self) -> int:
        return len(self.mus)

    @property
    def farthest(self) -> int:
        return len(self.mus) - 1

    def to_user_order(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        """Reorder an array indexed by sorted shift back to the caller's order"""
        values = np.moveaxis(np.asarray(values), axis, -1)
        out = np.empty_like(values)
        out[..., self.order] = values
        return np.moveaxis(out, -1, axis)

    def user_mus(self) -> List[float]:
        mus = np.empty_like(self.mus)
        mus[self.order] = self.mus
        return mus.tolist()


def build_shift_set(sigma: float, mus: Sequence[float], a: Optional[float] = None) -> ShiftSet:
    """
    Validate and order shifts.

    Raises:
        ConfigError: If the list is empty, a shift equals sigma, or lies outside [-a, a]
    """
    mus = np.asarray(list(mus), dtype=np.float64)
    if mus.size == 0:
        raise ConfigError("At least one shift mu is required")
    if not np.all(np.isfinite(mus)):
        raise ConfigError("Shifts must be finite")
    if np.any(mus == sigma):
        raise ConfigError(f"Shift mu equal to sigma={sigma} is not allowed (omega undefined)")
    if a is not None and np.any(np.abs(mus) > a):
        bad = mus[np.abs(mus) > a][0]
        raise ConfigError(f"Shift mu={bad} lies outside the interpolation interval [-{a}, {a}]")

    order = np.array(sorted(range(mus.size), key=lambda k: (round(abs(mus[k] - sigma), TIE_DECIMALS), mus[k])),
                     dtype=np.int64)
    sorted_mus = mus[order]
    omegas = -1.0 / (-sorted_mus + sigma)
    return ShiftSet(sigma=float(sigma), mus=sorted_mus, omegas=omegas, order=order)


class ColumnStore:
    """Columns of length m stored contiguously, capacity doubled on demand"""

    def __init__(self, m: int, capacity: int = 16):
        self.m = m
        self._data = np.empty((m, max(capacity, 1)))
        self.size = 0

    def append(self, column: np.ndarray):
        if column.shape != (self.m,):
            raise DimensionMismatchError(f"Column of shape {column.shape}, expected ({self.m},)")
        if self.size == self._data.shape[1]:
            grown = np.empty((self.m, 2 * self._data.shape[1]))
            grown[:, :self.size] = self._data[:, :self.size]
            self._data = grown
        self._data[:, self.size] = column
        self.size += 1

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, k: int) -> np.ndarray:
        if k < 0:
            k += self.size
        if not 0 <= k < self.size:
            raise IndexError(k)
        return self._data[:, k]

    def as_matrix(self) -> np.ndarray:
        return self._data[:, :self.size]

    def matvec(self, y: np.ndarray) -> np.ndarray:
        """Sum of y_k times column k over the first len(y) columns"""
        return self._data[:, :len(y)] @ y
