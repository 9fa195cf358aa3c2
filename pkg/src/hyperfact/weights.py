"""Exact integer weights of the weighted Bergman spaces.

The weight ``w[n][k]`` is the coefficient of ``x**k`` in ``(1 - x)**(-n)``,
which equals ``C(n + k - 1, k)``.  Row ``n = 0`` is kept as well
(``w[0][0] = 1`` and zero elsewhere) so that the recurrence
``w[n][k] - w[n][k-1] = w[n-1][k]`` holds for every ``n, k >= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient, ``0`` when ``k > n``."""
    if n < 0 or k < 0:
        raise ValueError(f"binomial arguments must be non-negative, got ({n}, {k})")
    return math.comb(n, k)


def weight(n: int, k: int) -> int:
    """Single weight ``w_{n,k}`` without building a table."""
    if n < 0 or k < 0:
        raise ValueError(f"weight indices must be non-negative, got ({n}, {k})")
    if n == 0:
        return 1 if k == 0 else 0
    return math.comb(n + k - 1, k)


@dataclass(frozen=True)
class WeightTable:
    """Immutable table of ``w[n][k]`` for ``0 <= n <= n_max``, ``0 <= k <= k_max``."""

    n_max: int
    k_max: int
    entries: tuple[tuple[int, ...], ...]

    def __getitem__(self, n: int) -> tuple[int, ...]:
        return self.entries[n]

    def covers(self, n: int, k: int) -> bool:
        return 0 <= n <= self.n_max and 0 <= k <= self.k_max

    def get(self, n: int, k: int) -> int:
        if not self.covers(n, k):
            raise IndexError(
                f"weight table covers n <= {self.n_max}, k <= {self.k_max}; "
                f"requested ({n}, {k})")
        return self.entries[n][k]

    def ratio(self, n: int, k: int) -> float:
        """``w[n][k] / w[n][k+1]`` as a float (the Bergman shift coefficient squared)."""
        return self.get(n, k) / self.get(n, k + 1)

    def as_array(self, dtype=np.int64) -> np.ndarray:
        """Fixed-width copy of the table.

        Raises
        ------
        OverflowError
            If an entry does not fit in ``dtype``.
        """
        info = np.iinfo(dtype)
        for n, row in enumerate(self.entries):
            for k, value in enumerate(row):
                if value > info.max:
                    raise OverflowError(
                        f"w[{n}][{k}] = {value} does not fit in {np.dtype(dtype).name}")
        return np.array(self.entries, dtype=dtype)


def build_weight_table(n_max: int, k_max: int) -> WeightTable:
    """Build the weight table up to kernel order ``n_max`` and degree ``k_max``.

    Entries are exact Python integers, so no overflow can occur here;
    use :meth:`WeightTable.as_array` for a checked fixed-width view.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    rows = [tuple(weight(n, k) for k in range(k_max + 1)) for n in range(n_max + 1)]
    return WeightTable(n_max=n_max, k_max=k_max, entries=tuple(rows))
