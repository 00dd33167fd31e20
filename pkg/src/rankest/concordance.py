"""Fast counting of strictly concordant pairs.

The rank objectives repeatedly need sums of the form

    sum over i != j of  w_i * 1(a_i < a_j) * 1(b_i < b_j)

i.e. the total weight carried by the smaller element of every pair that is
strictly increasing in both coordinates.  A binary indexed tree over the
dense ranks of ``b`` gives this in O(n log n): observations are visited in
increasing order of ``a`` (groups of tied ``a`` are queried before they are
inserted, so ties contribute nothing), and each query asks for the weight
already inserted at strictly smaller ``b`` rank.

Weights are accumulated as Python integers, so counts are exact for the
indicator-valued objectives at any sample size.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidArgument


class FenwickTree:
    """Binary indexed tree over 0-based positions with integer values."""

    def __init__(self, size: int):
        if size < 1:
            raise InvalidArgument(f"FenwickTree size must be positive, got {size}")
        self._size = size
        self._tree = [0] * (size + 1)

    def add(self, index: int, value: int) -> None:
        """Add ``value`` at position ``index`` (0-based)."""
        if not 0 <= index < self._size:
            raise InvalidArgument(
                f"index {index} out of range for FenwickTree of size {self._size}"
            )
        j = index + 1
        while j <= self._size:
            self._tree[j] += value
            j += j & -j

    def prefix_sum(self, index: int) -> int:
        """Total value stored at positions ``0..index``; 0 when ``index < 0``."""
        if index >= self._size:
            raise InvalidArgument(
                f"index {index} out of range for FenwickTree of size {self._size}"
            )
        j = index + 1
        total = 0
        while j > 0:
            total += self._tree[j]
            j -= j & -j
        return total


def concordant_weight_sum(a, b, weights) -> int:
    """Sum of ``weights[i]`` over pairs with ``a_i < a_j`` and ``b_i < b_j``.

    The weight of a pair is taken from the observation that is strictly
    smaller in both coordinates; ties in either coordinate contribute
    nothing.  Weights must be integer-valued.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    w = np.asarray(weights)
    n = a.shape[0]
    if not (b.shape[0] == n and w.shape[0] == n):
        raise DimensionMismatch(
            f"a, b and weights must have equal length, got {n}, {b.shape[0]}, {w.shape[0]}"
        )
    w_int = w.astype(np.int64)
    if not np.array_equal(w_int, w):
        raise InvalidArgument("weights must be integer-valued")

    # Dense 0-based ranks of b; ties share a rank so strict queries stop one short.
    _, b_rank = np.unique(b, return_inverse=True)
    order = np.argsort(a, kind="stable")
    a_sorted = a[order]

    tree = FenwickTree(int(b_rank.max()) + 1)
    total = 0
    start = 0
    while start < n:
        stop = start
        while stop < n and a_sorted[stop] == a_sorted[start]:
            stop += 1
        group = order[start:stop]
        for idx in group:
            rk = int(b_rank[idx])
            if rk > 0:
                total += tree.prefix_sum(rk - 1)
        for idx in group:
            tree.add(int(b_rank[idx]), int(w_int[idx]))
        start = stop
    return total


def fast_concordance(u, y) -> int:
    """Number of pairs ``i != j`` with ``y_i > y_j`` and ``u_i > u_j``.

    Equivalently the count of unordered pairs on which ``y`` and ``u``
    strictly agree in order.  Exact integer result in O(n log n).
    """
    u = np.asarray(u)
    n = u.shape[0]
    return concordant_weight_sum(u, y, np.ones(n, dtype=np.int64))
