"""Compiled inner loops for the Lagrangian bound.

All three walk each segment's distances in ascending order (``sd`` / ``so`` are
the row-sorted values and their column indices) and stop at the first entry
not below the segment's multiplier, so the work is proportional to the number
of (segment, column) pairs that actually contribute.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def reduced_costs(sd, so, lam, active, rho):
    """``rho[j] = sum_i min(0, D[i, j] - lam[i])`` over active columns (others left at 0)."""
    n, m = sd.shape
    rho[:] = 0.0
    for i in range(n):
        li = lam[i]
        for p in range(m):
            v = sd[i, p]
            if v >= li:
                break
            j = so[i, p]
            if active[j]:
                rho[j] += v - li


@njit(cache=True)
def service_counts(sd, so, lam, picked, out):
    """``out[i]`` = number of picked columns with ``D[i, j] < lam[i]``."""
    n, m = sd.shape
    for i in range(n):
        li = lam[i]
        c = 0
        for p in range(m):
            if sd[i, p] >= li:
                break
            if picked[so[i, p]]:
                c += 1
        out[i] = c


@njit(cache=True)
def column_coverage(sd, so, lam, active, out):
    """``out[j]`` = number of segments with ``D[i, j] < lam[i]`` for active columns."""
    n, m = sd.shape
    out[:] = 0
    for i in range(n):
        li = lam[i]
        for p in range(m):
            if sd[i, p] >= li:
                break
            j = so[i, p]
            if active[j]:
                out[j] += 1


def sorted_rows(d: np.ndarray):
    order = np.argsort(d, axis=1, kind="stable")
    return np.ascontiguousarray(np.take_along_axis(d, order, axis=1)), np.ascontiguousarray(order)
