"""Day-aligned distance between every year segment and every candidate period.

For segment ``i`` (one stride-long block of the year) and candidate period
``j`` (``s`` hours starting at hour ``j*u``), the entry is the smallest
Euclidean distance between the segment and any of the ``s/u`` stride-aligned
blocks of the period. Blocks are never compared at a phase offset: an
afternoon is only compared with afternoons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .timeseries import AnnualSeries, SliceGeometry

__all__ = ["DistanceMatrix", "SubsequenceDistance", "block_distances", "build_matrix", "day_distance"]

NORMS = ("euclidean",)


def day_distance(a, b) -> float:
    """Euclidean norm of ``a - b`` over the flattened blocks."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"block shapes differ: {a.shape} vs {b.shape}")
    diff = (a - b).ravel()
    return float(np.sqrt(np.dot(diff, diff)))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """``d[i, j]``: distance from segment ``i`` to candidate period ``j`` (n x m)."""

    d: np.ndarray
    geometry: SliceGeometry
    norm: str = "euclidean"

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64, copy=True)
        g = self.geometry
        if d.shape != (g.n, g.m):
            raise ValueError(f"matrix shape {d.shape} does not match geometry (n={g.n}, m={g.m})")
        if not np.all(np.isfinite(d)) or (d < 0).any():
            raise ValueError("distances must be finite and non-negative")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @classmethod
    def from_array(cls, d, u: int = 1) -> DistanceMatrix:
        """Wrap a bare n x m matrix (``m <= n``), inferring ``s/u = n - m + 1``."""
        d = np.asarray(d, dtype=np.float64)
        if d.ndim != 2 or d.shape[1] > d.shape[0] or d.shape[1] == 0:
            raise ValueError(f"expected an n x m matrix with 1 <= m <= n, got shape {d.shape}")
        n, m = d.shape
        return cls(d, SliceGeometry(s=(n - m + 1) * u, u=u, t=n * u))

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def m(self) -> int:
        return self.d.shape[1]


def block_distances(series: AnnualSeries | np.ndarray, u: int) -> np.ndarray:
    """Symmetric n x n matrix of Euclidean distances between stride blocks."""
    values = series.values if isinstance(series, AnnualSeries) else np.asarray(series, dtype=np.float64)
    blocks = values.reshape(values.shape[0] // u, -1)
    n = blocks.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        diff = blocks - blocks[i]
        out[i] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def build_matrix(series: AnnualSeries, geometry: SliceGeometry, norm: str = "euclidean") -> DistanceMatrix:
    """Distance from each of the ``n`` segments to each of the ``m`` candidate periods."""
    if norm not in NORMS:
        raise ValueError(f"unsupported norm {norm!r}; available: {NORMS}")
    if geometry.t != series.hours:
        raise ValueError(f"geometry built for t={geometry.t} but series has {series.hours} hours")
    days = block_distances(series, geometry.u)
    m, width = geometry.m, geometry.days_per_period
    # column j of the result covers blocks j .. j+width-1
    d = days[:, :m].copy()
    for x in range(1, width):
        np.minimum(d, days[:, x : x + m], out=d)
    return DistanceMatrix(d, geometry, norm)


class SubsequenceDistance(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`build_matrix`.

    ``fit`` records the geometry for a series length; ``transform`` maps an
    hours x features array to the n x m distance array.
    """

    def __init__(self, length_days: int = 1, stride: int = 24, norm: str = "euclidean"):
        self.length_days = length_days
        self.stride = stride
        self.norm = norm

    def fit(self, X, y=None):
        series = _as_series(X)
        self.geometry_ = SliceGeometry(s=self.length_days * self.stride, u=self.stride, t=series.hours)
        self.n_features_in_ = series.n_features
        return self

    def transform(self, X):
        check_is_fitted(self, "geometry_")
        series = _as_series(X)
        return build_matrix(series, self.geometry_, self.norm).d


def _as_series(X) -> AnnualSeries:
    if isinstance(X, AnnualSeries):
        return X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return AnnualSeries(X, tuple(f"x{c}" for c in range(X.shape[1])))
