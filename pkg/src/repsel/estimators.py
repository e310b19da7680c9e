"""scikit-learn style front ends for snippet selection and the k-means baseline.

Both estimators take an hours x features array (or an :class:`AnnualSeries`)
in ``fit``. After fitting, ``labels_`` maps every stride-long segment to a
position in ``chosen_``, ``predict`` does the same for another series with
the same stride and features, and ``transform`` returns segment-to-
representative distances. Scaling is left to the caller, e.g.
``make_pipeline(FeatureScaler(), SnippetSelector(length_days=3, n_periods=12))``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_series_array
from .distance import build_matrix
from .exact import solve_exact
from .kmeans import kmeans_medoid
from .selection import k_for_target_days, local_search_swap, solve_greedy
from .timeseries import AnnualSeries, SliceGeometry

__all__ = ["KMeansMedoidSelector", "SnippetSelector"]

SOLVERS = ("exact", "greedy", "swap")


def _as_series(X, stride: int) -> AnnualSeries:
    if isinstance(X, AnnualSeries):
        return X
    X = check_series_array(X, stride=stride)
    return AnnualSeries(X, tuple(f"x{c}" for c in range(X.shape[1])))


class _PeriodSelectorMixin(ClusterMixin, TransformerMixin):
    """Shared predict/transform over fitted representative periods."""

    def _segment_distances(self, X) -> np.ndarray:
        check_is_fitted(self, "representatives_")
        series = _as_series(X, self.stride)
        if series.n_features != self.n_features_in_:
            raise ValueError(f"X has {series.n_features} features, fitted with {self.n_features_in_}")
        u = self.stride
        segments = series.values.reshape(series.hours // u, -1)
        days = self.representatives_.reshape(self.representatives_.shape[0], -1, u * self.n_features_in_)
        out = np.full((segments.shape[0], days.shape[0]), np.inf)
        for r in range(days.shape[0]):
            for x in range(days.shape[1]):
                diff = segments - days[r, x]
                np.minimum(out[:, r], np.sqrt(np.einsum("ij,ij->i", diff, diff)), out=out[:, r])
        return out

    def transform(self, X):
        """Distance from each segment of ``X`` to each representative period."""
        return self._segment_distances(X)

    def predict(self, X):
        """Position in ``chosen_`` of the closest representative for each segment."""
        return np.argmin(self._segment_distances(X), axis=1)

    def _store(self, series: AnnualSeries, selection) -> None:
        g = selection.geometry
        self.selection_ = selection
        self.geometry_ = g
        self.chosen_ = np.array(selection.chosen)
        self.weights_ = np.asarray(selection.weights)
        self.objective_ = selection.objective
        self.labels_ = np.searchsorted(self.chosen_, selection.assignment)
        self.representatives_ = np.stack([series.values[j * g.u : j * g.u + g.s] for j in selection.chosen])
        self.n_features_in_ = series.n_features


class SnippetSelector(_PeriodSelectorMixin, BaseEstimator):
    """Pick representative multi-day periods minimising total day distance.

    Parameters
    ----------
    length_days : int
        Period length in strides (days when ``stride=24``).
    n_periods : int, optional
        Number of periods ``k``. Required unless ``target_days`` is given.
    target_days : float, optional
        Total modelled days; ``k = round(target_days / length_days)``.
    solver : {"exact", "greedy", "swap"}
    time_limit, node_limit : optional budgets for the exact solver.
    stride : int
        Hours per segment.
    """

    def __init__(
        self,
        length_days: int = 1,
        n_periods: int | None = None,
        *,
        target_days: float | None = None,
        solver: str = "exact",
        time_limit: float | None = None,
        node_limit: int | None = None,
        stride: int = 24,
    ):
        self.length_days = length_days
        self.n_periods = n_periods
        self.target_days = target_days
        self.solver = solver
        self.time_limit = time_limit
        self.node_limit = node_limit
        self.stride = stride

    def _k(self) -> int:
        if self.n_periods is not None:
            return self.n_periods
        if self.target_days is None:
            raise ValueError("set n_periods or target_days")
        return k_for_target_days(self.target_days, self.length_days)

    def fit(self, X, y=None):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        series = _as_series(X, self.stride)
        geometry = SliceGeometry(s=self.length_days * self.stride, u=self.stride, t=series.hours)
        D = build_matrix(series, geometry)
        k = self._k()
        if self.solver == "greedy":
            selection = solve_greedy(D, k)
        elif self.solver == "swap":
            selection = local_search_swap(D, solve_greedy(D, k))
        else:
            selection = solve_exact(D, k, time_limit=self.time_limit, node_limit=self.node_limit)
        self.distance_matrix_ = D
        self._store(series, selection)
        return self


class KMeansMedoidSelector(_PeriodSelectorMixin, BaseEstimator):
    """k-means over day vectors; each cluster represented by its medoid day."""

    def __init__(self, n_periods: int = 8, *, random_state: int = 0, max_iter: int = 300, stride: int = 24):
        self.n_periods = n_periods
        self.random_state = random_state
        self.max_iter = max_iter
        self.stride = stride

    def fit(self, X, y=None):
        series = _as_series(X, self.stride)
        geometry = SliceGeometry(s=self.stride, u=self.stride, t=series.hours)
        selection = kmeans_medoid(series, self.n_periods, seed=self.random_state, max_iters=self.max_iter,
                                  geometry=geometry)
        self._store(series, selection)
        self.inertia_history_ = selection.stats["inertia_history"]
        return self
