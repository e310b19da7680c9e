"""k-means over whole-day vectors, represented by cluster medoids.

The baseline against which snippet selection is compared: each day becomes
a ``u*F`` vector, Lloyd's algorithm clusters them from a k-means++ start, and
each cluster is represented by the member day with the smallest summed
Euclidean distance to the other members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import kmeans_plusplus

from ._validation import HOURS_PER_DAY, GeometryError, check_positive_int
from .distance import DistanceMatrix, build_matrix
from .selection import HEURISTIC, Selection, assign, objective_of
from .timeseries import AnnualSeries, SliceGeometry

__all__ = ["LloydResult", "day_vectors", "kmeans_medoid", "lloyd", "medoid"]

@dataclass
class LloydResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia_history: list
    iterations: int
    converged: bool
    reseeded: int


def day_vectors(series: AnnualSeries, u: int = HOURS_PER_DAY) -> np.ndarray:
    """n x (u*F) matrix; row ``i`` is day ``i`` flattened hour-major."""
    return series.values.reshape(series.hours // u, -1)


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    out = np.empty((X.shape[0], centers.shape[0]))
    for c in range(centers.shape[0]):
        diff = X - centers[c]
        out[:, c] = np.einsum("ij,ij->i", diff, diff)
    return out


def lloyd(X: np.ndarray, k: int, seed: int = 0, max_iters: int = 300) -> LloydResult:
    """Lloyd iterations from a seeded k-means++ start.

    Stops at an assignment fixed point or after ``max_iters`` assignment
    steps. ``inertia_history[t]`` is the within-cluster sum of squares right
    after assignment step ``t``. A cluster left empty by an update is moved
    onto the point currently farthest from its own center (lowest index on
    ties, never the same point twice in one step).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    k = check_positive_int(k, "k")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of days ({n})")
    centers, _ = kmeans_plusplus(X, k, random_state=seed)
    labels = None
    history = []
    reseeded = 0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        sq = _sq_dists(X, centers)
        new_labels = np.argmin(sq, axis=1)
        history.append(math.fsum(sq[np.arange(n), new_labels].tolist()))
        if labels is not None and np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        centers = np.zeros_like(centers)
        np.add.at(centers, labels, X)
        empty = np.flatnonzero(counts == 0)
        nonempty = counts > 0
        centers[nonempty] /= counts[nonempty, None]
        if empty.size:
            own = sq[np.arange(n), labels].copy()
            for c in empty:
                far = int(np.argmax(own))
                centers[c] = X[far]
                own[far] = -np.inf
                reseeded += 1
    labels = _fill_empty(X, labels, centers, k)
    return LloydResult(labels, centers, history, it, converged, reseeded)


def _fill_empty(X, labels, centers, k) -> np.ndarray:
    # duplicate points can keep a cluster empty at the fixed point; hand it the
    # farthest point of a cluster that has more than one member
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        own = np.einsum("ij,ij->i", X - centers[labels], X - centers[labels])
        own[counts[labels] < 2] = -np.inf
        far = int(np.argmax(own))
        counts[labels[far]] -= 1
        labels[far] = c
        counts[c] = 1
    return labels


def medoid(X: np.ndarray, members: np.ndarray) -> int:
    """Member index minimising the summed Euclidean distance to the other members."""
    members = np.asarray(members)
    pair = _pairwise(X[members])
    totals = np.array([math.fsum(row.tolist()) for row in pair])
    return int(members[int(np.argmin(totals))])


def _pairwise(V: np.ndarray) -> np.ndarray:
    out = np.empty((V.shape[0], V.shape[0]))
    for r in range(V.shape[0]):
        diff = V - V[r]
        out[r] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def kmeans_medoid(
    series: AnnualSeries,
    k: int,
    seed: int = 0,
    max_iters: int = 300,
    *,
    geometry: SliceGeometry | None = None,
    distance: DistanceMatrix | None = None,
) -> Selection:
    """Representative days from k-means clusters with medoid representatives.

    The returned selection assigns every day to the medoid of its own
    cluster, so ``weights`` are the cluster sizes. ``dist`` and ``objective``
    use the snippet day distance under that assignment; the objective of the
    same days under nearest-representative assignment is kept in
    ``stats["nearest_objective"]``.
    """
    if geometry is None:
        geometry = SliceGeometry(HOURS_PER_DAY, HOURS_PER_DAY, series.hours)
    if geometry.s != geometry.u:
        raise GeometryError("the k-means baseline selects single stride-long periods (s must equal u)")
    X = day_vectors(series, geometry.u)
    n = X.shape[0]
    k = check_positive_int(k, "k")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of days ({n})")
    result = lloyd(X, k, seed=seed, max_iters=max_iters)

    medoid_of = {}
    for c in range(k):
        members = np.flatnonzero(result.labels == c)
        medoid_of[c] = medoid(X, members)
    chosen = tuple(sorted(medoid_of.values()))
    assignment = np.array([medoid_of[c] for c in result.labels])

    if distance is None:
        distance = build_matrix(series, geometry)
    d = distance.d
    dist = d[np.arange(n), assignment]
    counts = np.array([np.count_nonzero(assignment == j) for j in chosen], dtype=np.float64)
    assignment.setflags(write=False)
    dist.setflags(write=False)
    return Selection(
        chosen=chosen,
        assignment=assignment,
        dist=dist,
        weights=counts / geometry.days_per_period,
        objective=objective_of(dist),
        geometry=geometry,
        optimality=HEURISTIC,
        method="kmeans-medoid",
        stats={
            "seed": seed,
            "iterations": result.iterations,
            "converged": result.converged,
            "reseeded": result.reseeded,
            "inertia_history": result.inertia_history,
            "nearest_objective": assign(d, chosen)[2],
        },
    )
