"""Elbow curves and full-year fidelity diagnostics for a selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distance import DistanceMatrix
from .exact import solve_exact
from .selection import OPTIMAL, Selection, local_search_swap, make_selection, solve_greedy
from .timeseries import AnnualSeries

__all__ = [
    "ElbowCurve",
    "ElbowPoint",
    "FidelityReport",
    "duration_curve",
    "elbow",
    "fidelity",
    "representative_hours",
]


@dataclass(frozen=True)
class ElbowPoint:
    k: int
    total_days: int
    objective: float
    status: str
    lower_bound: float | None = None


@dataclass
class ElbowCurve:
    length_days: int
    points: list = field(default_factory=list)

    @property
    def objectives(self) -> list:
        return [p.objective for p in self.points]

    def rows(self) -> list:
        return [
            {
                "length_days": self.length_days,
                "k": p.k,
                "total_days": p.total_days,
                "objective": p.objective,
                "status": p.status,
            }
            for p in self.points
        ]


def _extend(D: DistanceMatrix, prev: Selection, k: int) -> Selection:
    """Grow ``prev`` greedily to ``k`` columns; never worse than ``prev``."""
    d = D.d
    chosen = list(prev.chosen)
    current = d[:, chosen].min(axis=1)
    while len(chosen) < k:
        free = np.setdiff1d(np.arange(d.shape[1]), chosen)
        totals = np.minimum(current[:, None], d[:, free]).sum(axis=0)
        c = int(free[int(np.argmin(totals))])
        chosen.append(c)
        current = np.minimum(current, d[:, c])
    return make_selection(D, chosen)


def elbow(
    D: DistanceMatrix,
    k_values,
    *,
    time_limit: float | None = None,
    node_limit: int | None = None,
) -> ElbowCurve:
    """Optimal objective for each ``k``, solved in ascending order.

    Each solve is warm-started from the better of greedy+swap and the
    previous point's solution grown by one greedy step per extra period, so
    the curve cannot increase with ``k`` even when a budget stops a solve
    early (such points carry status ``bounded``).
    """
    ks = sorted({int(k) for k in k_values})
    if not ks:
        raise ValueError("no k values given")
    if ks[0] < 1 or ks[-1] > D.m:
        raise ValueError(f"k values must lie in [1, {D.m}], got {ks}")
    length = D.geometry.days_per_period
    curve = ElbowCurve(length_days=length)
    prev = None
    for k in ks:
        start = local_search_swap(D, solve_greedy(D, k)) if k < D.m else None
        if prev is not None and k < D.m:
            grown = local_search_swap(D, _extend(D, prev, k))
            if (grown.objective, grown.chosen) < (start.objective, start.chosen):
                start = grown
        sel = solve_exact(D, k, time_limit=time_limit, node_limit=node_limit, warm_start=start)
        curve.points.append(ElbowPoint(k, k * length, sel.objective, sel.optimality, sel.lower_bound))
        prev = sel
    return curve


def representative_hours(series: AnnualSeries, selection: Selection) -> tuple[np.ndarray, np.ndarray]:
    """Stacked hours of the chosen periods and the weight each hour carries."""
    g = selection.geometry
    if g.t != series.hours:
        raise ValueError(f"selection built for t={g.t} but series has {series.hours} hours")
    blocks = [series.values[j * g.u : j * g.u + g.s] for j in selection.chosen]
    hours = np.concatenate(blocks, axis=0)
    w = np.repeat(np.asarray(selection.weights, dtype=np.float64), g.s)
    return hours, w


def duration_curve(values: np.ndarray, weights: np.ndarray, length: int) -> np.ndarray:
    """Descending duration curve of a weighted sample, read at ``length`` hourly positions.

    Position ``h`` takes the sample value at which the cumulative weight
    (largest values first) first reaches ``h + 0.5``.
    """
    order = np.argsort(-values, kind="stable")
    cum = np.cumsum(weights[order])
    idx = np.searchsorted(cum, np.arange(length) + 0.5, side="left")
    return values[order][np.minimum(idx, len(order) - 1)]


def _weighted_corr(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    mu = (w @ X) / w.sum()
    Z = X - mu
    cov = (Z * w[:, None]).T @ Z / w.sum()
    sd = np.sqrt(np.diag(cov))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / np.outer(sd, sd)
    # constant features have no defined correlation; treat as uncorrelated
    corr[~np.isfinite(corr)] = 0.0
    return corr


@dataclass
class FidelityReport:
    feature_names: tuple
    duration_curve_nrmse: dict
    mean_error: dict
    peak_error: dict
    correlation_error: float

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "duration_curve_nrmse": self.duration_curve_nrmse,
            "mean_error": self.mean_error,
            "peak_error": self.peak_error,
            "correlation_error": self.correlation_error,
        }


def fidelity(series: AnnualSeries, selection: Selection) -> FidelityReport:
    """Compare the weighted representative hours against the full year.

    Per feature: RMSE between duration curves, absolute weighted-mean error
    and absolute peak error, each divided by the feature's annual range
    (1 for constant features). Across features: Frobenius norm of the
    correlation-matrix difference.
    """
    rep, w = representative_hours(series, selection)
    year = series.values
    ones = np.ones(year.shape[0])
    t = year.shape[0]
    nrmse, mean_err, peak_err = {}, {}, {}
    for f, name in enumerate(series.feature_names):
        full = year[:, f]
        span = full.max() - full.min()
        span = span if span > 0 else 1.0
        # the annual curve goes through the same weighted routine (unit weights)
        # so a perfect reconstruction compares bit-identical arrays
        annual_dc = duration_curve(full, ones, t)
        rep_dc = duration_curve(rep[:, f], w, t)
        nrmse[name] = math.sqrt(float(np.mean((rep_dc - annual_dc) ** 2))) / span
        mean_err[name] = abs(float(w @ rep[:, f]) / w.sum() - float(ones @ full) / ones.sum()) / span
        peak_err[name] = abs(float(rep[w > 0, f].max() - full.max())) / span
    corr_err = float(np.linalg.norm(_weighted_corr(rep, w) - _weighted_corr(year, ones)))
    return FidelityReport(series.feature_names, nrmse, mean_err, peak_err, corr_err)


def is_proven(curve: ElbowCurve) -> bool:
    return all(p.status == OPTIMAL for p in curve.points)
