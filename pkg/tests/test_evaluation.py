import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import FIXTURE_3X3
from repsel.distance import DistanceMatrix, build_matrix
from repsel.evaluation import duration_curve, elbow, fidelity
from repsel.selection import OPTIMAL, brute_force, make_selection
from repsel.timeseries import AnnualSeries, SliceGeometry


def seasonal_series(days=40):
    h = np.arange(days * 24)
    season = np.where(h // 24 < days // 2, 0.0, 1.0)  # "winter" then "summer"
    load = season + 0.3 * np.sin(2 * np.pi * (h % 24) / 24)
    other = np.cos(2 * np.pi * h / (24 * days))
    return AnnualSeries(np.column_stack([load, other]), ("load", "other"))


def test_elbow_on_3x3_matches_enumeration():
    D = DistanceMatrix.from_array(np.array(FIXTURE_3X3))
    curve = elbow(D, [3, 1, 2])
    assert [p.k for p in curve.points] == [1, 2, 3]
    assert curve.objectives == [brute_force(D, k).objective for k in (1, 2, 3)]
    assert all(p.status == OPTIMAL for p in curve.points)


def test_elbow_single_point_k_equals_m():
    d = np.random.default_rng(0).random((9, 7))
    curve = elbow(DistanceMatrix.from_array(d), [7])
    assert curve.objectives == [math.fsum(d.min(axis=1).tolist())]


def test_elbow_rejects_bad_k():
    D = DistanceMatrix.from_array(np.array(FIXTURE_3X3))
    with pytest.raises(ValueError):
        elbow(D, [0, 2])
    with pytest.raises(ValueError):
        elbow(D, [])


def test_elbow_rows_total_days():
    series = seasonal_series(20)
    D = build_matrix(series, SliceGeometry(48, 24, series.hours))
    rows = elbow(D, [2, 4]).rows()
    assert [(r["length_days"], r["k"], r["total_days"]) for r in rows] == [(2, 2, 4), (2, 4, 8)]


def test_perfect_reconstruction_is_exactly_zero():
    series = seasonal_series()
    g = SliceGeometry(24, 24, series.hours)
    sel = make_selection(build_matrix(series, g), range(g.m))
    rep = fidelity(series, sel)
    assert all(v == 0 for v in rep.duration_curve_nrmse.values())
    assert all(v == 0 for v in rep.mean_error.values())
    assert all(v == 0 for v in rep.peak_error.values())
    assert rep.correlation_error == 0


def test_winter_only_selection_misses_summer_tail():
    series = seasonal_series()
    g = SliceGeometry(24, 24, series.hours)
    sel = make_selection(build_matrix(series, g), [0, 5, 10])
    rep = fidelity(series, sel)
    assert rep.duration_curve_nrmse["load"] > 0
    assert rep.peak_error["load"] > 0


def test_weights_enter_mean_error():
    series = seasonal_series()
    g = SliceGeometry(24, 24, series.hours)
    sel = make_selection(build_matrix(series, g), [3, 30])
    other = replace(sel, weights=sel.weights[::-1].copy() + np.array([5.0, -5.0]))
    assert fidelity(series, sel).mean_error["load"] != fidelity(series, other).mean_error["load"]


def test_feature_order_invariance():
    series = seasonal_series()
    swapped = AnnualSeries(series.values[:, ::-1], series.feature_names[::-1])
    g = SliceGeometry(48, 24, series.hours)
    a = fidelity(series, make_selection(build_matrix(series, g), [2, 25]))
    b = fidelity(swapped, make_selection(build_matrix(swapped, g), [2, 25]))
    assert a.duration_curve_nrmse == b.duration_curve_nrmse
    assert a.mean_error == b.mean_error
    assert a.correlation_error == pytest.approx(b.correlation_error, abs=1e-15)


def test_geometry_mismatch():
    series = seasonal_series()
    other = seasonal_series(20)
    sel = make_selection(build_matrix(other, SliceGeometry(24, 24, other.hours)), [1])
    with pytest.raises(ValueError):
        fidelity(series, sel)


def test_duration_curve_with_integer_weights_equals_replication():
    v = np.array([3.0, 1.0, 2.0])
    w = np.array([2.0, 1.0, 3.0])
    assert duration_curve(v, w, 6).tolist() == [3, 3, 2, 2, 2, 1]
