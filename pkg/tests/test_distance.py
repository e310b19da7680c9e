import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repsel.distance import DistanceMatrix, SubsequenceDistance, build_matrix, day_distance
from repsel.timeseries import AnnualSeries, SliceGeometry


def naive_matrix(values, s, u):
    """Direct double loop over segments, subsequences and day offsets."""
    t = values.shape[0]
    n, m = t // u, (t - s) // u + 1
    out = np.empty((n, m))
    for i in range(n):
        seg = values[i * u : (i + 1) * u]
        for j in range(m):
            best = math.inf
            for x in range(s // u):
                day = values[j * u + x * u : j * u + (x + 1) * u]
                best = min(best, math.sqrt(sum(float(v) ** 2 for v in (day - seg).ravel())))
            out[i, j] = best
    return out


def _series(rng, days, features=2):
    return AnnualSeries(rng.random((days * 24, features)), tuple(f"f{c}" for c in range(features)))


@pytest.mark.parametrize("s", [24, 72, 120])
def test_matches_naive_double_loop(s):
    rng = np.random.default_rng(s)
    series = _series(rng, 12)
    D = build_matrix(series, SliceGeometry(s, 24, series.hours))
    np.testing.assert_allclose(D.d, naive_matrix(series.values, s, 24), rtol=0, atol=1e-12)


def test_day_distance_of_zeros_and_ones():
    assert day_distance(np.zeros((24, 1)), np.ones((24, 1))) == pytest.approx(math.sqrt(24), abs=1e-12)


def test_day_distance_shape_mismatch():
    with pytest.raises(ValueError):
        day_distance(np.zeros((24, 1)), np.zeros((24, 2)))


def test_shape_and_zero_cover():
    rng = np.random.default_rng(0)
    series = _series(rng, 10)
    g = SliceGeometry(72, 24, series.hours)
    D = build_matrix(series, g)
    assert D.d.shape == (10, 8)
    for j in range(g.m):
        for x in range(3):
            assert D.d[j + x, j] == 0.0


def test_single_day_matrix_is_symmetric_with_zero_diagonal():
    rng = np.random.default_rng(1)
    series = _series(rng, 9)
    d = build_matrix(series, SliceGeometry(24, 24, series.hours)).d
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)


def test_whole_series_as_one_period():
    rng = np.random.default_rng(2)
    series = _series(rng, 4)
    D = build_matrix(series, SliceGeometry(series.hours, 24, series.hours))
    assert D.d.shape == (4, 1)
    assert np.all(D.d == 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), power=st.integers(-3, 3), width=st.integers(1, 3))
def test_power_of_two_scaling_is_exact(seed, power, width):
    rng = np.random.default_rng(seed)
    series = _series(rng, 6)
    g = SliceGeometry(24 * width, 24, series.hours)
    c = 2.0**power
    scaled = AnnualSeries(series.values * c, series.feature_names)
    assert np.array_equal(build_matrix(scaled, g).d, c * build_matrix(series, g).d)


def test_scaling_homogeneity_general_factor():
    rng = np.random.default_rng(3)
    series = _series(rng, 6)
    g = SliceGeometry(48, 24, series.hours)
    scaled = AnnualSeries(series.values * 3.7, series.feature_names)
    np.testing.assert_allclose(build_matrix(scaled, g).d, 3.7 * build_matrix(series, g).d, rtol=1e-13)


def test_matrix_validation():
    with pytest.raises(ValueError):
        DistanceMatrix.from_array(np.array([[0.0, -1.0]]))
    with pytest.raises(ValueError):
        DistanceMatrix.from_array(np.array([[0.0, np.nan]]))
    with pytest.raises(ValueError):
        DistanceMatrix.from_array(np.zeros((2, 3)))
    D = DistanceMatrix.from_array(np.zeros((5, 3)))
    assert (D.n, D.m, D.geometry.days_per_period) == (5, 3, 3)
    assert not D.d.flags.writeable


def test_transformer_returns_matrix():
    rng = np.random.default_rng(4)
    X = rng.random((24 * 5, 3))
    d = SubsequenceDistance(length_days=2).fit_transform(X)
    assert d.shape == (5, 4)
    assert SubsequenceDistance(length_days=2).fit(X).geometry_.m == 4
