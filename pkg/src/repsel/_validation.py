"""Input checks shared by the estimators and the functional API."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

HOURS_PER_DAY = 24


class DataError(ValueError):
    """Input data is malformed (bad CSV, non-finite values, wrong length)."""


class GeometryError(ValueError):
    """Period length / stride / series length are inconsistent."""


def check_series_array(X, *, stride: int = HOURS_PER_DAY) -> np.ndarray:
    """Return ``X`` as a finite 2-D float array whose row count is a multiple of ``stride``."""
    try:
        X = check_array(X, dtype=np.float64, ensure_2d=False, ensure_all_finite=True)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DataError(f"expected a (hours, features) array, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[0] % stride:
        raise DataError(
            f"t not a multiple of {stride}: series has {X.shape[0]} hours "
            "(truncate the input, e.g. with --truncate-to-hours)"
        )
    return X


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_n_periods(k, m: int) -> int:
    k = check_positive_int(k, "k")
    if k > m:
        raise ValueError(f"k={k} out of range: only {m} candidate periods exist")
    return k
