"""Annual hourly series: ingestion, scaling, and day-aligned slicing."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import HOURS_PER_DAY, DataError, GeometryError, check_series_array

__all__ = [
    "AnnualSeries",
    "FeatureScaler",
    "ScalingRecord",
    "SliceGeometry",
    "load_csv",
    "normalize",
    "segment",
    "subsequence",
]

_METHOD_ALIASES = {
    "min-max": "minmax",
    "minmax": "minmax",
    "z-score": "zscore",
    "zscore": "zscore",
    "none": "none",
}


def _canonical_method(method: str) -> str:
    try:
        return _METHOD_ALIASES[method.lower()]
    except (KeyError, AttributeError):
        raise ValueError(
            f"unknown normalization {method!r}; expected one of minmax, zscore, none"
        ) from None


@dataclass(frozen=True)
class ScalingRecord:
    """Per-feature affine map ``scaled = (raw - offset) / scale``."""

    method: str
    offset: np.ndarray
    scale: np.ndarray

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.scale + self.offset

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "offset": self.offset.tolist(),
            "scale": self.scale.tolist(),
        }


class FeatureScaler(TransformerMixin, BaseEstimator):
    """Column-wise min-max or z-score scaling with a zero-range convention.

    Constant columns map to 0 under both methods (min-max would otherwise divide
    by zero; z-score additionally warns). Unlike
    :class:`sklearn.preprocessing.MinMaxScaler` the fitted parameters are kept
    as an ``offset``/``scale`` pair so a :class:`ScalingRecord` can be stored on
    the series and inverted for reporting.
    """

    def __init__(self, method: str = "minmax"):
        self.method = method

    def fit(self, X, y=None):
        X = check_series_array(X, stride=1)
        method = _canonical_method(self.method)
        if method == "minmax":
            offset = X.min(axis=0)
            scale = X.max(axis=0) - offset
        elif method == "zscore":
            offset = X.mean(axis=0)
            scale = X.std(axis=0)
        else:
            offset = np.zeros(X.shape[1])
            scale = np.ones(X.shape[1])
        constant = scale == 0
        if method == "zscore" and constant.any():
            warnings.warn(
                f"z-score on constant feature(s) at columns {np.flatnonzero(constant).tolist()}; "
                "mapping to zeros",
                RuntimeWarning,
                stacklevel=2,
            )
        scale = np.where(constant, 1.0, scale)
        self.offset_ = offset
        self.scale_ = scale
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_series_array(X, stride=1)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return (X - self.offset_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_series_array(X, stride=1)
        return X * self.scale_ + self.offset_

    def record(self) -> ScalingRecord:
        check_is_fitted(self, "scale_")
        return ScalingRecord(_canonical_method(self.method), self.offset_.copy(), self.scale_.copy())


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class AnnualSeries:
    """A year (or any whole number of days) of hourly multivariate data.

    ``values`` is hours x features and read-only. ``scaling`` is ``None`` for
    raw data, otherwise the record needed to map values back to raw units.
    """

    values: np.ndarray
    feature_names: tuple[str, ...]
    scaling: ScalingRecord | None = field(default=None)

    def __post_init__(self):
        values = check_series_array(self.values)
        names = tuple(self.feature_names)
        if not names or any(not isinstance(n, str) or not n for n in names):
            raise DataError("feature_names must be non-empty strings")
        if len(set(names)) != len(names):
            raise DataError(f"duplicate feature names: {list(names)}")
        if len(names) != values.shape[1]:
            raise DataError(f"{len(names)} feature names for {values.shape[1]} columns")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "feature_names", names)

    @property
    def hours(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def is_raw(self) -> bool:
        return self.scaling is None

    def raw_values(self) -> np.ndarray:
        if self.scaling is None:
            return self.values
        return self.scaling.inverse(self.values)

    def select_features(self, names: Sequence[str]) -> AnnualSeries:
        if not self.is_raw:
            raise ValueError("select features before normalizing")
        idx = [self.feature_names.index(n) for n in names]
        return AnnualSeries(self.values[:, idx], tuple(names))

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> AnnualSeries:
        return cls(frame.to_numpy(dtype=np.float64), tuple(str(c) for c in frame.columns))


@dataclass(frozen=True)
class SliceGeometry:
    """Candidate-period geometry: length ``s`` and stride ``u`` over ``t`` hours."""

    s: int
    u: int
    t: int

    def __post_init__(self):
        for name in ("s", "u", "t"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise GeometryError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.t % self.u:
            raise GeometryError(f"stride u={self.u} does not divide t={self.t}")
        if self.s % self.u:
            raise GeometryError(f"stride u={self.u} does not divide period length s={self.s}")
        if self.s > self.t:
            raise GeometryError(f"period length s={self.s} exceeds series length t={self.t}")

    @classmethod
    def from_days(cls, length_days: int, t: int, u: int = HOURS_PER_DAY) -> SliceGeometry:
        return cls(s=int(length_days) * u, u=u, t=t)

    @property
    def n(self) -> int:
        return self.t // self.u

    @property
    def m(self) -> int:
        return (self.t - self.s) // self.u + 1

    @property
    def days_per_period(self) -> int:
        return self.s // self.u

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "s": self.s,
            "u": self.u,
            "n": self.n,
            "m": self.m,
            "days_per_period": self.days_per_period,
        }


def _check_geometry(series: AnnualSeries, geometry: SliceGeometry) -> None:
    if geometry.t != series.hours:
        raise GeometryError(f"geometry built for t={geometry.t} but series has {series.hours} hours")


def segment(series: AnnualSeries, geometry: SliceGeometry, i: int) -> np.ndarray:
    """Rows ``[i*u, (i+1)*u)``: the ``i``-th non-overlapping block."""
    _check_geometry(series, geometry)
    if not 0 <= i < geometry.n:
        raise IndexError(f"segment index {i} out of range [0, {geometry.n})")
    u = geometry.u
    return series.values[i * u : (i + 1) * u]


def subsequence(series: AnnualSeries, geometry: SliceGeometry, j: int) -> np.ndarray:
    """Rows ``[j*u, j*u + s)``: the ``j``-th candidate period."""
    _check_geometry(series, geometry)
    if not 0 <= j < geometry.m:
        raise IndexError(f"subsequence index {j} out of range [0, {geometry.m})")
    start = j * geometry.u
    return series.values[start : start + geometry.s]


def normalize(series: AnnualSeries, method: str = "minmax") -> AnnualSeries:
    """Scale each feature independently; ``method="none"`` returns ``series`` itself."""
    method = _canonical_method(method)
    if not series.is_raw:
        raise ValueError(f"series is already scaled ({series.scaling.method}); normalize the raw series")
    if method == "none":
        return series
    scaler = FeatureScaler(method).fit(series.values)
    return AnnualSeries(scaler.transform(series.values), series.feature_names, scaler.record())


def load_csv(
    path,
    feature_columns: Sequence[str],
    *,
    timestamp_column: str = "timestamp",
    truncate_to_hours: int | None = None,
) -> AnnualSeries:
    """Read an hourly CSV with an ISO-8601 ``timestamp`` column.

    Rows must be strictly increasing, exactly one hour apart. Feature cells
    must be numeric and present; the offending row index is reported
    otherwise. ``truncate_to_hours`` keeps the first N rows (applied before the
    multiple-of-24 check).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    feature_columns = list(feature_columns)
    if not feature_columns:
        raise DataError("no feature columns requested")
    if len(set(feature_columns)) != len(feature_columns):
        raise DataError(f"duplicate feature columns requested: {feature_columns}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    header = list(frame.columns)
    dupes = sorted({c for c in header if header.count(c) > 1})
    if dupes:
        raise DataError(f"duplicate columns in {path.name}: {dupes}")
    # pandas renames repeated headers as "x.1"; detect that too
    mangled = [c for c in header if "." in c and c.rsplit(".", 1)[0] in header and c.rsplit(".", 1)[1].isdigit()]
    if mangled:
        raise DataError(f"duplicate columns in {path.name}: {sorted(c.rsplit('.', 1)[0] for c in mangled)}")
    missing = [c for c in [timestamp_column, *feature_columns] if c not in header]
    if missing:
        raise DataError(f"missing columns in {path.name}: {missing}")

    if truncate_to_hours is not None:
        if truncate_to_hours < 1 or truncate_to_hours > len(frame):
            raise DataError(f"--truncate-to-hours {truncate_to_hours} outside [1, {len(frame)}]")
        frame = frame.iloc[:truncate_to_hours]

    try:
        stamps = pd.to_datetime(frame[timestamp_column], format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise DataError(f"unparseable timestamp: {exc}") from exc
    if len(stamps) > 1:
        steps = stamps.diff().iloc[1:].to_numpy()
        bad = np.flatnonzero(steps != np.timedelta64(1, "h"))
        if bad.size:
            row = int(bad[0]) + 1
            raise DataError(
                f"non-contiguous timestamps at row {row}: "
                f"{frame[timestamp_column].iloc[row - 1]} -> {frame[timestamp_column].iloc[row]}"
            )

    values = np.empty((len(frame), len(feature_columns)))
    for col, name in enumerate(feature_columns):
        parsed = pd.to_numeric(frame[name].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(parsed))
        if bad.size:
            row = int(bad[0])
            raise DataError(f"non-numeric or missing value in column {name!r} at row {row}: {frame[name].iloc[row]!r}")
        values[:, col] = parsed

    if values.shape[0] % HOURS_PER_DAY:
        raise DataError(
            f"t not a multiple of {HOURS_PER_DAY}: {path.name} has {values.shape[0]} rows "
            "(use --truncate-to-hours to drop trailing hours)"
        )
    return AnnualSeries(values, tuple(feature_columns))
