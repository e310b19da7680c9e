"""Representative multi-day period selection for hourly multivariate years."""

__version__ = "0.1.0"

from ._validation import DataError, GeometryError
from .datasets import synthetic_frame, synthetic_year
from .distance import DistanceMatrix, SubsequenceDistance, build_matrix, day_distance
from .estimators import KMeansMedoidSelector, SnippetSelector
from .evaluation import ElbowCurve, FidelityReport, elbow, fidelity
from .exact import lagrangian_bound, solve_exact
from .kmeans import kmeans_medoid
from .selection import (
    Selection,
    assign,
    brute_force,
    k_for_target_days,
    local_search_swap,
    solve_greedy,
    weights,
)
from .timeseries import AnnualSeries, FeatureScaler, SliceGeometry, load_csv, normalize

__all__ = [
    "AnnualSeries",
    "DataError",
    "DistanceMatrix",
    "ElbowCurve",
    "FeatureScaler",
    "FidelityReport",
    "GeometryError",
    "KMeansMedoidSelector",
    "Selection",
    "SliceGeometry",
    "SnippetSelector",
    "SubsequenceDistance",
    "assign",
    "brute_force",
    "build_matrix",
    "day_distance",
    "elbow",
    "fidelity",
    "k_for_target_days",
    "kmeans_medoid",
    "lagrangian_bound",
    "load_csv",
    "local_search_swap",
    "normalize",
    "solve_exact",
    "solve_greedy",
    "synthetic_frame",
    "synthetic_year",
    "weights",
]
