"""Representative-period selection as a p-median problem over a distance matrix.

Choosing ``k`` columns of ``D`` and assigning every row (segment) to its
closest chosen column minimises ``sum_i min_{j in chosen} D[i, j]``. For a
fixed chosen set the assignment is a per-row argmin, so only the column
choice is combinatorial.

Objectives are accumulated with :func:`math.fsum` (correctly rounded), which
makes the value a function of the multiset of per-row distances only. Ties
between chosen sets are therefore exact and are broken toward the
lexicographically smallest sorted index tuple by every solver here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_n_periods
from .distance import DistanceMatrix
from .timeseries import SliceGeometry

__all__ = [
    "OPTIMAL",
    "HEURISTIC",
    "BOUNDED",
    "Selection",
    "assign",
    "brute_force",
    "k_for_target_days",
    "local_search_swap",
    "make_selection",
    "objective_of",
    "solve_greedy",
    "weights",
]

OPTIMAL = "proven-optimal"
HEURISTIC = "heuristic"
BOUNDED = "bounded"

BRUTE_FORCE_CAP = 10**6


@dataclass(frozen=True, eq=False)
class Selection:
    """Chosen periods, the segment -> period assignment, and the resulting weights.

    ``weights[r]`` belongs to ``chosen[r]``; ``assignment[i]`` is a column index
    ``j`` (not a position in ``chosen``).
    """

    chosen: tuple[int, ...]
    assignment: np.ndarray
    dist: np.ndarray
    weights: np.ndarray
    objective: float
    geometry: SliceGeometry
    optimality: str = HEURISTIC
    lower_bound: float | None = None
    method: str = ""
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def k(self) -> int:
        return len(self.chosen)

    @property
    def gap(self) -> float | None:
        """Relative gap between objective and proven lower bound (0 when optimal)."""
        if self.lower_bound is None:
            return None
        if self.objective <= 0:
            return 0.0
        return max(0.0, (self.objective - self.lower_bound) / self.objective)

    @property
    def start_hours(self) -> tuple[int, ...]:
        return tuple(j * self.geometry.u for j in self.chosen)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "geometry": self.geometry.to_dict(),
            "k": self.k,
            "chosen": list(self.chosen),
            "start_hours": list(self.start_hours),
            "weights": [float(w) for w in self.weights],
            "assignment": [int(a) for a in self.assignment],
            "objective": float(self.objective),
            "optimality": {
                "status": self.optimality,
                "lower_bound": None if self.lower_bound is None else float(self.lower_bound),
                "gap": self.gap,
            },
        }


def objective_of(dist) -> float:
    return math.fsum(np.asarray(dist, dtype=np.float64).tolist())


def _matrix(D) -> np.ndarray:
    return D.d if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=np.float64)


def _geometry(D) -> SliceGeometry:
    if isinstance(D, DistanceMatrix):
        return D.geometry
    return DistanceMatrix.from_array(D).geometry


def _check_chosen(chosen, m: int) -> tuple[int, ...]:
    chosen = tuple(sorted(int(j) for j in chosen))
    if not chosen:
        raise ValueError("chosen set is empty")
    if len(set(chosen)) != len(chosen):
        raise ValueError(f"chosen indices repeat: {chosen}")
    if chosen[0] < 0 or chosen[-1] >= m:
        raise IndexError(f"chosen indices must lie in [0, {m}), got {chosen}")
    return chosen


def assign(D, chosen) -> tuple[np.ndarray, np.ndarray, float]:
    """Map each segment to its nearest chosen column (lowest index on ties).

    Returns ``(assignment, dist, objective)``.
    """
    d = _matrix(D)
    cols = np.array(_check_chosen(chosen, d.shape[1]))
    sub = d[:, cols]
    # argmin returns the first minimum; cols is ascending so that is the lowest j
    pos = np.argmin(sub, axis=1)
    dist = sub[np.arange(d.shape[0]), pos]
    return cols[pos], dist, objective_of(dist)


def weights(selection_or_assignment, geometry: SliceGeometry, chosen=None) -> np.ndarray:
    """Segments assigned to each chosen period, divided by days per period."""
    if isinstance(selection_or_assignment, Selection):
        assignment = selection_or_assignment.assignment
        chosen = selection_or_assignment.chosen
    else:
        assignment = np.asarray(selection_or_assignment)
        if chosen is None:
            raise ValueError("chosen must be given with a bare assignment")
    counts = np.array([np.count_nonzero(assignment == j) for j in chosen], dtype=np.float64)
    return counts / geometry.days_per_period


def make_selection(D, chosen, *, optimality=HEURISTIC, lower_bound=None, method="", stats=None) -> Selection:
    geometry = _geometry(D)
    chosen = _check_chosen(chosen, _matrix(D).shape[1])
    assignment, dist, obj = assign(D, chosen)
    assignment.setflags(write=False)
    dist.setflags(write=False)
    return Selection(
        chosen=chosen,
        assignment=assignment,
        dist=dist,
        weights=weights(assignment, geometry, chosen),
        objective=obj,
        geometry=geometry,
        optimality=optimality,
        lower_bound=lower_bound,
        method=method,
        stats=dict(stats or {}),
    )


def _best_candidate(d: np.ndarray, base: np.ndarray, candidates: np.ndarray) -> tuple[int, float]:
    """Candidate column minimising ``fsum(min(base, d[:, c]))``, lowest index on ties."""
    approx = np.minimum(base[:, None], d[:, candidates]).sum(axis=0)
    best = approx.min()
    # rescore near-ties exactly so the choice does not depend on summation order
    slack = 1e-9 * max(1.0, abs(best))
    close = candidates[approx <= best + slack]
    scored = [(objective_of(np.minimum(base, d[:, c])), int(c)) for c in close]
    obj, c = min(scored)
    return c, obj


def solve_greedy(D, k: int) -> Selection:
    """Add, one at a time, the column giving the largest drop in total distance."""
    d = _matrix(D)
    k = check_n_periods(k, d.shape[1])
    current = np.full(d.shape[0], np.inf)
    chosen: list[int] = []
    trace = []
    available = np.ones(d.shape[1], dtype=bool)
    for _ in range(k):
        c, obj = _best_candidate(d, current, np.flatnonzero(available))
        chosen.append(c)
        available[c] = False
        current = np.minimum(current, d[:, c])
        trace.append(obj)
    return make_selection(D, chosen, method="greedy", stats={"objective_trace": trace})


def local_search_swap(D, start: Selection | tuple | list, *, max_passes: int | None = None) -> Selection:
    """Best-improvement single swaps until none strictly lowers the objective.

    Scan order is ascending outgoing column, then ascending incoming column;
    the first swap reaching the best improvement wins.
    """
    d = _matrix(D)
    n, m = d.shape
    chosen = list(start.chosen if isinstance(start, Selection) else _check_chosen(start, m))
    _, dist, current = assign(d, chosen)
    passes = 0
    while max_passes is None or passes < max_passes:
        passes += 1
        if len(chosen) == m:
            break
        outside = np.setdiff1d(np.arange(m), chosen)
        sub = d[:, chosen]
        order = np.argsort(sub, axis=1, kind="stable")
        first = sub[np.arange(n), order[:, 0]]
        second = sub[np.arange(n), order[:, 1]] if len(chosen) > 1 else np.full(n, np.inf)
        best_move = None
        best_approx = current
        for r, out_col in enumerate(chosen):
            base = np.where(order[:, 0] == r, second, first)
            approx = np.minimum(base[:, None], d[:, outside]).sum(axis=0)
            a = int(np.argmin(approx))
            if approx[a] < best_approx - 1e-12 * max(1.0, abs(current)):
                best_approx = approx[a]
                best_move = (out_col, int(outside[a]), base)
        if best_move is None:
            break
        out_col, in_col, base = best_move
        candidate = sorted([c for c in chosen if c != out_col] + [in_col])
        _, cand_dist, cand_obj = assign(d, candidate)
        if not cand_obj < current:
            break
        chosen, dist, current = candidate, cand_dist, cand_obj

    base_stats = dict(start.stats) if isinstance(start, Selection) else {}
    base_stats["swap_passes"] = passes
    method = (start.method + "+swap") if isinstance(start, Selection) and start.method else "swap"
    return make_selection(D, chosen, method=method, stats=base_stats)


def brute_force(D, k: int, *, cap: int = BRUTE_FORCE_CAP) -> Selection:
    """Enumerate every k-subset; exact optimum, lexicographically first among ties."""
    d = _matrix(D)
    m = d.shape[1]
    k = check_n_periods(k, m)
    total = math.comb(m, k)
    if total > cap:
        raise ValueError(f"C({m}, {k}) = {total} subsets exceeds the enumeration cap {cap}")
    best_obj = math.inf
    best = None
    for combo in itertools.combinations(range(m), k):
        obj = math.fsum(d[:, combo].min(axis=1).tolist())
        # combinations() yields lexicographic order, so strict < keeps the first optimum
        if obj < best_obj:
            best_obj, best = obj, combo
    sel = make_selection(D, best, optimality=OPTIMAL, lower_bound=best_obj, method="brute-force",
                         stats={"subsets": total})
    return sel


def k_for_target_days(target_days: float, length_days: int) -> int:
    """Periods needed to model roughly ``target_days`` days (half-up rounding, at least 1)."""
    if target_days <= 0 or length_days < 1:
        raise ValueError("target_days and length_days must be positive")
    return max(1, math.floor(target_days / length_days + 0.5))


def with_status(selection: Selection, **changes) -> Selection:
    return replace(selection, **changes)
