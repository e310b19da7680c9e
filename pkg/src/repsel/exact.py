"""Exact p-median selection: branch-and-bound on column inclusion.

Bounds come from relaxing the "each segment assigned exactly once"
constraints with multipliers ``lam`` (one per segment). For fixed ``lam`` the
relaxed problem separates by column::

    L(lam) = sum_i lam_i + min_{|S| = k} sum_{j in S} rho_j,
    rho_j  = sum_i min(0, D[i, j] - lam_i)

and is maximised by subgradient ascent. The same ``rho`` values give
reduced-cost tests that fix columns in or out of a subtree.

Nodes are discarded only when their bound exceeds the incumbent, and
reduced-cost fixing only removes sets that are strictly worse, so every
optimal set eventually reaches a leaf. The incumbent keeps the
lexicographically smallest of them, independent of branching order.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from ._validation import check_n_periods
from .selection import (
    BOUNDED,
    OPTIMAL,
    Selection,
    _matrix,
    assign,
    local_search_swap,
    make_selection,
    solve_greedy,
)

logger = logging.getLogger(__name__)

__all__ = ["lagrangian_bound", "solve_exact"]

_UNDECIDED, _IN, _OUT = 0, 1, 2
BRANCHING_RULES = ("coverage", "penalty", "lowest")


@dataclass
class _Bound:
    value: float
    lam: np.ndarray
    rho: np.ndarray
    picked: np.ndarray
    grad: np.ndarray


class _Relaxation:
    """Lagrangian subproblem for one node; ``state`` marks columns in/out/undecided."""

    def __init__(self, rows, state: np.ndarray, k: int):
        self.sd, self.so = rows
        self.active = state != _OUT
        self.forced = state == _IN
        self.free = np.flatnonzero(self.active & ~self.forced)
        self.k_free = k - int(self.forced.sum())
        self._counts = np.empty(self.sd.shape[0], dtype=np.int64)

    def evaluate(self, lam: np.ndarray) -> _Bound:
        rho = np.empty(self.sd.shape[1])
        _kernels.reduced_costs(self.sd, self.so, lam, self.active, rho)
        picked = self.forced.copy()
        if self.k_free:
            take = self.free[np.argsort(rho[self.free], kind="stable")[: self.k_free]]
            picked[take] = True
        value = float(lam.sum() + rho[picked].sum())
        _kernels.service_counts(self.sd, self.so, lam, picked, self._counts)
        return _Bound(value, lam, rho, picked, 1.0 - self._counts)

    def ascend(self, lam, upper: float, *, iters: int, step: float, patience: int, stop_above: float) -> _Bound:
        best = self.evaluate(lam)
        current = best
        stall = 0
        for _ in range(iters):
            g = current.grad
            gg = float(g @ g)
            if gg == 0.0:
                # relaxed solution is a feasible assignment, so no better multipliers exist
                break
            gap = max(upper - current.value, 1e-9 * max(1.0, abs(upper)))
            current = self.evaluate(current.lam + (step * gap / gg) * g)
            if current.value > best.value + 1e-12 * max(1.0, abs(best.value)):
                best = current
                stall = 0
            else:
                stall += 1
                if stall >= patience:
                    step *= 0.5
                    stall = 0
                    current = best
            if best.value > stop_above or step < 1e-5:
                break
        return best

    def coverage(self, lam: np.ndarray) -> np.ndarray:
        out = np.empty(self.sd.shape[1], dtype=np.int64)
        _kernels.column_coverage(self.sd, self.so, lam, self.active, out)
        return out


def _initial_multipliers(d: np.ndarray, k: int) -> np.ndarray:
    # each row's (k+1)-th smallest distance is a cheap, reasonably tight start
    q = min(k, d.shape[1] - 1)
    return np.partition(d, q, axis=1)[:, q].copy()


def lagrangian_bound(D, k: int, *, iters: int = 2000, upper: float | None = None) -> float:
    """Root Lagrangian lower bound on the optimal k-column objective."""
    d = _matrix(D)
    k = check_n_periods(k, d.shape[1])
    if upper is None:
        upper = solve_greedy(d, k).objective
    relax = _Relaxation(_kernels.sorted_rows(d), np.zeros(d.shape[1], dtype=np.int8), k)
    return relax.ascend(_initial_multipliers(d, k), upper, iters=iters, step=2.0, patience=30,
                        stop_above=np.inf).value


class _Search:
    def __init__(self, d, k, incumbent: Selection, *, time_limit, node_limit, eps_rel, branching, node_iters):
        if branching not in BRANCHING_RULES:
            raise ValueError(f"unknown branching rule {branching!r}; expected one of {BRANCHING_RULES}")
        self.d = d
        self.rows = _kernels.sorted_rows(d)
        self.n, self.m = d.shape
        self.k = k
        self.best_obj = incumbent.objective
        self.best_set = tuple(incumbent.chosen)
        self.deadline = None if time_limit is None else time.monotonic() + time_limit
        self.node_limit = node_limit
        self.eps_rel = eps_rel
        self.branching = branching
        self.node_iters = node_iters
        self.nodes = 0
        self.pruned = 0
        self.fixed = 0
        self.root_bound = None

    @property
    def eps(self) -> float:
        return self.eps_rel * max(1.0, abs(self.best_obj))

    def offer(self, chosen) -> None:
        chosen = tuple(int(c) for c in np.sort(chosen))
        _, _, obj = assign(self.d, chosen)
        if obj < self.best_obj or (obj == self.best_obj and chosen < self.best_set):
            self.best_obj, self.best_set = obj, chosen

    def out_of_budget(self) -> bool:
        if self.node_limit is not None and self.nodes >= self.node_limit:
            return True
        return self.deadline is not None and time.monotonic() > self.deadline

    def bound_node(self, state: np.ndarray, lam: np.ndarray, root: bool):
        """Bound a node, applying reduced-cost fixing to ``state`` in place.

        Returns ``(bound, relaxation)``; ``bound`` is ``None`` when the node
        needs no branching (pruned, or reduced to a single column set).
        """
        first = True
        while True:
            forced = state == _IN
            k_free = self.k - int(forced.sum())
            n_free = int((state == _UNDECIDED).sum())
            if k_free < 0 or k_free > n_free:
                return None, None
            if k_free == 0 or k_free == n_free:
                self.offer(np.flatnonzero(state != _OUT) if k_free else np.flatnonzero(forced))
                return None, None
            relax = _Relaxation(self.rows, state, self.k)
            if root and first:
                iters, step, patience = 2000, 2.0, 30
            elif first:
                iters, step, patience = self.node_iters, 0.5, 6
            else:
                iters, step, patience = 25, 0.25, 5
            bound = relax.ascend(lam, self.best_obj, iters=iters, step=step, patience=patience,
                                 stop_above=self.best_obj + self.eps)
            first = False
            lam = bound.lam
            self.offer(np.flatnonzero(bound.picked))
            if bound.value > self.best_obj + self.eps:
                return None, None
            if self._fix(state, bound) == 0:
                return bound, relax

    def _fix(self, state, bound: _Bound) -> int:
        free = state == _UNDECIDED
        picked_free = bound.picked & free
        unpicked_free = ~bound.picked & free
        if not unpicked_free.any() or not picked_free.any():
            return 0
        rho = bound.rho
        worst_in = rho[picked_free].max()
        best_out = rho[unpicked_free].min()
        limit = self.best_obj + self.eps
        # forcing an unpicked column in displaces the worst picked one, and vice versa
        fix_out = unpicked_free & (bound.value + rho - worst_in > limit)
        fix_in = picked_free & (bound.value - rho + best_out > limit)
        state[fix_out] = _OUT
        state[fix_in] = _IN
        count = int(fix_out.sum() + fix_in.sum())
        self.fixed += count
        return count

    def branch_column(self, state, bound: _Bound, relax: _Relaxation) -> int:
        candidates = bound.picked & (state == _UNDECIDED)
        if self.branching == "lowest" or not candidates.any():
            return int(np.flatnonzero(state == _UNDECIDED)[0])
        if self.branching == "coverage":
            # the picked column serving the most segments in the relaxed solution
            score = relax.coverage(bound.lam).astype(float)
        else:
            score = -bound.rho
        return int(np.argmax(np.where(candidates, score, -np.inf)))

    def run(self, lam0: np.ndarray) -> float:
        """Depth-first search; returns a proven lower bound on the optimum."""
        stack = [(np.zeros(self.m, dtype=np.int8), lam0, -np.inf, True)]
        while stack:
            if self.out_of_budget():
                return min(self.best_obj, min(b for _, _, b, _ in stack))
            state, lam, parent_bound, root = stack.pop()
            if parent_bound > self.best_obj + self.eps:
                self.pruned += 1
                continue
            self.nodes += 1
            state = state.copy()
            bound, relax = self.bound_node(state, lam, root)
            if root:
                self.root_bound = self.best_obj if bound is None else bound.value
                logger.info("root bound %.9g, incumbent %.9g, %d columns fixed",
                            self.root_bound, self.best_obj, self.fixed)
            if bound is None:
                self.pruned += 1
                continue
            c = self.branch_column(state, bound, relax)
            excl, incl = state.copy(), state
            excl[c] = _OUT
            incl[c] = _IN
            stack.append((excl, bound.lam, bound.value, False))
            stack.append((incl, bound.lam, bound.value, False))
        return self.best_obj


def solve_exact(
    D,
    k: int,
    *,
    time_limit: float | None = None,
    node_limit: int | None = None,
    warm_start: Selection | None = None,
    eps_rel: float = 1e-9,
    branching: str = "coverage",
    node_iters: int = 80,
) -> Selection:
    """Globally optimal k-column selection (lexicographically smallest on ties).

    When ``time_limit`` (seconds) or ``node_limit`` stops the search, the best
    incumbent is returned with status ``bounded`` and the proven lower bound.
    ``warm_start`` seeds the incumbent; by default greedy followed by swap
    local search is used.
    """
    d = _matrix(D)
    m = d.shape[1]
    k = check_n_periods(k, m)
    started = time.monotonic()
    if k == m:
        sel = make_selection(D, range(m), optimality=OPTIMAL, method="exact", stats={"nodes": 0})
        return replace(sel, lower_bound=sel.objective)

    start = warm_start if warm_start is not None else local_search_swap(d, solve_greedy(d, k))
    search = _Search(d, k, start, time_limit=time_limit, node_limit=node_limit, eps_rel=eps_rel,
                     branching=branching, node_iters=node_iters)
    lower = search.run(_initial_multipliers(d, k))
    proven = lower >= search.best_obj
    stats = {
        "nodes": search.nodes,
        "pruned": search.pruned,
        "columns_fixed": search.fixed,
        "root_bound": search.root_bound,
        "seconds": time.monotonic() - started,
    }
    sel = make_selection(D, search.best_set, optimality=OPTIMAL if proven else BOUNDED, method="exact",
                         stats=stats)
    if proven:
        return replace(sel, lower_bound=sel.objective)
    # a budget hit before the root was bounded leaves no finite bound
    bound = float(min(lower, sel.objective))
    return replace(sel, lower_bound=bound if np.isfinite(bound) else None)
