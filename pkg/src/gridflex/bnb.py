"""Branch-and-bound over LP relaxations for programs with binary variables."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .lp import HighsSession, LinearProgram, LpSolution, solve_lp

INT_TOL = 1e-6
RESORT_EVERY = 100


@dataclass(frozen=True, eq=False)
class MixedBinaryProgram:
    lp: LinearProgram
    binaries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "binaries", tuple(int(j) for j in self.binaries))
        idx = np.array(self.binaries, dtype=int)
        if len(set(self.binaries)) != len(self.binaries):
            raise ValueError("binary variable listed twice")
        if idx.size and (np.any(self.lp.lo[idx] < 0) or np.any(self.lp.hi[idx] > 1)):
            raise ValueError("binary variables must have bounds within [0, 1]")


@dataclass(eq=False)
class MbpResult:
    """Outcome of :func:`solve_mbp`.

    ``status`` is ``optimal``, ``infeasible``, ``unbounded`` or
    ``failed_to_converge``; the last may still carry an incumbent.
    """

    status: str
    solution: LpSolution | None
    assignment: dict[int, int] | None
    objective_value: float
    best_bound: float
    nodes: int

    @property
    def has_incumbent(self) -> bool:
        return self.solution is not None


def _fix(lp: LinearProgram, binaries, values) -> LinearProgram:
    lo, hi = lp.lo.copy(), lp.hi.copy()
    idx = np.asarray(binaries, dtype=int)
    vals = np.asarray(values, dtype=float)
    lo[idx] = vals
    hi[idx] = vals
    return lp.with_bounds(lo, hi)


def _node_solver(lp: LinearProgram, method: str):
    if method == "highs":
        return HighsSession(lp).solve
    return lambda lo, hi: solve_lp(lp.with_bounds(lo, hi), method)


def solve_mbp(
    mbp: MixedBinaryProgram,
    gap: float = 1e-6,
    node_cap: int = 1_000_000,
    method: str = "highs",
) -> MbpResult:
    """Depth-first branch-and-bound, most-fractional branching.

    The open list is re-sorted by bound every 100 nodes so that the node with
    the best bound is explored next. Stops when the incumbent is within
    ``gap`` (relative) of the best open bound.
    """
    if gap < 0:
        raise ValueError("gap must be non-negative")
    lp = mbp.lp
    solve_node = _node_solver(lp, method)
    bins = np.array(mbp.binaries, dtype=int)
    incumbent: np.ndarray | None = None
    inc_obj = math.inf
    seq = itertools.count()
    # open nodes: (parent bound, seq, lo, hi)
    open_nodes = [(-math.inf, next(seq), lp.lo, lp.hi)]
    nodes = 0

    def closes(bound: float) -> bool:
        return bound >= inc_obj - gap * abs(inc_obj) - 1e-12 * (1.0 + abs(inc_obj))

    while open_nodes:
        if incumbent is not None:
            best_open = min(n[0] for n in open_nodes)
            if closes(best_open):
                break
        if nodes >= node_cap:
            best = min(n[0] for n in open_nodes)
            return _finish(lp, bins, incumbent, "failed_to_converge", min(best, inc_obj), nodes, method)
        if nodes and nodes % RESORT_EVERY == 0:
            open_nodes.sort(key=lambda n: (-n[0], n[1]))
        parent_bound, _, lo, hi = open_nodes.pop()
        if incumbent is not None and closes(parent_bound):
            continue
        nodes += 1
        sol = solve_node(lo, hi)
        if sol.status == "unbounded":
            if nodes == 1:
                return MbpResult("unbounded", None, None, -math.inf, -math.inf, nodes)
            continue
        if not sol.optimal:
            continue
        obj = sol.objective_value
        if incumbent is not None and closes(obj):
            continue
        xb = sol.x[bins]
        frac = np.abs(xb - np.round(xb))
        if bins.size == 0 or frac.max() <= INT_TOL:
            incumbent, inc_obj = np.round(xb), obj
            if nodes == 1:
                best_bound = obj
                return MbpResult("optimal", sol, _assignment(bins, incumbent), obj, best_bound, nodes)
            continue
        # most fractional, lowest index on ties
        score = np.abs(xb - 0.5)
        k = int(np.flatnonzero(score == score.min())[0])
        j = bins[k]
        down_lo, down_hi = lo, hi.copy()
        down_hi[j] = 0.0
        up_lo, up_hi = lo.copy(), hi
        up_lo[j] = 1.0
        down = (obj, next(seq), down_lo, down_hi)
        up = (obj, next(seq), up_lo, up_hi)
        # the child nearer the fractional value is explored first
        if xb[k] >= 0.5:
            open_nodes += [down, up]
        else:
            open_nodes += [up, down]

    if incumbent is None:
        return MbpResult("infeasible", None, None, math.inf, math.inf, nodes)
    best = min([n[0] for n in open_nodes] + [inc_obj])
    return _finish(lp, bins, incumbent, "optimal", best, nodes, method)


def _assignment(bins, values) -> dict[int, int]:
    return {int(j): int(v) for j, v in zip(bins, values)}


def _finish(lp, bins, incumbent, status, bound, nodes, method) -> MbpResult:
    if incumbent is None:
        return MbpResult(status, None, None, math.inf, bound, nodes)
    sol = solve_lp(_fix(lp, bins, incumbent), method)
    return MbpResult(status, sol, _assignment(bins, incumbent), sol.objective_value, bound, nodes)


def enumerate_mbp(mbp: MixedBinaryProgram, method: str = "highs") -> MbpResult:
    """Exhaustive search over all binary assignments (test oracle; small instances only)."""
    bins = np.array(mbp.binaries, dtype=int)
    solve_node = _node_solver(mbp.lp, method)
    best, best_obj, best_vals, count = None, math.inf, None, 0
    for values in itertools.product((0.0, 1.0), repeat=len(bins)):
        count += 1
        fixed = _fix(mbp.lp, bins, values)
        sol = solve_node(fixed.lo, fixed.hi)
        if sol.optimal and sol.objective_value < best_obj:
            best, best_obj, best_vals = sol, sol.objective_value, values
    if best is None:
        return MbpResult("infeasible", None, None, math.inf, math.inf, count)
    return MbpResult("optimal", best, _assignment(bins, best_vals), best_obj, best_obj, count)
