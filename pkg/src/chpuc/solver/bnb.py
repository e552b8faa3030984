"""LP-based branch-and-bound for binary MILPs.

Node selection is best-bound, with a depth-first plunge until the first
incumbent is found. Branching picks the most fractional binary, lowest
column index on ties. Each node LP is solved from scratch by the chosen LP
backend; incumbents are polished by re-solving the LP with all binaries
fixed to their rounded values.
"""
from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from chpuc.lpmodel import MilpModel
from chpuc.solver.simplex import INF, equilibrate, simplex

log = logging.getLogger(__name__)

# below this many rows + columns the embedded simplex is fast enough for node LPs
AUTO_SIMPLEX_SIZE = 1500


@dataclass
class MilpSolution:
    status: str                     # optimal | feasible | infeasible | limit-reached
    x: Optional[np.ndarray]
    objective: float
    bound: float
    gap: float
    nodes: int
    wall_time: float
    engine: str = ""
    bound_history: list = field(default_factory=list, repr=False)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


def relative_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return INF
    return max(0.0, (incumbent - bound) / max(1.0, abs(incumbent)))


# --- LP backends ----------------------------------------------------------

class _SimplexBackend:
    name = "simplex"

    def __init__(self, model: MilpModel):
        self.c = model.c
        self.A = model.A
        self.lo, self.hi = model.row_bounds()
        m, n = model.A.shape
        # node LPs share the matrix, so scale it once
        self.scale = equilibrate(model.A) if m and n else False

    def __call__(self, lb, ub):
        sol = simplex(self.c, self.A, self.lo, self.hi, lb, ub, scale=self.scale)
        if sol.status == "limit-reached":
            raise RuntimeError("simplex iteration limit reached")
        return sol.status, sol.x, sol.objective


class _HighsBackend:
    """Node LPs through scipy's HiGHS dual simplex."""

    name = "highs"

    def __init__(self, model: MilpModel):
        lo, hi = model.row_bounds()
        A = model.A.tocsr()
        eq = lo == hi
        up = np.isfinite(hi) & ~eq
        dn = np.isfinite(lo) & ~eq
        self.c = model.c
        self.A_eq = A[eq] if eq.any() else None
        self.b_eq = hi[eq] if eq.any() else None
        blocks, rhs = [], []
        if up.any():
            blocks.append(A[up])
            rhs.append(hi[up])
        if dn.any():
            blocks.append(-A[dn])
            rhs.append(-lo[dn])
        self.A_ub = sp.vstack(blocks).tocsr() if blocks else None
        self.b_ub = np.concatenate(rhs) if rhs else None

    def __call__(self, lb, ub):
        bounds = np.column_stack([np.where(np.isfinite(lb), lb, -np.inf),
                                  np.where(np.isfinite(ub), ub, np.inf)])
        res = linprog(self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=bounds, method="highs-ds",
                      options={"presolve": False, "primal_feasibility_tolerance": 1e-9,
                               "dual_feasibility_tolerance": 1e-9})
        if res.status == 0:
            return "optimal", res.x, float(res.fun)
        if res.status == 2:
            return "infeasible", None, INF
        if res.status == 3:
            return "unbounded", None, -INF
        raise RuntimeError(f"HiGHS LP failed: {res.message}")


LP_BACKENDS = {"simplex": _SimplexBackend, "highs": _HighsBackend}


def make_lp_backend(model: MilpModel, lp: str = "auto") -> Callable:
    if lp == "auto":
        lp = "simplex" if model.n_rows + model.n_vars <= AUTO_SIMPLEX_SIZE else "highs"
    return LP_BACKENDS[lp](model)


# --- presolve -------------------------------------------------------------

def tighten_singleton_rows(model: MilpModel, lb, ub):
    """Fold rows with a single nonzero into the column bounds (in place)."""
    A = model.A.tocsr()
    lo, hi = model.row_bounds()
    counts = np.diff(A.indptr)
    for r in np.flatnonzero(counts == 1):
        j = A.indices[A.indptr[r]]
        a = A.data[A.indptr[r]]
        lo_j, hi_j = (lo[r] / a, hi[r] / a) if a > 0 else (hi[r] / a, lo[r] / a)
        if model.integer[j]:
            lo_j = np.ceil(lo_j - 1e-9)
            hi_j = np.floor(hi_j + 1e-9)
        lb[j] = max(lb[j], lo_j)
        ub[j] = min(ub[j], hi_j)
    return lb, ub


# --- branch and bound -----------------------------------------------------

@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    fixes: tuple = field(compare=False)   # ((col, value), ...) relative to the root
    depth: int = field(compare=False, default=0)


def branch_and_bound(model: MilpModel, gap_tol: float = 1e-6, node_limit: Optional[int] = None,
               time_limit: Optional[float] = None, lp: str = "auto",
               int_tol: float = 1e-6) -> MilpSolution:
    """Minimise ``model`` with binaries enforced; see module docstring for the search rules."""
    t0 = time.perf_counter()
    ints = np.flatnonzero(model.integer)
    if np.any(model.lb[ints] < 0) or np.any(model.ub[ints] > 1):
        raise ValueError("integer columns must be binaries bounded in [0, 1]")
    backend = make_lp_backend(model, lp)
    lb0, ub0 = tighten_singleton_rows(model, model.lb.copy(), model.ub.copy())

    incumbent_x: Optional[np.ndarray] = None
    incumbent = INF
    pruned_bound = INF          # smallest bound among nodes cut off by the gap tolerance
    history = []
    nodes = 0
    seq = 0
    # LIFO stack while plunging for a first incumbent, best-bound heap afterwards
    pool: list = [_Node(-INF, 0, (), 0)]
    plunging = True
    status = None

    def elapsed():
        return time.perf_counter() - t0

    def cutoff():
        if not np.isfinite(incumbent):
            return INF
        return incumbent - max(gap_tol * max(1.0, abs(incumbent)), 1e-9)

    def global_bound():
        lowest = min((n.bound for n in pool), default=INF)
        return min(lowest, pruned_bound, incumbent)

    while pool:
        if (node_limit is not None and nodes >= node_limit) or (
                time_limit is not None and elapsed() > time_limit):
            status = "limit-reached"
            break
        node = pool.pop() if plunging else heapq.heappop(pool)
        if node.bound >= cutoff():
            pruned_bound = min(pruned_bound, node.bound)
            continue
        lb, ub = lb0.copy(), ub0.copy()
        for j, v in node.fixes:
            lb[j] = ub[j] = v
        lp_status, x, obj = backend(lb, ub)
        nodes += 1
        if lp_status == "unbounded":
            raise RuntimeError("LP relaxation is unbounded")
        if lp_status != "optimal":
            history.append(global_bound())
            continue
        obj = max(obj, node.bound)
        if obj >= cutoff():
            pruned_bound = min(pruned_bound, obj)
            history.append(global_bound())
            continue
        xi = x[ints]
        frac = np.abs(xi - np.round(xi))
        if frac.max(initial=0.0) <= int_tol:
            px, pobj = _polish(backend, lb, ub, ints, x)
            if px is not None and pobj < incumbent:
                incumbent, incumbent_x = pobj, px
                log.debug("node %d: incumbent %.9g", nodes, incumbent)
                if plunging:
                    plunging = False
                    heapq.heapify(pool)
            history.append(global_bound())
            continue
        # most fractional binary, lowest index on ties
        dist = np.minimum(xi - np.floor(xi), np.ceil(xi) - xi)
        k = int(np.argmax(dist))
        j = int(ints[k])
        up = _Node(obj, seq + 1, node.fixes + ((j, 1.0),), node.depth + 1)
        down = _Node(obj, seq + 2, node.fixes + ((j, 0.0),), node.depth + 1)
        seq += 2
        if plunging:
            # the child in the rounding direction is explored next
            first, second = (up, down) if xi[k] >= 0.5 else (down, up)
            pool.append(second)
            pool.append(first)
        else:
            heapq.heappush(pool, up)
            heapq.heappush(pool, down)
        history.append(global_bound())

    bound = global_bound() if status == "limit-reached" else min(pruned_bound, incumbent)
    if incumbent_x is None:
        if status == "limit-reached":
            return MilpSolution("limit-reached", None, INF, bound, INF, nodes, elapsed(),
                                "bnb/" + backend.name, history)
        return MilpSolution("infeasible", None, INF, INF, INF, nodes, elapsed(),
                            "bnb/" + backend.name, history)
    gap = relative_gap(incumbent, bound)
    if status is None:
        status = "optimal"
    elif gap <= gap_tol:
        status = "optimal"
    else:
        status = "feasible" if status != "limit-reached" else "limit-reached"
    return MilpSolution(status, incumbent_x, incumbent, bound, gap, nodes, elapsed(),
                        "bnb/" + backend.name, history)


def _polish(backend, lb, ub, ints, x):
    lb, ub = lb.copy(), ub.copy()
    r = np.round(x[ints])
    lb[ints] = ub[ints] = r
    status, px, pobj = backend(lb, ub)
    if status != "optimal":
        return None, INF
    px[ints] = r
    return px, pobj
