"""MILP engine backed by scipy's HiGHS interface, for models too large for the embedded search."""
from __future__ import annotations

import time
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from chpuc.lpmodel import MilpModel
from chpuc.solver.bnb import MilpSolution, relative_gap

INF = float("inf")


def solve_with_highs(model: MilpModel, gap_tol: float = 1e-6, node_limit: Optional[int] = None,
                     time_limit: Optional[float] = None) -> MilpSolution:
    t0 = time.perf_counter()
    lo, hi = model.row_bounds()
    options = {"disp": False, "presolve": True, "mip_rel_gap": gap_tol / 2}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    if node_limit is not None:
        options["node_limit"] = int(node_limit)
    constraints = [LinearConstraint(model.A, lo, hi)] if model.n_rows else []
    res = milp(model.c, constraints=constraints, bounds=Bounds(model.lb, model.ub),
               integrality=model.integer.astype(np.uint8), options=options)
    wall = time.perf_counter() - t0
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.x is None:
        status = "infeasible" if res.status == 2 else "limit-reached"
        return MilpSolution(status, None, INF, INF if status == "infeasible" else -INF, INF,
                            nodes, wall, "highs")
    x = np.asarray(res.x, dtype=float).copy()
    ints = model.integer
    x[ints] = np.round(x[ints])
    obj = float(model.c @ x)
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not np.isfinite(bound) else min(float(bound), obj)
    gap = relative_gap(obj, bound)
    if res.status == 0 and gap <= gap_tol:
        status = "optimal"
    elif res.status == 0:
        status = "feasible"
    else:
        status = "limit-reached"
    return MilpSolution(status, x, obj, bound, gap, nodes, wall, "highs")
