"""Locate the rows behind an infeasible model with an elastic (slack-penalised) copy."""
from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from chpuc.lpmodel import MilpModel


def elastic_rows(model: MilpModel, time_limit: Optional[float] = 60.0, tol: float = 1e-7) -> list:
    """Return ``[(row_name, slack)]`` for rows that need relaxing, worst first.

    Each row gets a nonnegative slack on the side(s) it can be violated; the
    copy minimises total slack. Binaries are kept, so rows that only fail
    because of integrality (minimum output, start-up limits) are found too.
    Empty when the model is feasible.
    """
    m, n = model.n_rows, model.n_vars
    if m == 0:
        return []
    sense = np.array(model.sense)
    up = np.flatnonzero(sense != ">=")     # row may exceed rhs: subtract slack
    down = np.flatnonzero(sense != "<=")   # row may fall short: add slack
    eye_up = sp.csr_matrix((-np.ones(len(up)), (up, np.arange(len(up)))), shape=(m, len(up)))
    eye_dn = sp.csr_matrix((np.ones(len(down)), (down, np.arange(len(down)))),
                           shape=(m, len(down)))
    A = sp.hstack([model.A, eye_up, eye_dn], format="csr")
    k = len(up) + len(down)
    c = np.concatenate([np.zeros(n), np.ones(k)])
    lb = np.concatenate([model.lb, np.zeros(k)])
    ub = np.concatenate([model.ub, np.full(k, np.inf)])
    integrality = np.concatenate([model.integer.astype(np.uint8), np.zeros(k, dtype=np.uint8)])
    lo, hi = model.row_bounds()
    options = {"disp": False}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = milp(c, constraints=[LinearConstraint(A, lo, hi)], bounds=Bounds(lb, ub),
               integrality=integrality, options=options)
    if res.x is None:
        # only the variable bounds themselves can make the elastic copy infeasible
        bad = np.flatnonzero(model.lb > model.ub)
        return [(model.var_names[j], float(model.lb[j] - model.ub[j])) for j in bad]
    slack = np.zeros(m)
    s = res.x[n:]
    np.add.at(slack, up, s[:len(up)])
    np.add.at(slack, down, s[len(up):])
    rows = [(model.row_names[i], float(slack[i])) for i in np.flatnonzero(slack > tol)]
    rows.sort(key=lambda item: (-item[1], item[0]))
    return rows
