"""Bounded-variable revised primal simplex.

Rows ``lo <= A x <= hi`` are turned into equalities ``A x - s = 0`` with one
logical column per row, so every column carries simple bounds and the
starting basis is the (negated) identity. Phase 1 minimises the sum of
bound violations of the basic variables (composite method); phase 2
optimises the true objective. The basis inverse is a sparse LU plus a
product-form eta file, refactorised periodically.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, MatrixRankWarning

INF = float("inf")

AT_LOWER, AT_UPPER, AT_ZERO, BASIC = 0, 1, 2, 3


class NumericalBreakdown(RuntimeError):
    pass


@dataclass
class LpSolution:
    status: str                      # optimal | infeasible | unbounded | limit-reached
    x: Optional[np.ndarray]
    objective: float
    row_activity: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    dual_bound: float = -INF
    iterations: int = 0
    basis: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pow2(v):
    return np.exp2(np.round(np.log2(v)))


def equilibrate(A: sp.csr_matrix, passes: int = 4):
    """Geometric-mean row/column scaling rounded to powers of two."""
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    if A.nnz == 0:
        return r, s
    absA = abs(A).tocsr()
    for _ in range(passes):
        B = sp.diags(r) @ absA @ sp.diags(s)
        B = B.tocsr()
        rmax = B.max(axis=1).toarray().ravel()
        rmin = _nonzero_min(B, axis=1)
        ok = rmax > 0
        r[ok] /= np.sqrt(rmax[ok] * rmin[ok])
        B = (sp.diags(r) @ absA @ sp.diags(s)).tocsc()
        cmax = B.max(axis=0).toarray().ravel()
        cmin = _nonzero_min(B, axis=0)
        ok = cmax > 0
        s[ok] /= np.sqrt(cmax[ok] * cmin[ok])
    return _pow2(r), _pow2(s)


def _nonzero_min(B, axis):
    C = B.copy()
    C.data = 1.0 / C.data
    inv = C.max(axis=axis).toarray().ravel()
    out = np.ones_like(inv)
    ok = inv > 0
    out[ok] = 1.0 / inv[ok]
    return out


class _Basis:
    """LU of the basis matrix plus product-form updates."""

    def __init__(self, A_full: sp.csc_matrix, head: np.ndarray):
        self.A = A_full
        self.refactor(head)

    def refactor(self, head):
        B = self.A[:, head].tocsc()
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
            except (RuntimeError, MatrixRankWarning) as exc:
                raise NumericalBreakdown(f"singular basis: {exc}") from exc
        self.etas = []

    def ftran(self, b):
        x = self.lu.solve(b)
        for r, w in self.etas:
            xr = x[r] / w[r]
            x -= xr * w
            x[r] = xr
        return x

    def btran(self, c):
        v = c.copy()
        for r, w in reversed(self.etas):
            vr = v[r]
            v[r] = (vr - (w @ v - w[r] * vr)) / w[r]
        return self.lu.solve(v, trans="T")

    def update(self, r, w):
        self.etas.append((r, w.copy()))


def simplex(c, A, row_lo, row_hi, lb, ub, *, feas_tol=1e-9, opt_tol=1e-9, harris_tol=1e-9,
            pivot_tol=1e-9, max_iter=None, time_limit=None, scale=True,
            refactor_every=64, degenerate_guard=50) -> LpSolution:
    """Minimise ``c x`` subject to ``row_lo <= A x <= row_hi`` and ``lb <= x <= ub``.

    ``scale`` is a flag, or a precomputed ``(row, column)`` factor pair from
    :func:`equilibrate` so repeated solves on one matrix skip the scaling passes.
    """
    t_start = time.perf_counter()
    A = sp.csr_matrix(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    row_lo = np.asarray(row_lo, dtype=float)
    row_hi = np.asarray(row_hi, dtype=float)

    if np.any(lb > ub) or np.any(row_lo > row_hi):
        return LpSolution("infeasible", None, INF)

    if isinstance(scale, tuple):
        r, s = scale
    elif scale and m and n:
        r, s = equilibrate(A)
    else:
        r, s = np.ones(m), np.ones(n)
    As = (sp.diags(r) @ A @ sp.diags(s)).tocsc()
    A_full = sp.hstack([As, -sp.identity(m, format="csc")], format="csc")
    A_full_T = A_full.T.tocsr()
    N = n + m
    lo = np.concatenate([lb / s, row_lo * r])
    hi = np.concatenate([ub / s, row_hi * r])
    cost = np.concatenate([c * s, np.zeros(m)])
    fixed = lo == hi

    # nonbasic starting point
    z = np.zeros(N)
    state = np.full(N, AT_LOWER)
    finite_lo, finite_hi = np.isfinite(lo), np.isfinite(hi)
    z[finite_lo] = lo[finite_lo]
    up_only = ~finite_lo & finite_hi
    z[up_only] = hi[up_only]
    state[up_only] = AT_UPPER
    free = ~finite_lo & ~finite_hi
    state[free] = AT_ZERO
    head = np.arange(n, N)
    state[head] = BASIC
    basis = _Basis(A_full, head)

    def recompute():
        nb = state != BASIC
        rhs = -(A_full[:, nb] @ z[nb]) if nb.any() else np.zeros(m)
        z[head] = basis.ftran(rhs)

    recompute()
    max_iter = max_iter or 50 * (m + n) + 1000
    it = 0
    degenerate = 0
    bland = False
    phase = 1

    while True:
        if it >= max_iter or (time_limit is not None and time.perf_counter() - t_start > time_limit):
            return LpSolution("limit-reached", None, INF, iterations=it)
        xb = z[head]
        lo_b, hi_b = lo[head], hi[head]
        below = xb < lo_b - feas_tol
        above = xb > hi_b + feas_tol
        infeasible = below.any() or above.any()
        if phase == 2 and infeasible:
            phase = 1
        if phase == 1 and not infeasible:
            phase = 2
        if phase == 1:
            cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
            cvec = None
        else:
            cb = cost[head]
            cvec = cost
        y = basis.btran(cb)
        d = (cvec if cvec is not None else 0.0) - A_full_T @ y
        d[head] = 0.0

        # pricing
        elig_inc = ((state == AT_LOWER) | (state == AT_ZERO)) & (d < -opt_tol) & ~fixed
        elig_dec = ((state == AT_UPPER) | (state == AT_ZERO)) & (d > opt_tol) & ~fixed
        elig = elig_inc | elig_dec
        if not elig.any():
            if phase == 1:
                return LpSolution("infeasible", None, INF, iterations=it)
            break
        if bland:
            q = int(np.flatnonzero(elig)[0])
        else:
            score = np.where(elig, np.abs(d), -1.0)
            q = int(np.argmax(score))
        direction = 1.0 if elig_inc[q] else -1.0

        col = A_full[:, q].toarray().ravel()
        w = basis.ftran(col)
        alpha = direction * w
        # basic bounds used by the ratio test; phase-1 infeasible basics may
        # only travel up to the bound they violate
        if phase == 1:
            lt = np.where(below, -INF, np.where(above, hi_b, lo_b))
            ut = np.where(below, lo_b, np.where(above, INF, hi_b))
        else:
            lt, ut = lo_b, hi_b
        dec = alpha > pivot_tol
        inc = alpha < -pivot_tol
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.full(m, INF)
            ratio[dec] = (xb[dec] - lt[dec]) / alpha[dec]
            ratio[inc] = (ut[inc] - xb[inc]) / (-alpha[inc])
        ratio[~np.isfinite(ratio)] = INF
        flip = hi[q] - lo[q]
        if bland:
            theta = ratio.min() if m else INF
            cand = np.flatnonzero(ratio <= theta) if np.isfinite(theta) else np.array([], int)
            rpos = int(cand[np.argmin(head[cand])]) if cand.size else -1
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                relaxed = np.full(m, INF)
                relaxed[dec] = (xb[dec] - lt[dec] + harris_tol) / alpha[dec]
                relaxed[inc] = (ut[inc] - xb[inc] + harris_tol) / (-alpha[inc])
            relaxed[~np.isfinite(relaxed)] = INF
            tmax = relaxed.min() if m else INF
            if np.isfinite(tmax):
                cand = np.flatnonzero(ratio <= tmax)
                rpos = int(cand[np.argmax(np.abs(alpha[cand]))])
                theta = max(ratio[rpos], 0.0)
            else:
                rpos, theta = -1, INF
        if np.isfinite(flip) and flip <= theta:
            # entering variable reaches its opposite bound before any basic blocks
            z[head] -= flip * alpha
            z[q] = hi[q] if direction > 0 else lo[q]
            state[q] = AT_UPPER if direction > 0 else AT_LOWER
            it += 1
            degenerate = 0
            bland = False
            continue
        if rpos < 0:
            if phase == 1:
                raise NumericalBreakdown("unbounded ray in phase 1")
            return LpSolution("unbounded", None, -INF, iterations=it)

        theta = max(theta, 0.0)
        leaving = head[rpos]
        z[head] -= theta * alpha
        z[q] += direction * theta
        # leaving variable is placed exactly on the bound it reached
        if alpha[rpos] > 0:
            z[leaving] = lt[rpos]
            state[leaving] = AT_LOWER
        else:
            z[leaving] = ut[rpos]
            state[leaving] = AT_UPPER
        if not np.isfinite(z[leaving]):
            z[leaving] = 0.0
            state[leaving] = AT_ZERO
        elif z[leaving] == lo[leaving]:
            state[leaving] = AT_LOWER
        elif z[leaving] == hi[leaving]:
            state[leaving] = AT_UPPER
        if abs(w[rpos]) < 1e-11:
            raise NumericalBreakdown(f"pivot {w[rpos]:.3e} too small")
        head[rpos] = q
        state[q] = BASIC
        basis.update(rpos, w)
        it += 1
        if theta < 1e-12:
            degenerate += 1
            if degenerate > degenerate_guard:
                bland = True
        else:
            degenerate = 0
            bland = False
        if len(basis.etas) >= refactor_every:
            basis.refactor(head)
            recompute()

    basis.refactor(head)
    recompute()
    # clean nonbasic values exactly onto bounds, then recompute basics
    xs = z[:n] * s
    rows_act = A @ xs
    y_scaled = basis.btran(cost[head])
    duals = y_scaled * r
    red = c - A.T @ duals
    obj = float(c @ xs)
    dual_bound = _dual_bound(red, lb, ub, duals, row_lo, row_hi)
    return LpSolution("optimal", xs, obj, rows_act, duals, red, dual_bound, it, head.copy())


def _dual_bound(red, lb, ub, duals, row_lo, row_hi, tol=1e-9) -> float:
    """Lower bound sum_j min over box of d_j z_j, logicals included."""
    total = 0.0
    for d, l, u in ((red, lb, ub), (duals, row_lo, row_hi)):
        pos = d > tol
        neg = d < -tol
        if np.any(~np.isfinite(l[pos])) or np.any(~np.isfinite(u[neg])):
            return -INF
        total += float(d[pos] @ l[pos] + d[neg] @ u[neg])
    return total


def solve_lp(model, **options) -> LpSolution:
    """Solve the LP relaxation of a :class:`~chpuc.lpmodel.MilpModel`."""
    lo, hi = model.row_bounds()
    return simplex(model.c, model.A, lo, hi, model.lb, model.ub, **options)
