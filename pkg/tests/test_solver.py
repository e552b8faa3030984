import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from chpuc.lpmodel import ModelBuilder
from chpuc.solver import branch_and_bound, relative_gap, simplex, solve_lp, solve_milp, write_mps
from chpuc.solver.mps import short_names
from oracles import cbc_solve, enumerate_milp


def _lp(c, rows, lb, ub, names=None, binary=()):
    b = ModelBuilder("t")
    xs = [b.add_var(f"x{k}", lb[k], ub[k], binary=k in binary, cost=c[k]) for k in range(len(c))]
    for r, (coefs, sense, rhs) in enumerate(rows):
        b.add_row(f"r{r}", [(xs[k], v) for k, v in enumerate(coefs)], sense, rhs)
    return b.build()


# ---- simplex --------------------------------------------------------------------

def test_single_lower_bound_row():
    sol = solve_lp(_lp([1.0], [([1.0], ">=", 3.0)], [-np.inf], [np.inf]))
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(3.0) and sol.objective == pytest.approx(3.0)


def test_contradictory_rows_are_infeasible():
    sol = solve_lp(_lp([1.0], [([1.0], ">=", 3.0), ([1.0], "<=", 2.0)], [-np.inf], [np.inf]))
    assert sol.status == "infeasible"


def test_symmetric_facet():
    sol = solve_lp(_lp([-1.0, -1.0], [([1.0, 1.0], "<=", 1.0)], [0, 0], [1, 1]))
    assert sol.objective == pytest.approx(-1.0)
    assert sol.x.sum() == pytest.approx(1.0)


def test_unbounded_detected():
    sol = solve_lp(_lp([-1.0], [([1.0], ">=", 0.0)], [0], [np.inf]))
    assert sol.status == "unbounded"


def _random_lp(rng, m, n):
    A = rng.normal(size=(m, n)).round(3)
    x0 = rng.uniform(0, 1, n)
    slack = rng.uniform(0, 1, m)
    rhs = A @ x0 + slack
    c = rng.normal(size=n).round(3)
    lb = np.where(rng.random(n) < 0.2, -np.inf, 0.0)
    ub = np.where(rng.random(n) < 0.5, 2.0, np.inf)
    return c, A, rhs, lb, ub


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), n=st.integers(1, 8))
def test_simplex_agrees_with_highs_and_weak_duality(seed, m, n):
    rng = np.random.default_rng(seed)
    c, A, rhs, lb, ub = _random_lp(rng, m, n)
    ref = linprog(c, A_ub=A, b_ub=rhs, bounds=list(zip(lb, ub)), method="highs")
    sol = simplex(c, sp.csr_matrix(A), np.full(m, -np.inf), rhs, lb, ub)
    if ref.status == 3:
        assert sol.status == "unbounded"
        return
    assert ref.status == 0
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-8)
    assert np.all(A @ sol.x <= rhs + 1e-7)
    assert abs(sol.objective - sol.dual_bound) <= 1e-6 * max(1.0, abs(sol.objective))


def test_simplex_is_deterministic():
    rng = np.random.default_rng(4)
    c, A, rhs, lb, ub = _random_lp(rng, 6, 9)
    a = simplex(c, sp.csr_matrix(A), np.full(6, -np.inf), rhs, lb, ub)
    b = simplex(c, sp.csr_matrix(A), np.full(6, -np.inf), rhs, lb, ub)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


def test_degenerate_equalities():
    # three identical rows and a redundant sum: classic degenerate vertex
    rows = [([1, 1, 0], "=", 1.0), ([1, 1, 0], "=", 1.0), ([0, 1, 1], "<=", 1.0),
            ([1, 2, 1], "<=", 2.0)]
    sol = solve_lp(_lp([-1.0, -2.0, -1.0], rows, [0, 0, 0], [1, 1, 1]))
    assert sol.objective == pytest.approx(-2.0)


# ---- branch and bound -----------------------------------------------------------

def test_two_item_knapsack():
    m = _lp([-5.0, -4.0], [([2.0, 3.0], "<=", 4.0)], [0, 0], [1, 1], binary=(0, 1))
    sol = solve_milp(m, engine="bnb")
    assert sol.status == "optimal"
    assert tuple(sol.x.round()) == (1.0, 0.0) and -sol.objective == pytest.approx(5.0)
    assert enumerate_milp(m)[0] == pytest.approx(sol.objective)


def test_integral_relaxation_needs_one_node():
    # assignment polytope: every vertex integral
    rows = [([1, 1, 0, 0], "=", 1.0), ([0, 0, 1, 1], "=", 1.0),
            ([1, 0, 1, 0], "=", 1.0), ([0, 1, 0, 1], "=", 1.0)]
    m = _lp([3.0, 1.0, 2.0, 5.0], rows, [0] * 4, [1] * 4, binary=range(4))
    sol = solve_milp(m, engine="bnb")
    assert sol.status == "optimal" and sol.nodes == 1
    assert sol.objective == pytest.approx(3.0)


def _knapsack(rng, n):
    w = rng.integers(1, 20, n).astype(float)
    v = rng.integers(1, 30, n).astype(float)
    return _lp(list(-v), [(list(w), "<=", float(w.sum() // 2)), (list(w[::-1]), "<=", 25.0)],
               [0] * n, [1] * n, binary=range(n))


@pytest.mark.parametrize("lp", ["simplex", "highs"])
def test_bnb_matches_enumeration_on_knapsacks(lp):
    rng = np.random.default_rng(17)
    for _ in range(8):
        m = _knapsack(rng, int(rng.integers(4, 12)))
        sol = branch_and_bound(m, lp=lp)
        best, _ = enumerate_milp(m)
        assert sol.objective == pytest.approx(best, abs=1e-8)
        assert m.violations(sol.x, 1e-6) == []


def test_bound_history_is_monotone_and_deterministic():
    m = _knapsack(np.random.default_rng(2), 14)
    a, b = branch_and_bound(m), branch_and_bound(m)
    hist = np.array(a.bound_history)
    assert np.all(np.diff(hist[np.isfinite(hist)]) >= -1e-9)
    assert a.objective == b.objective and a.nodes == b.nodes
    assert a.gap == pytest.approx(relative_gap(a.objective, a.bound))


def test_node_limit_reports_limit_and_incumbent():
    m = _knapsack(np.random.default_rng(3), 18)
    sol = branch_and_bound(m, node_limit=2)
    assert sol.status in ("limit-reached", "optimal")
    if sol.status == "limit-reached":
        assert sol.nodes == 2


def test_infeasible_milp():
    m = _lp([1.0, 1.0], [([1.0, 1.0], ">=", 3.0)], [0, 0], [1, 1], binary=(0, 1))
    for engine in ("bnb", "highs"):
        assert solve_milp(m, engine=engine).status == "infeasible"


def test_bnb_rejects_general_integers():
    m = _lp([1.0], [], [0], [1], binary=(0,))
    m.ub[0] = 3.0
    with pytest.raises(ValueError):
        branch_and_bound(m)


def test_engines_agree():
    m = _knapsack(np.random.default_rng(9), 16)
    a, b = solve_milp(m, engine="bnb"), solve_milp(m, engine="highs")
    assert a.objective == pytest.approx(b.objective, abs=1e-8)


# ---- MPS ------------------------------------------------------------------------

def test_short_names_are_unique_and_stable():
    labels = ["alpha/CHP2/1/1/1", "alpha/CHP2/1/1/2", "alpha/CH", "COST"]
    names = short_names(labels, reserved=("COST",))
    assert len(set(names)) == 4 and all(len(n) <= 8 for n in names)
    assert names == short_names(labels, reserved=("COST",))
    assert "COST" not in names


def test_single_variable_round_trip(tmp_path):
    m = _lp([1.0], [([1.0], ">=", 3.0)], [0], [np.inf])
    path = tmp_path / "one.mps"
    write_mps(m, path)
    text = path.read_text()
    columns = text.split("COLUMNS\n")[1].split("RHS\n")[0].strip().splitlines()
    assert len(columns) == 1
    _, obj, values = cbc_solve(path)
    assert obj == pytest.approx(3.0)


def test_markers_enclose_exactly_the_binaries(tmp_path):
    m = _lp([1.0, -1.0, 2.0, -3.0], [([1, 1, 1, 1], "<=", 3.0)], [0] * 4, [1, 5, 1, 1],
            binary=(0, 2, 3))
    path = tmp_path / "mix.mps"
    sidecar = write_mps(m, path)
    names = json.loads(sidecar.read_text())["columns"]
    inside, flagged = False, set()
    for line in path.read_text().split("COLUMNS\n")[1].split("RHS\n")[0].splitlines():
        if "'MARKER'" in line:
            inside = "'INTORG'" in line
            continue
        if inside:
            flagged.add(names[line.split()[0]])
    assert flagged == {"x0", "x2", "x3"}
    _, obj, _ = cbc_solve(path)
    assert obj == pytest.approx(solve_milp(m, engine="bnb").objective)


def test_random_milps_round_trip_through_cbc(tmp_path):
    rng = np.random.default_rng(23)
    for i in range(5):
        m = _knapsack(rng, 10)
        path = tmp_path / f"k{i}.mps"
        write_mps(m, path)
        _, obj, _ = cbc_solve(path)
        assert obj == pytest.approx(solve_milp(m, engine="bnb").objective, abs=1e-6)
