"""LP/MILP solving and MPS export."""
from typing import Optional

from chpuc.lpmodel import MilpModel
from chpuc.solver.bnb import MilpSolution, branch_and_bound, relative_gap
from chpuc.solver.diagnose import elastic_rows
from chpuc.solver.highs import solve_with_highs
from chpuc.solver.mps import write_mps
from chpuc.solver.simplex import LpSolution, NumericalBreakdown, simplex, solve_lp

# the embedded branch-and-bound handles models up to this many binaries under "auto"
AUTO_BNB_BINARIES = 64

ENGINES = ("auto", "bnb", "highs")


def solve_milp(model: MilpModel, gap_tol: float = 1e-6, node_limit: Optional[int] = None,
               time_limit: Optional[float] = None, engine: str = "auto",
               lp: str = "auto") -> MilpSolution:
    """Solve a binary MILP.

    ``engine="bnb"`` runs the embedded branch-and-bound (``lp`` picks its node
    LP solver), ``"highs"`` hands the model to HiGHS, and ``"auto"`` uses the
    embedded search for models with at most ``AUTO_BNB_BINARIES`` binaries.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "auto":
        engine = "bnb" if model.n_binary <= AUTO_BNB_BINARIES else "highs"
    if engine == "bnb":
        return branch_and_bound(model, gap_tol=gap_tol, node_limit=node_limit,
                                time_limit=time_limit, lp=lp)
    return solve_with_highs(model, gap_tol=gap_tol, node_limit=node_limit, time_limit=time_limit)


__all__ = [
    "LpSolution", "MilpSolution", "NumericalBreakdown", "branch_and_bound", "elastic_rows",
    "relative_gap",
    "simplex", "solve_lp", "solve_milp", "solve_with_highs", "write_mps",
]
