"""Solver-independent sparse MILP container and an incremental builder."""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
import scipy.sparse as sp

INF = float("inf")
SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class VarRef:
    """Handle to a model column. ``name`` is a structured label like ``theta/G1/3``."""

    index: int
    kind: str
    name: str

    @property
    def symbol(self) -> str:
        return self.name.split("/", 1)[0]


Term = tuple  # (VarRef | int, coefficient)


@dataclass
class MilpModel:
    var_names: tuple
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    c: np.ndarray
    A: sp.csr_matrix
    sense: tuple
    rhs: np.ndarray
    row_names: tuple
    build_log: list = field(default_factory=list)
    name: str = "model"

    def __post_init__(self):
        self._col = {n: k for k, n in enumerate(self.var_names)}
        self._row = {n: k for k, n in enumerate(self.row_names)}

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def n_binary(self) -> int:
        return int(self.integer.sum())

    def col(self, name: str) -> int:
        return self._col[name]

    def row(self, name: str) -> int:
        return self._row[name]

    def has_var(self, name: str) -> bool:
        return name in self._col

    def var_ref(self, name: str) -> VarRef:
        k = self._col[name]
        return VarRef(k, "binary" if self.integer[k] else "continuous", name)

    def row_bounds(self):
        """Row activity bounds (lower, upper) implied by sense and rhs."""
        lo = np.full(self.n_rows, -INF)
        hi = np.full(self.n_rows, INF)
        s = np.array(self.sense) if self.n_rows else np.array([], dtype=str)
        le, eq, ge = s == "<=", s == "=", s == ">="
        hi[le | eq] = self.rhs[le | eq]
        lo[ge | eq] = self.rhs[ge | eq]
        return lo, hi

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float))

    def copy(self, **changes) -> "MilpModel":
        kw = dict(
            var_names=self.var_names, lb=self.lb.copy(), ub=self.ub.copy(),
            integer=self.integer.copy(), c=self.c.copy(), A=self.A, sense=self.sense,
            rhs=self.rhs.copy(), row_names=self.row_names, build_log=list(self.build_log),
            name=self.name,
        )
        kw.update(changes)
        return MilpModel(**kw)

    def relaxed(self) -> "MilpModel":
        return self.copy(integer=np.zeros(self.n_vars, dtype=bool))

    def with_objective(self, c) -> "MilpModel":
        return self.copy(c=np.asarray(c, dtype=float))

    def fixed(self, values: dict) -> "MilpModel":
        """Copy with variables (by name) fixed to the given values."""
        lb, ub = self.lb.copy(), self.ub.copy()
        for name, v in values.items():
            k = self._col[name]
            lb[k] = ub[k] = float(v)
        return self.copy(lb=lb, ub=ub)

    def violations(self, x, tol: float = 1e-6):
        """List of (label, amount) for rows/bounds violated by more than ``tol``.

        Row residuals are measured relative to max(1, |rhs|).
        """
        x = np.asarray(x, dtype=float)
        out = []
        below = self.lb - x
        above = x - self.ub
        for k in np.flatnonzero((below > tol) | (above > tol)):
            out.append((self.var_names[k], float(max(below[k], above[k]))))
        act = self.A @ x
        lo, hi = self.row_bounds()
        scale = np.maximum(1.0, np.abs(self.rhs))
        viol = np.maximum(lo - act, act - hi) / scale
        for r in np.flatnonzero(viol > tol):
            out.append((self.row_names[r], float(viol[r])))
        out.sort(key=lambda item: -item[1])
        return out

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.lb, self.ub, self.integer.astype(np.int8), self.c, self.rhs,
                    self.A.indptr, self.A.indices, self.A.data):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update("\n".join(self.var_names).encode())
        h.update("\n".join(self.row_names).encode())
        h.update("\n".join(self.sense).encode())
        return h.hexdigest()

    def family_counts(self) -> dict:
        """Count variables and rows per family (label prefix before the first '/')."""
        var_fam = Counter(n.split("/", 1)[0] for n in self.var_names)
        row_fam = Counter(n.split("/", 1)[0] for n in self.row_names)
        return {"variables": dict(sorted(var_fam.items())), "rows": dict(sorted(row_fam.items()))}

    def log_text(self) -> str:
        counts = self.family_counts()
        lines = [f"model {self.name}: {self.n_vars} variables "
                 f"({self.n_binary} binary), {self.n_rows} rows, {self.A.nnz} nonzeros"]
        lines.append("variables by family:")
        lines += [f"  {k:<12}{v:>8}" for k, v in counts["variables"].items()]
        lines.append("rows by family:")
        lines += [f"  {k:<12}{v:>8}" for k, v in counts["rows"].items()]
        lines += [f"note: {msg}" for msg in self.build_log]
        return "\n".join(lines) + "\n"


class ModelBuilder:
    """Accumulates columns and rows; ``build()`` freezes them into a MilpModel."""

    def __init__(self, name: str = "model"):
        self.name = name
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._cost: list[float] = []
        self._rows_i: list[int] = []
        self._rows_j: list[int] = []
        self._rows_v: list[float] = []
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []
        self._row_index: dict[str, int] = {}
        self.log: list[str] = []

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, binary: bool = False,
                cost: float = 0.0) -> VarRef:
        if name in self._index:
            raise ValueError(f"duplicate variable name {name!r}")
        if binary:
            lb, ub = max(0.0, lb), min(1.0, ub)
        k = len(self._names)
        self._names.append(name)
        self._index[name] = k
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._int.append(bool(binary))
        self._cost.append(float(cost))
        return VarRef(k, "binary" if binary else "continuous", name)

    def var(self, name: str) -> VarRef:
        k = self._index[name]
        return VarRef(k, "binary" if self._int[k] else "continuous", name)

    def has_var(self, name: str) -> bool:
        return name in self._index

    def add_cost(self, var: Union[VarRef, int], coef: float) -> None:
        k = var.index if isinstance(var, VarRef) else var
        self._cost[k] += float(coef)

    def set_bounds(self, var: Union[VarRef, int], lb: Optional[float] = None,
                   ub: Optional[float] = None) -> None:
        k = var.index if isinstance(var, VarRef) else var
        if lb is not None:
            self._lb[k] = float(lb)
        if ub is not None:
            self._ub[k] = float(ub)

    def add_row(self, name: str, terms: Iterable[Term], sense: str, rhs: float) -> int:
        if sense not in SENSES:
            raise ValueError(f"bad row sense {sense!r}")
        if name in self._row_index:
            raise ValueError(f"duplicate row name {name!r}")
        r = len(self._row_names)
        for var, coef in terms:
            if coef == 0:
                continue
            self._rows_i.append(r)
            self._rows_j.append(var.index if isinstance(var, VarRef) else int(var))
            self._rows_v.append(float(coef))
        self._row_names.append(name)
        self._row_index[name] = r
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        return r

    @property
    def n_vars(self) -> int:
        return len(self._names)

    @property
    def n_rows(self) -> int:
        return len(self._row_names)

    def build(self) -> MilpModel:
        m, n = len(self._row_names), len(self._names)
        # duplicates are summed by the COO -> CSR conversion
        A = sp.coo_matrix((self._rows_v, (self._rows_i, self._rows_j)), shape=(m, n)).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        return MilpModel(
            var_names=tuple(self._names),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            integer=np.array(self._int, dtype=bool),
            c=np.array(self._cost, dtype=float),
            A=A,
            sense=tuple(self._sense),
            rhs=np.array(self._rhs, dtype=float),
            row_names=tuple(self._row_names),
            build_log=list(self.log),
            name=self.name,
        )
