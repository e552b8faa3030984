"""Fixed-format MPS export.

Structured labels are longer than the 8 characters fixed MPS allows, so each
label is truncated and, on collision, given a ``~<base36>`` suffix. The
mapping is written next to the MPS file as ``<name>.names.json``.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from chpuc.lpmodel import MilpModel

OBJ_ROW = "COST"
_SENSE_CODE = {"<=": "L", "=": "E", ">=": "G"}
_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def _base36(n: int) -> str:
    out = ""
    while True:
        n, r = divmod(n, 36)
        out = _DIGITS[r] + out
        if n == 0:
            return out


def short_names(labels, reserved=()) -> list:
    """Deterministic collision-free 8-character names for ``labels``."""
    used = set(reserved)
    counters: dict[str, int] = {}
    out = []
    for label in labels:
        clean = label.replace(" ", "_")
        cand = clean[:8]
        if cand in used:
            stem = clean[:8]
            n = counters.get(stem, 0)
            while True:
                n += 1
                suffix = "~" + _base36(n)
                cand = clean[:8 - len(suffix)] + suffix
                if cand not in used:
                    break
            counters[stem] = n
        used.add(cand)
        out.append(cand)
    return out


def format_number(v: float) -> str:
    """Shortest-precision-loss rendering of ``v`` in at most 12 characters."""
    v = float(v)
    if v == 0:
        return "0"
    for prec in range(17, 0, -1):
        s = f"{v:.{prec}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot fit {v!r} in a 12-character MPS field")


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def write_mps(model: MilpModel, destination: Union[str, Path], name: str = "CHPUC") -> Path:
    """Write ``model`` as fixed-format MPS; returns the path of the name-map sidecar."""
    destination = Path(destination)
    cols = short_names(model.var_names)
    rows = short_names(model.row_names, reserved=(OBJ_ROW,))
    A = model.A.tocsc()
    lines = [f"{'NAME':<14}{name[:8]}", "ROWS", _line("N", OBJ_ROW)]
    lines += [_line(_SENSE_CODE[s], r) for s, r in zip(model.sense, rows)]
    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j in range(model.n_vars):
        is_int = bool(model.integer[j])
        if is_int != in_int:
            tag = "'INTORG'" if is_int else "'INTEND'"
            lines.append(_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", tag))
            marker += 1
            in_int = is_int
        entries = []
        if model.c[j] != 0:
            entries.append((OBJ_ROW, model.c[j]))
        start, end = A.indptr[j], A.indptr[j + 1]
        entries += [(rows[i], v) for i, v in zip(A.indices[start:end], A.data[start:end])]
        if not entries:
            entries.append((OBJ_ROW, 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            f3, f4 = pair[0][0], format_number(pair[0][1])
            f5, f6 = (pair[1][0], format_number(pair[1][1])) if len(pair) > 1 else ("", "")
            lines.append(_line("", cols[j], f3, f4, f5, f6))
    if in_int:
        lines.append(_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", "'INTEND'"))
    lines.append("RHS")
    for r, v in zip(rows, model.rhs):
        if v != 0:
            lines.append(_line("", "RHS", r, format_number(v)))
    lines.append("BOUNDS")
    for j in range(model.n_vars):
        lines += _bound_lines(cols[j], model.lb[j], model.ub[j], bool(model.integer[j]))
    lines.append("ENDATA")
    destination.write_text("\n".join(lines) + "\n", encoding="ascii")

    sidecar = destination.with_suffix(destination.suffix + ".names.json")
    sidecar.write_text(json.dumps({
        "columns": dict(zip(cols, model.var_names)),
        "rows": dict(zip(rows, model.row_names)),
        "objective_row": OBJ_ROW,
    }, indent=0) + "\n", encoding="utf-8")
    return sidecar


def _bound_lines(col: str, lb: float, ub: float, integer: bool) -> list:
    out = []
    if lb == ub:
        return [_line("FX", "BND", col, format_number(lb))]
    if np.isneginf(lb) and np.isposinf(ub):
        return [_line("FR", "BND", col)]
    if np.isneginf(lb):
        out.append(_line("MI", "BND", col))
    elif lb != 0 or integer or ub < 0:
        out.append(_line("LO", "BND", col, format_number(lb)))
    if np.isfinite(ub):
        out.append(_line("UP", "BND", col, format_number(ub)))
    elif integer:
        out.append(_line("PL", "BND", col))
    return out
