"""Piecewise-linear performance curves and their MILP encodings.

A one-degree-of-freedom unit is sampled at J fuel break-points; its outputs
are a convex combination of two adjacent samples selected by one segment
binary. A two-degree-of-freedom unit is sampled on a J x K grid over fuel
and valve opening. Every grid cell (j, k) is split along the diagonal from
vertex (j+1, k) to vertex (j, k+1):

    lower triangle  {(j, k), (j+1, k), (j, k+1)}
    upper triangle  {(j+1, k), (j, k+1), (j+1, k+1)}

and outputs are the barycentric combination over the selected triangle.
Both encodings are gated by the unit's commitment binary, so an off unit
has all weights, fuel and outputs at zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from chpuc.lpmodel import ModelBuilder, VarRef


class OutOfRange(ValueError):
    pass


def _tuple1(values) -> Optional[tuple]:
    return None if values is None else tuple(float(v) for v in values)


def _tuple2(values) -> Optional[tuple]:
    return None if values is None else tuple(tuple(float(v) for v in row) for row in values)


@dataclass(frozen=True)
class Curve1D:
    fuel_points: tuple
    power_points: Optional[tuple] = None
    heat_points: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "fuel_points", _tuple1(self.fuel_points))
        object.__setattr__(self, "power_points", _tuple1(self.power_points))
        object.__setattr__(self, "heat_points", _tuple1(self.heat_points))

    @property
    def n_points(self) -> int:
        return len(self.fuel_points)

    def check(self) -> None:
        J = self.n_points
        if J < 2:
            raise ValueError("a curve needs at least 2 break-points")
        if np.any(np.diff(self.fuel_points) <= 0):
            raise ValueError("fuel_points must be strictly increasing")
        if self.power_points is None and self.heat_points is None:
            raise ValueError("a curve needs power_points or heat_points")
        for name in ("power_points", "heat_points"):
            pts = getattr(self, name)
            if pts is not None and len(pts) != J:
                raise ValueError(f"{name} has {len(pts)} values, expected {J}")

    def to_dict(self) -> dict:
        d = {"fuel_points": list(self.fuel_points)}
        if self.power_points is not None:
            d["power_points"] = list(self.power_points)
        if self.heat_points is not None:
            d["heat_points"] = list(self.heat_points)
        return d


@dataclass(frozen=True)
class Curve2D:
    o_points: tuple
    fuel_grid: tuple
    power_grid: Optional[tuple] = None
    heat_grid: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "o_points", _tuple1(self.o_points))
        object.__setattr__(self, "fuel_grid", _tuple2(self.fuel_grid))
        object.__setattr__(self, "power_grid", _tuple2(self.power_grid))
        object.__setattr__(self, "heat_grid", _tuple2(self.heat_grid))

    @property
    def shape(self) -> tuple:
        return len(self.fuel_grid), len(self.o_points)

    def check(self) -> None:
        J, K = self.shape
        if J < 2 or K < 2:
            raise ValueError("a 2-D curve needs at least a 2 x 2 grid")
        if np.any(np.diff(self.o_points) <= 0):
            raise ValueError("o_points must be strictly increasing")
        for name in ("fuel_grid", "power_grid", "heat_grid"):
            grid = getattr(self, name)
            if grid is not None and (len(grid) != J or any(len(r) != K for r in grid)):
                raise ValueError(f"{name} must be {J} x {K}")
        if self.power_grid is None and self.heat_grid is None:
            raise ValueError("a curve needs power_grid or heat_grid")
        if np.any(np.diff(np.asarray(self.fuel_grid), axis=0) <= 0):
            raise ValueError("fuel_grid must be strictly increasing in j for each k")

    def to_dict(self) -> dict:
        d = {"o_points": list(self.o_points), "fuel_grid": [list(r) for r in self.fuel_grid]}
        if self.power_grid is not None:
            d["power_grid"] = [list(r) for r in self.power_grid]
        if self.heat_grid is not None:
            d["heat_grid"] = [list(r) for r in self.heat_grid]
        return d


@dataclass
class PwlBlock:
    """Columns and rows emitted for one unit-hour curve encoding."""

    weights: dict = field(default_factory=dict)      # (j,) or (j, k) -> VarRef
    segments: dict = field(default_factory=dict)     # (j,) or ("up"|"low", j, k) -> VarRef
    adjacency_rows: list = field(default_factory=list)
    selection_rows: list = field(default_factory=list)
    output_rows: dict = field(default_factory=dict)  # "f" | "o" | "p" | "h" -> row index


# --- triangulation --------------------------------------------------------

def triangles(J: int, K: int) -> list:
    """All triangles of the J x K grid as (kind, j, k, vertices), 0-based, canonical order."""
    out = []
    for j in range(J - 1):
        for k in range(K - 1):
            out.append(("low", j, k, ((j, k), (j + 1, k), (j, k + 1))))
            out.append(("up", j, k, ((j + 1, k), (j, k + 1), (j + 1, k + 1))))
    return out


def incident_triangles(J: int, K: int) -> dict:
    """Map each grid vertex to the (kind, j, k) keys of the triangles containing it."""
    inc = {(j, k): [] for j in range(J) for k in range(K)}
    for kind, j, k, verts in triangles(J, K):
        for v in verts:
            inc[v].append((kind, j, k))
    return inc


# --- encoders -------------------------------------------------------------

def _output_row(builder, name, weights, values, out_var):
    terms = [(w, -v) for w, v in zip(weights, values)]
    terms.append((out_var, 1.0))
    return builder.add_row(name, terms, "=", 0.0)


def encode_curve_1d(builder: ModelBuilder, curve: Curve1D, active: VarRef, t: int,
                    unit: str, outputs: dict) -> PwlBlock:
    """Emit the segment-adjacency encoding of ``curve`` for one hour.

    ``outputs`` maps "f", and optionally "p"/"h", to existing columns that
    become the weighted break-point values.
    """
    J = curve.n_points
    blk = PwlBlock()
    alphas = [builder.add_var(f"alpha/{unit}/{j + 1}/{t}", 0.0, 1.0) for j in range(J)]
    betas = [builder.add_var(f"beta/{unit}/{j + 1}/{t}", binary=True) for j in range(J - 1)]
    blk.weights = {(j,): a for j, a in enumerate(alphas)}
    blk.segments = {(j,): b for j, b in enumerate(betas)}
    if J > 2:
        for j in range(J):
            terms = [(alphas[j], 1.0)]
            if j - 1 >= 0:
                terms.append((betas[j - 1], -1.0))
            if j < J - 1:
                terms.append((betas[j], -1.0))
            blk.adjacency_rows.append(
                builder.add_row(f"pwl_adj/{unit}/{j + 1}/{t}", terms, "<=", 0.0))
    blk.selection_rows.append(builder.add_row(
        f"pwl_seg/{unit}/{t}", [(b, 1.0) for b in betas] + [(active, -1.0)], "=", 0.0))
    blk.selection_rows.append(builder.add_row(
        f"pwl_sum/{unit}/{t}", [(a, 1.0) for a in alphas] + [(active, -1.0)], "=", 0.0))
    series = {"f": curve.fuel_points, "p": curve.power_points, "h": curve.heat_points}
    for key, var in outputs.items():
        if series.get(key) is None:
            raise ValueError(f"curve has no samples for output {key!r}")
        blk.output_rows[key] = _output_row(
            builder, f"pwl_{key}/{unit}/{t}", alphas, series[key], var)
    return blk


def encode_curve_2d(builder: ModelBuilder, curve: Curve2D, active: VarRef, t: int,
                    unit: str, outputs: dict) -> PwlBlock:
    """Emit the triangulated encoding of a 2-D ``curve`` for one hour.

    ``outputs`` maps "f", "o" and optionally "p"/"h" to existing columns.
    """
    J, K = curve.shape
    blk = PwlBlock()
    for j in range(J):
        for k in range(K):
            blk.weights[(j, k)] = builder.add_var(f"alpha/{unit}/{j + 1}/{k + 1}/{t}", 0.0, 1.0)
    for kind, j, k, _ in triangles(J, K):
        blk.segments[(kind, j, k)] = builder.add_var(
            f"beta_{kind}/{unit}/{j + 1}/{k + 1}/{t}", binary=True)
    for (j, k), tris in incident_triangles(J, K).items():
        terms = [(blk.weights[(j, k)], 1.0)] + [(blk.segments[key], -1.0) for key in tris]
        blk.adjacency_rows.append(
            builder.add_row(f"pwl_adj/{unit}/{j + 1}/{k + 1}/{t}", terms, "<=", 0.0))
    blk.selection_rows.append(builder.add_row(
        f"pwl_seg/{unit}/{t}",
        [(b, 1.0) for b in blk.segments.values()] + [(active, -1.0)], "=", 0.0))
    blk.selection_rows.append(builder.add_row(
        f"pwl_sum/{unit}/{t}",
        [(a, 1.0) for a in blk.weights.values()] + [(active, -1.0)], "=", 0.0))
    keys = list(blk.weights)
    weights = [blk.weights[key] for key in keys]
    grids = {
        "f": curve.fuel_grid,
        "o": [[curve.o_points[k] for k in range(K)] for _ in range(J)],
        "p": curve.power_grid,
        "h": curve.heat_grid,
    }
    for key, var in outputs.items():
        grid = grids.get(key)
        if grid is None:
            raise ValueError(f"curve has no samples for output {key!r}")
        values = [grid[j][k] for j, k in keys]
        blk.output_rows[key] = _output_row(builder, f"pwl_{key}/{unit}/{t}", weights, values, var)
    return blk


# --- reference interpolation ---------------------------------------------

def interpolate_1d(curve: Curve1D, f: float, tol: float = 1e-12):
    """Piecewise-linear (p, h) at fuel input ``f``; absent outputs are None."""
    xs = np.asarray(curve.fuel_points)
    span = tol * max(1.0, abs(xs[0]), abs(xs[-1]))
    if f < xs[0] - span or f > xs[-1] + span:
        raise OutOfRange(f"fuel {f} outside sampled span [{xs[0]}, {xs[-1]}]")
    f = min(max(f, xs[0]), xs[-1])
    p = None if curve.power_points is None else float(np.interp(f, xs, curve.power_points))
    h = None if curve.heat_points is None else float(np.interp(f, xs, curve.heat_points))
    return p, h


def locate_triangle(curve: Curve2D, f: float, o: float, tol: float = 1e-10):
    """Return (vertices, barycentric weights) of the first triangle containing (f, o)."""
    F = np.asarray(curve.fuel_grid)
    O = curve.o_points
    J, K = curve.shape
    for _, _, _, verts in triangles(J, K):
        (j0, k0), (j1, k1), (j2, k2) = verts
        x0, y0 = F[j0, k0], O[k0]
        M = np.array([[F[j1, k1] - x0, F[j2, k2] - x0],
                      [O[k1] - y0, O[k2] - y0]])
        try:
            l1, l2 = np.linalg.solve(M, [f - x0, o - y0])
        except np.linalg.LinAlgError:
            continue
        lam = np.array([1.0 - l1 - l2, l1, l2])
        if lam.min() >= -tol:
            lam = np.clip(lam, 0.0, None)
            return verts, lam / lam.sum()
    raise OutOfRange(f"point (f={f}, o={o}) lies outside the sampled region")


def interpolate_2d(curve: Curve2D, f: float, o: float):
    """Barycentric (p, h) at fuel ``f`` and valve opening ``o``; absent outputs are None."""
    verts, lam = locate_triangle(curve, f, o)

    def combine(grid):
        if grid is None:
            return None
        return float(sum(w * grid[j][k] for w, (j, k) in zip(lam, verts)))

    return combine(curve.power_grid), combine(curve.heat_grid)
