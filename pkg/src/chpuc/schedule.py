"""Turn solver assignments into per-unit / per-bus / per-zone hourly schedules."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from chpuc.builder import unit_cost_coefficients
from chpuc.instance import ValidatedInstance
from chpuc.lpmodel import MilpModel


class InfeasibleAssignment(ValueError):
    def __init__(self, label: str, amount: float):
        super().__init__(f"assignment violates {label} by {amount:.3g}")
        self.label = label
        self.amount = amount


@dataclass
class UnitSchedule:
    on: np.ndarray
    startup: np.ndarray
    fuel: np.ndarray
    power: np.ndarray
    heat: np.ndarray
    valve: np.ndarray


@dataclass
class Schedule:
    horizon: int
    units: dict = field(default_factory=dict)       # unit id -> UnitSchedule
    angle: dict = field(default_factory=dict)       # bus id -> array
    spill: dict = field(default_factory=dict)       # bus id -> array
    flow: dict = field(default_factory=dict)        # "from/to" -> array
    storage: dict = field(default_factory=dict)     # zone id -> level at start of each hour
    storage_end: dict = field(default_factory=dict) # zone id -> level after the last hour
    fuel_cost: float = 0.0
    startup_cost: float = 0.0
    om_cost: float = 0.0

    @property
    def total_cost(self) -> float:
        return self.fuel_cost + self.startup_cost + self.om_cost

    @property
    def fuel_mwh(self) -> float:
        return float(sum(u.fuel.sum() for u in self.units.values()))

    @property
    def spill_mwh(self) -> float:
        return float(sum(s.sum() for s in self.spill.values()))

    def recompute_costs(self, inst: ValidatedInstance) -> None:
        """Fuel, start-up and O&M totals from the hourly series."""
        fuel = start = om = 0.0
        for uid, us in self.units.items():
            c = inst.unit(uid).costs
            fuel += c.fuel_price * us.fuel.sum()
            start += c.startup_cost * us.startup.sum()
            om += (c.om_time * us.on.sum() + c.om_startup * us.startup.sum()
                   + c.om_fuel * us.fuel.sum())
        self.fuel_cost, self.startup_cost, self.om_cost = float(fuel), float(start), float(om)

    def unit_cost(self, inst: ValidatedInstance, uid: str) -> float:
        c_fuel, c_start, c_on = unit_cost_coefficients(inst.unit(uid))
        us = self.units[uid]
        return float(c_fuel * us.fuel.sum() + c_start * us.startup.sum() + c_on * us.on.sum())

    def merged(self, other: "Schedule", inst: ValidatedInstance) -> "Schedule":
        """Union of two stage schedules; ``other`` wins where both define a unit."""
        out = Schedule(self.horizon)
        out.units = {**self.units, **other.units}
        for name in ("angle", "spill", "flow", "storage", "storage_end"):
            setattr(out, name, {**getattr(self, name), **getattr(other, name)})
        out.units = dict(sorted(out.units.items()))
        out.recompute_costs(inst)
        return out


def extract_schedule(model: MilpModel, x, inst: ValidatedInstance, tol: float = 1e-6,
                     check: bool = True) -> Schedule:
    """Map an assignment back onto named hourly series.

    Raises :class:`InfeasibleAssignment` naming the worst violated row or bound,
    or a binary that is not within ``tol`` of 0/1.
    """
    x = np.asarray(x, dtype=float).copy()
    if check:
        bad = model.violations(x, tol)
        if bad:
            raise InfeasibleAssignment(*bad[0])
        ints = np.flatnonzero(model.integer)
        frac = np.abs(x[ints] - np.round(x[ints]))
        if frac.size and frac.max() > tol:
            k = int(ints[np.argmax(frac)])
            raise InfeasibleAssignment(model.var_names[k], float(frac.max()))
    x[model.integer] = np.round(x[model.integer])
    T = inst.horizon

    def series(fmt: str) -> Optional[np.ndarray]:
        if not model.has_var(fmt.format(t=1)):
            return None
        return np.array([x[model.col(fmt.format(t=t))] for t in range(1, T + 1)])

    zeros = np.zeros(T)
    sched = Schedule(T)
    for u in inst.units:
        on = series(f"theta/{u.id}/{{t}}")
        if on is None:
            continue
        vals = {key: series(f"{key}/{u.id}/{{t}}") for key in ("tau", "f", "p", "h", "o")}
        sched.units[u.id] = UnitSchedule(
            on=on,
            startup=vals["tau"],
            fuel=vals["f"],
            power=vals["p"] if vals["p"] is not None else zeros.copy(),
            heat=vals["h"] if vals["h"] is not None else zeros.copy(),
            valve=vals["o"] if vals["o"] is not None else zeros.copy(),
        )
    for bus in inst.buses:
        spill = series(f"spill/{bus.id}/{{t}}")
        if spill is not None:
            sched.spill[bus.id] = spill
            sched.angle[bus.id] = series(f"delta/{bus.id}/{{t}}")
    for ln in inst.lines:
        flow = series(f"flow/{ln.from_bus}/{ln.to_bus}/{{t}}")
        if flow is not None:
            sched.flow[ln.label] = flow
    for z in inst.zones:
        level = series(f"storage/{z.id}/{{t}}")
        if level is not None:
            sched.storage[z.id] = level
            sched.storage_end[z.id] = float(x[model.col(f"storage/{z.id}/{T + 1}")])
    sched.recompute_costs(inst)
    return sched
