"""Instance data model: buses, lines, thermal zones, units and their validation.

Instances are loaded from JSON files whose fields mirror the dataclasses
below one-to-one. All powers are MW, heats MWth, energies MWh, costs EUR.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from chpuc.linearize import Curve1D, Curve2D

UNIT_KINDS = ("electric-only", "heat-only", "chp-1dof", "chp-2dof", "p2h")


class InstanceError(ValueError):
    """Base class for instance problems. ``where`` is a JSON-path-like location."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(message)
        self.where = where

    def __str__(self):
        msg = super().__str__()
        return f"{self.where}: {msg}" if self.where else msg


class UnresolvedReference(InstanceError):
    def __init__(self, ref: str, where: str = ""):
        super().__init__(f"unresolved reference {ref!r}", where)
        self.ref = ref


class InvariantViolation(InstanceError):
    pass


class LengthMismatch(InstanceError):
    pass


class ZeroWindProfile(InstanceError):
    pass


@dataclass(frozen=True)
class Bus:
    id: str
    electric_demand: tuple
    wind_available: tuple


@dataclass(frozen=True)
class Line:
    from_bus: str
    to_bus: str
    susceptance: float
    rating: float

    @property
    def label(self) -> str:
        return f"{self.from_bus}/{self.to_bus}"


@dataclass(frozen=True)
class StorageSpec:
    capacity: float
    hourly_loss: float
    initial_level: float


@dataclass(frozen=True)
class ThermalZone:
    id: str
    heat_demand: tuple
    transfer_efficiency: float = 1.0
    storage: Optional[StorageSpec] = None


@dataclass(frozen=True)
class CostSpec:
    fuel_price: float = 0.0
    startup_cost: float = 0.0
    om_time: float = 0.0
    om_startup: float = 0.0
    om_fuel: float = 0.0


@dataclass(frozen=True)
class UnitSpec:
    id: str
    kind: str
    curve: Union[Curve1D, Curve2D]
    costs: CostSpec = CostSpec()
    bus: Optional[str] = None
    zone: Optional[str] = None
    e_min: float = 0.0
    e_max: float = 0.0
    h_min: float = 0.0
    h_max: float = 0.0
    ramp_up: Optional[float] = None
    ramp_down: Optional[float] = None
    max_startups: Optional[int] = None
    min_uptime: int = 0
    initially_on: bool = False

    @property
    def is_electric(self) -> bool:
        """Member of the electric-producer set (has a bus)."""
        return self.kind in ("electric-only", "chp-1dof", "chp-2dof", "p2h")

    @property
    def is_thermal(self) -> bool:
        return self.kind in ("heat-only", "chp-1dof", "chp-2dof", "p2h")

    @property
    def is_chp(self) -> bool:
        return self.kind in ("chp-1dof", "chp-2dof")

    @property
    def initial_output(self) -> float:
        """Electric output assumed for the hour before the horizon."""
        return self.e_min if self.initially_on else 0.0


@dataclass(frozen=True)
class Instance:
    horizon: int
    buses: tuple
    lines: tuple = ()
    zones: tuple = ()
    units: tuple = ()
    name: str = ""
    slack_bus: Optional[str] = None

    def replace(self, **changes) -> "Instance":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ValidatedInstance:
    """An instance whose invariants hold, with dense index maps.

    Units are sorted by id; buses, lines and zones keep file order. The slack
    bus is ``slack_bus`` if given, else the first bus.
    """

    instance: Instance
    bus_index: dict = field(compare=True)
    zone_index: dict = field(compare=True)
    unit_index: dict = field(compare=True)
    slack: int = 0

    @property
    def horizon(self) -> int:
        return self.instance.horizon

    @property
    def buses(self) -> tuple:
        return self.instance.buses

    @property
    def lines(self) -> tuple:
        return self.instance.lines

    @property
    def zones(self) -> tuple:
        return self.instance.zones

    @property
    def units(self) -> tuple:
        return self.instance.units

    @property
    def name(self) -> str:
        return self.instance.name

    def unit(self, uid: str) -> UnitSpec:
        return self.instance.units[self.unit_index[uid]]

    def zone(self, zid: str) -> ThermalZone:
        return self.instance.zones[self.zone_index[zid]]

    def total_demand(self) -> float:
        return float(sum(sum(b.electric_demand) for b in self.buses))

    def total_wind(self) -> float:
        return float(sum(sum(b.wind_available) for b in self.buses))


def _series(values: Sequence[float]) -> tuple:
    return tuple(float(v) for v in values)


def check_instance(raw: Union[Instance, ValidatedInstance]) -> list:
    """Return every invariant violation found in ``raw`` (empty when valid)."""
    inst = raw.instance if isinstance(raw, ValidatedInstance) else raw
    problems = []
    T = inst.horizon
    if not isinstance(T, int) or T < 1:
        problems.append(InvariantViolation("horizon must be a positive integer", "horizon"))
        return problems
    if not inst.buses:
        problems.append(InvariantViolation("at least one bus is required", "buses"))
        return problems

    bus_ids = [b.id for b in inst.buses]
    for i, b in enumerate(inst.buses):
        where = f"buses[{i}]"
        if bus_ids.count(b.id) > 1:
            problems.append(InvariantViolation(f"duplicate bus id {b.id!r}", where + ".id"))
        for attr in ("electric_demand", "wind_available"):
            series = getattr(b, attr)
            if len(series) != T:
                problems.append(LengthMismatch(
                    f"{attr} has {len(series)} values, horizon is {T}", f"{where}.{attr}"))
            if any(v < 0 for v in series):
                problems.append(InvariantViolation(f"{attr} must be >= 0", f"{where}.{attr}"))
    if inst.slack_bus is not None and inst.slack_bus not in bus_ids:
        problems.append(UnresolvedReference(inst.slack_bus, "slack_bus"))

    seen_pairs = set()
    for i, ln in enumerate(inst.lines):
        where = f"lines[{i}]"
        for attr in ("from_bus", "to_bus"):
            ref = getattr(ln, attr)
            if ref not in bus_ids:
                problems.append(UnresolvedReference(ref, f"{where}.{attr}"))
        if ln.from_bus == ln.to_bus:
            problems.append(InvariantViolation("line must join two distinct buses", where))
        pair = frozenset((ln.from_bus, ln.to_bus))
        if pair in seen_pairs:
            problems.append(InvariantViolation(
                "parallel line; merge parallel circuits before loading", where))
        seen_pairs.add(pair)
        if not ln.rating > 0:
            problems.append(InvariantViolation("rating must be > 0", where + ".rating"))
        if not ln.susceptance > 0:
            problems.append(InvariantViolation("susceptance must be > 0", where + ".susceptance"))

    zone_ids = [z.id for z in inst.zones]
    for i, z in enumerate(inst.zones):
        where = f"zones[{i}]"
        if zone_ids.count(z.id) > 1:
            problems.append(InvariantViolation(f"duplicate zone id {z.id!r}", where + ".id"))
        if len(z.heat_demand) != T:
            problems.append(LengthMismatch(
                f"heat_demand has {len(z.heat_demand)} values, horizon is {T}", where + ".heat_demand"))
        if any(v < 0 for v in z.heat_demand):
            problems.append(InvariantViolation("heat_demand must be >= 0", where + ".heat_demand"))
        if not 0 < z.transfer_efficiency <= 1:
            problems.append(InvariantViolation(
                "transfer_efficiency must lie in (0, 1]", where + ".transfer_efficiency"))
        s = z.storage
        if s is not None:
            if not 0 <= s.initial_level <= s.capacity:
                problems.append(InvariantViolation(
                    "storage requires 0 <= initial_level <= capacity", where + ".storage"))
            if not 0 <= s.hourly_loss < 1:
                problems.append(InvariantViolation(
                    "storage requires 0 <= hourly_loss < 1", where + ".storage.hourly_loss"))

    unit_ids = [u.id for u in inst.units]
    for i, u in enumerate(inst.units):
        where = f"units[{i}]"
        if unit_ids.count(u.id) > 1:
            problems.append(InvariantViolation(f"duplicate unit id {u.id!r}", where + ".id"))
        problems.extend(_check_unit(u, where, bus_ids, zone_ids))

    if not problems and len(inst.buses) > 1:
        idx = {b: k for k, b in enumerate(bus_ids)}
        rows = [idx[ln.from_bus] for ln in inst.lines]
        cols = [idx[ln.to_bus] for ln in inst.lines]
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(idx), len(idx)))
        n_comp, _ = connected_components(graph, directed=False)
        if n_comp > 1:
            problems.append(InvariantViolation(
                f"electric network is not connected ({n_comp} islands)", "lines"))
    return problems


def _check_unit(u: UnitSpec, where: str, bus_ids, zone_ids) -> list:
    problems = []
    if u.kind not in UNIT_KINDS:
        return [InvariantViolation(f"unknown unit kind {u.kind!r}", where + ".kind")]
    if u.is_electric:
        if u.bus is None:
            problems.append(InvariantViolation(f"{u.kind} unit requires a bus", where + ".bus"))
        elif u.bus not in bus_ids:
            problems.append(UnresolvedReference(u.bus, where + ".bus"))
    elif u.bus is not None:
        problems.append(InvariantViolation(f"{u.kind} unit cannot have a bus", where + ".bus"))
    if u.is_thermal:
        if u.zone is None:
            problems.append(InvariantViolation(f"{u.kind} unit requires a zone", where + ".zone"))
        elif u.zone not in zone_ids:
            problems.append(UnresolvedReference(u.zone, where + ".zone"))
    elif u.zone is not None:
        problems.append(InvariantViolation(f"{u.kind} unit cannot have a zone", where + ".zone"))

    want_2d = u.kind == "chp-2dof"
    if want_2d and not isinstance(u.curve, Curve2D):
        problems.append(InvariantViolation("chp-2dof requires a Curve2D", where + ".curve"))
    elif not want_2d and not isinstance(u.curve, Curve1D):
        problems.append(InvariantViolation(f"{u.kind} requires a Curve1D", where + ".curve"))
    else:
        try:
            u.curve.check()
        except ValueError as exc:
            problems.append(InvariantViolation(str(exc), where + ".curve"))
        else:
            problems.extend(_check_curve_outputs(u, where))

    if u.e_min > u.e_max:
        problems.append(InvariantViolation("e_min must be <= e_max", where + ".e_min"))
    if u.h_min > u.h_max:
        problems.append(InvariantViolation("h_min must be <= h_max", where + ".h_min"))
    for attr in ("ramp_up", "ramp_down"):
        v = getattr(u, attr)
        if v is not None and v < 0:
            problems.append(InvariantViolation(f"{attr} must be >= 0", f"{where}.{attr}"))
    if u.max_startups is not None and u.max_startups < 0:
        problems.append(InvariantViolation("max_startups must be >= 0", where + ".max_startups"))
    if u.min_uptime < 0:
        problems.append(InvariantViolation("min_uptime must be >= 0", where + ".min_uptime"))
    for f in dataclasses.fields(CostSpec):
        if getattr(u.costs, f.name) < 0:
            problems.append(InvariantViolation(f"{f.name} must be >= 0", f"{where}.costs.{f.name}"))
    return problems


def _check_curve_outputs(u: UnitSpec, where: str) -> list:
    problems = []
    c = u.curve
    power = c.power_points if isinstance(c, Curve1D) else c.power_grid
    heat = c.heat_points if isinstance(c, Curve1D) else c.heat_grid
    if u.is_electric and power is None:
        problems.append(InvariantViolation(f"{u.kind} curve needs power points", where + ".curve"))
    if u.is_thermal and heat is None:
        problems.append(InvariantViolation(f"{u.kind} curve needs heat points", where + ".curve"))
    if u.kind == "p2h":
        if power is not None and np.any(np.asarray(power) > 0):
            problems.append(InvariantViolation("p2h requires P̂ ≤ 0", where + ".curve.power_points"))
        if heat is not None and np.any(np.asarray(heat) < 0):
            problems.append(InvariantViolation("p2h requires Ĥ ≥ 0", where + ".curve.heat_points"))
    return problems


def validate_instance(raw: Union[Instance, ValidatedInstance]) -> ValidatedInstance:
    """Check every invariant of ``raw`` and resolve identifiers to dense indices.

    Raises the first problem found; use :func:`check_instance` to list all of them.
    Validating an already validated instance returns an equal object.
    """
    inst = raw.instance if isinstance(raw, ValidatedInstance) else raw
    problems = check_instance(inst)
    if problems:
        raise problems[0]
    units = tuple(sorted(inst.units, key=lambda u: u.id))
    inst = inst.replace(units=units)
    slack_id = inst.slack_bus if inst.slack_bus is not None else inst.buses[0].id
    bus_index = {b.id: k for k, b in enumerate(inst.buses)}
    return ValidatedInstance(
        instance=inst,
        bus_index=bus_index,
        zone_index={z.id: k for k, z in enumerate(inst.zones)},
        unit_index={u.id: k for k, u in enumerate(units)},
        slack=bus_index[slack_id],
    )


def scale_wind(instance: Union[Instance, ValidatedInstance], penetration: float):
    """Scale every wind series by one factor so wind energy = penetration x demand energy.

    Returns the same type that was passed in.
    """
    if not 0 <= penetration <= 1:
        raise ValueError(f"penetration must lie in [0, 1], got {penetration}")
    validated = isinstance(instance, ValidatedInstance)
    inst = instance.instance if validated else instance
    wind = sum(sum(b.wind_available) for b in inst.buses)
    demand = sum(sum(b.electric_demand) for b in inst.buses)
    if wind == 0:
        if penetration > 0:
            raise ZeroWindProfile("cannot scale an all-zero wind profile", "buses")
        factor = 0.0
    else:
        factor = penetration * demand / wind
    buses = tuple(
        dataclasses.replace(b, wind_available=tuple(factor * w for w in b.wind_available))
        for b in inst.buses
    )
    scaled = inst.replace(buses=buses)
    return dataclasses.replace(instance, instance=scaled) if validated else scaled


# --- JSON I/O -------------------------------------------------------------

def _curve_from_dict(d: dict) -> Union[Curve1D, Curve2D]:
    if "o_points" in d:
        return Curve2D(
            o_points=d["o_points"],
            fuel_grid=d["fuel_grid"],
            power_grid=d.get("power_grid"),
            heat_grid=d.get("heat_grid"),
        )
    return Curve1D(
        fuel_points=d["fuel_points"],
        power_points=d.get("power_points"),
        heat_points=d.get("heat_points"),
    )


def instance_from_dict(data: dict) -> Instance:
    """Build an (unvalidated) Instance from parsed JSON."""
    buses = tuple(
        Bus(id=str(b["id"]),
            electric_demand=_series(b.get("electric_demand", [])),
            wind_available=_series(b.get("wind_available", [0.0] * data["horizon"])))
        for b in data["buses"]
    )
    lines = tuple(
        Line(from_bus=str(ln["from_bus"]), to_bus=str(ln["to_bus"]),
             susceptance=float(ln["susceptance"]), rating=float(ln["rating"]))
        for ln in data.get("lines", [])
    )
    zones = []
    for z in data.get("zones", []):
        st = z.get("storage")
        zones.append(ThermalZone(
            id=str(z["id"]),
            heat_demand=_series(z["heat_demand"]),
            transfer_efficiency=float(z.get("transfer_efficiency", 1.0)),
            storage=StorageSpec(**{k: float(v) for k, v in st.items()}) if st else None,
        ))
    units = []
    for u in data.get("units", []):
        kw = dict(u)
        kw["curve"] = _curve_from_dict(u["curve"])
        kw["costs"] = CostSpec(**u.get("costs", {}))
        units.append(UnitSpec(**kw))
    return Instance(
        horizon=int(data["horizon"]),
        buses=buses,
        lines=lines,
        zones=tuple(zones),
        units=tuple(units),
        name=str(data.get("name", "")),
        slack_bus=data.get("slack_bus"),
    )


def instance_to_dict(instance: Union[Instance, ValidatedInstance]) -> dict:
    inst = instance.instance if isinstance(instance, ValidatedInstance) else instance
    out: dict[str, Any] = {"name": inst.name, "horizon": inst.horizon}
    if inst.slack_bus is not None:
        out["slack_bus"] = inst.slack_bus
    out["buses"] = [
        {"id": b.id, "electric_demand": list(b.electric_demand),
         "wind_available": list(b.wind_available)} for b in inst.buses]
    out["lines"] = [dataclasses.asdict(ln) for ln in inst.lines]
    out["zones"] = []
    for z in inst.zones:
        zd = {"id": z.id, "heat_demand": list(z.heat_demand),
              "transfer_efficiency": z.transfer_efficiency}
        if z.storage is not None:
            zd["storage"] = dataclasses.asdict(z.storage)
        out["zones"].append(zd)
    out["units"] = []
    for u in inst.units:
        ud = {f.name: getattr(u, f.name) for f in dataclasses.fields(UnitSpec)}
        ud["curve"] = u.curve.to_dict()
        ud["costs"] = dataclasses.asdict(u.costs)
        out["units"].append(ud)
    return out


def load_instance(path: Union[str, Path]) -> Instance:
    """Read an instance JSON file. Raises OSError / ValueError on unreadable input."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return instance_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InvariantViolation(f"malformed instance file: {exc!r}", str(path)) from exc


def save_instance(instance, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")


def bundled_instance_path(name: str = "mini24") -> Path:
    return Path(__file__).parent / "data" / f"{name}.json"


def bundled_instance(name: str = "mini24") -> Instance:
    """Load one of the instances shipped with the package."""
    return load_instance(bundled_instance_path(name))
