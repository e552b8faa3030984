"""CSV tables and SVG figures for a case suite."""
from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Optional

import numpy as np

from chpuc.plotting import PALETTE, line_usage_chart, stacked_dispatch_chart
from chpuc.scenario import CaseResult, SuiteResult

SUMMARY_COLUMNS = ("case", "penetration", "constrained", "coupled", "storage", "p2h", "cost_eur",
                   "cost_var_pct", "fuel_mwh", "spill_mwh", "ri_pct", "binaries", "variables",
                   "solve_s")
STATUS_COLUMNS = ("case", "status", "gap", "message")
DISPATCH_COLUMNS = ("unit", "hour", "on", "startup", "fuel_mwh", "power_mw", "heat_mw", "valve")
NETWORK_COLUMNS = ("kind", "id", "hour", "value")
REFERENCE_MARK = "-"


def slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_") or "case"


def _num(v: Optional[float], fmt: str = ".6f") -> str:
    if v is None or not np.isfinite(v):
        return ""
    return format(v + 0.0, fmt)  # + 0.0 turns -0.0 into 0.0


def _flag(b: bool) -> str:
    return "1" if b else "0"


def summary_rows(suite: SuiteResult, record_times: bool = False) -> list:
    rows = []
    for r in suite.rows:
        c = r.config
        if r.label == suite.reference:
            var = REFERENCE_MARK
        else:
            var = _num(suite.cost_variation(r), ".4f")
        rows.append({
            "case": r.label,
            "penetration": "" if c.wind_penetration is None else _num(c.wind_penetration, "g"),
            "constrained": _flag(c.transmission_constrained),
            "coupled": _flag(c.coupled),
            "storage": _flag(c.storage_enabled),
            "p2h": _flag(c.p2h_enabled),
            "cost_eur": _num(r.total_cost) if r.ok else "",
            "cost_var_pct": var,
            "fuel_mwh": _num(r.fuel_mwh) if r.ok else "",
            "spill_mwh": _num(r.spill_mwh) if r.ok else "",
            "ri_pct": _num(None if r.ri is None else 100.0 * r.ri, ".4f"),
            "binaries": str(r.binaries),
            "variables": str(r.variables),
            "solve_s": _num(r.solve_s, ".3f") if record_times else "",
        })
    return rows


def write_csv(path: Path, columns, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return path


def write_summary(suite: SuiteResult, path, record_times: bool = False) -> Path:
    return write_csv(Path(path), SUMMARY_COLUMNS, summary_rows(suite, record_times))


def write_status(suite: SuiteResult, path) -> Path:
    rows = [{"case": r.label, "status": r.status, "gap": _num(r.gap, ".3g"), "message": r.message}
            for r in suite.rows]
    return write_csv(Path(path), STATUS_COLUMNS, rows)


def dispatch_rows(result: CaseResult) -> list:
    sched = result.schedule
    if sched is None:
        return []
    rows = []
    for uid, us in sched.units.items():
        for t in range(sched.horizon):
            rows.append({
                "unit": uid, "hour": t + 1,
                "on": int(round(us.on[t])), "startup": int(round(us.startup[t])),
                "fuel_mwh": repr(float(us.fuel[t]) + 0.0),
                "power_mw": repr(float(us.power[t]) + 0.0),
                "heat_mw": repr(float(us.heat[t]) + 0.0),
                "valve": repr(float(us.valve[t]) + 0.0),
            })
    return rows


def network_rows(result: CaseResult) -> list:
    sched = result.schedule
    if sched is None:
        return []
    rows = []
    for kind, table in (("spill", sched.spill), ("angle", sched.angle), ("flow", sched.flow),
                        ("storage", sched.storage)):
        for key, series in table.items():
            rows += [{"kind": kind, "id": key, "hour": t + 1, "value": repr(float(v) + 0.0)}
                     for t, v in enumerate(series)]
    for key, v in sched.storage_end.items():
        rows.append({"kind": "storage", "id": key, "hour": sched.horizon + 1,
                     "value": repr(float(v) + 0.0)})
    return rows


def electric_layers(result: CaseResult):
    """(layers, demand) for the electric stacked chart, grouped by technology."""
    inst, sched = result.instance, result.schedule
    T = sched.horizon
    groups: dict = {}
    for uid, us in sched.units.items():
        u = inst.unit(uid)
        if u.is_electric:
            groups.setdefault(u.kind, np.zeros(T))
            groups[u.kind] += us.power
    wind = np.sum([b.wind_available for b in inst.buses], axis=0)
    spill = np.sum(list(sched.spill.values()), axis=0) if sched.spill else np.zeros(T)
    layers = [(kind, PALETTE[kind], groups[kind]) for kind in PALETTE if kind in groups]
    layers.append(("wind", PALETTE["wind"], wind - spill))
    demand = np.sum([b.electric_demand for b in inst.buses], axis=0)
    return layers, demand


def thermal_layers(result: CaseResult, zone_id: str):
    """(layers, demand) for one zone: delivered heat by technology plus storage discharge."""
    inst, sched = result.instance, result.schedule
    z = inst.zone(zone_id)
    T = sched.horizon
    eta = z.transfer_efficiency
    groups: dict = {}
    for uid, us in sched.units.items():
        u = inst.unit(uid)
        if u.zone == zone_id and u.is_thermal:
            groups.setdefault(u.kind, np.zeros(T))
            groups[u.kind] += eta * us.heat
    layers = [(kind, PALETTE[kind], groups[kind]) for kind in PALETTE if kind in groups]
    if zone_id in sched.storage and z.storage is not None:
        s = np.append(sched.storage[zone_id], sched.storage_end[zone_id])
        discharge = (eta - z.storage.hourly_loss) * s[:-1] - eta * s[1:]
        layers.append(("storage", PALETTE["storage"], discharge))
    return layers, np.asarray(z.heat_demand, dtype=float)


def emit_reports(suite: SuiteResult, destination, figures: bool = True,
                 record_times: bool = False) -> list:
    """Write the summary, per-case CSVs and, optionally, SVG figures. Returns the paths."""
    out = Path(destination)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_summary(suite, out / "summary.csv", record_times),
               write_status(suite, out / "status.csv")]
    for r in suite.rows:
        name = slug(r.label)
        written.append(write_csv(out / f"dispatch_{name}.csv", DISPATCH_COLUMNS, dispatch_rows(r)))
        written.append(write_csv(out / f"network_{name}.csv", NETWORK_COLUMNS, network_rows(r)))
        if not figures or r.schedule is None:
            continue
        hours = np.arange(1, r.schedule.horizon + 1)
        if r.line_usage:
            written.append(line_usage_chart(r.line_usage, f"{r.label}: line usage",
                                            out / f"lines_{name}.svg",
                                            constrained=r.config.transmission_constrained))
        layers, demand = electric_layers(r)
        written.append(stacked_dispatch_chart(hours, layers, demand, f"{r.label}: electricity",
                                              "MW", out / f"electric_{name}.svg"))
        for z in r.instance.zones:
            layers, demand = thermal_layers(r, z.id)
            written.append(stacked_dispatch_chart(hours, layers, demand,
                                                  f"{r.label}: heat zone {z.id}", "MW",
                                                  out / f"heat_{name}_{slug(z.id)}.svg"))
    return written


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
