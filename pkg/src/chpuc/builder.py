"""Network-constrained unit-commitment MILP for coupled electric and heat systems.

Variable labels are ``symbol/owner/.../hour`` with 1-based hours, e.g.
``theta/G1/3``, ``flow/B1/B2/7``, ``storage/Z1/25``. Columns are created
unit-major, hour-minor, then buses, lines and zones, so identical inputs give
byte-identical models.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from chpuc.instance import UnitSpec, ValidatedInstance
from chpuc.linearize import Curve1D, Curve2D, encode_curve_1d, encode_curve_2d
from chpuc.lpmodel import INF, MilpModel, ModelBuilder


class NoThermalZones(ValueError):
    pass


class InfeasibleFixing(ValueError):
    pass


@dataclass(frozen=True)
class BuildOptions:
    transmission_constrained: bool = True
    coupled: bool = True
    storage_enabled: bool = True
    p2h_enabled: bool = True


def _options(opts) -> BuildOptions:
    if opts is None:
        return BuildOptions()
    if isinstance(opts, BuildOptions):
        return opts
    if isinstance(opts, Mapping):
        return BuildOptions(**opts)
    return BuildOptions(**{k: getattr(opts, k) for k in BuildOptions.__dataclass_fields__})


def unit_cost_coefficients(u: UnitSpec):
    """Per-unit objective weights on (fuel, start-up, committed hour)."""
    c = u.costs
    return c.fuel_price + c.om_fuel, c.startup_cost + c.om_startup, c.om_time


def _curve_range(u: UnitSpec, key: str):
    c = u.curve
    if isinstance(c, Curve1D):
        vals = {"f": c.fuel_points, "p": c.power_points, "h": c.heat_points}[key]
    else:
        vals = {"f": c.fuel_grid, "p": c.power_grid, "h": c.heat_grid}[key]
    arr = np.asarray(vals, dtype=float)
    return min(0.0, float(arr.min())), max(0.0, float(arr.max()))


class _UcAssembler:
    def __init__(self, inst: ValidatedInstance, name: str):
        self.inst = inst
        self.T = inst.horizon
        self.b = ModelBuilder(name)

    # ---- units ------------------------------------------------------------
    def add_unit(self, u: UnitSpec, *, electric: bool, thermal: bool, ramps: bool,
                 fixed_theta=None, fixed_heat=None):
        b, T = self.b, self.T
        c_fuel, c_start, c_on = unit_cost_coefficients(u)
        theta, tau = [], []
        for t in range(1, T + 1):
            th = b.add_var(f"theta/{u.id}/{t}", binary=True, cost=c_on)
            ta = b.add_var(f"tau/{u.id}/{t}", binary=True, cost=c_start)
            if fixed_theta is not None:
                v = float(fixed_theta[t - 1])
                b.set_bounds(th, v, v)
            theta.append(th)
            tau.append(ta)
            f = b.add_var(f"f/{u.id}/{t}", 0.0, _curve_range(u, "f")[1], cost=c_fuel)
            outputs = {"f": f}
            has_p = u.is_electric
            has_h = u.is_thermal
            if isinstance(u.curve, Curve2D):
                o_hi = max(u.curve.o_points)
                outputs["o"] = b.add_var(f"o/{u.id}/{t}", min(0.0, min(u.curve.o_points)), o_hi)
            if has_p:
                lo, hi = _curve_range(u, "p")
                outputs["p"] = b.add_var(f"p/{u.id}/{t}", lo, hi)
            if has_h:
                lo, hi = _curve_range(u, "h")
                outputs["h"] = b.add_var(f"h/{u.id}/{t}", lo, hi)
                if fixed_heat is not None:
                    v = float(fixed_heat[t - 1])
                    b.set_bounds(outputs["h"], v, v)
            if isinstance(u.curve, Curve2D):
                encode_curve_2d(b, u.curve, th, t, u.id, outputs)
            else:
                encode_curve_1d(b, u.curve, th, t, u.id, outputs)
            if has_p and electric:
                p = outputs["p"]
                b.add_row(f"gen_emin/{u.id}/{t}", [(p, 1.0), (th, -u.e_min)], ">=", 0.0)
                b.add_row(f"gen_emax/{u.id}/{t}", [(p, 1.0), (th, -u.e_max)], "<=", 0.0)
            if has_h and thermal:
                h = outputs["h"]
                b.add_row(f"gen_hmin/{u.id}/{t}", [(h, 1.0), (th, -u.h_min)], ">=", 0.0)
                b.add_row(f"gen_hmax/{u.id}/{t}", [(h, 1.0), (th, -u.h_max)], "<=", 0.0)
        self._commitment_rows(u, theta, tau)
        if ramps and u.is_electric:
            self._ramp_rows(u)

    def _commitment_rows(self, u: UnitSpec, theta, tau):
        b, T = self.b, self.T
        th0 = 1.0 if u.initially_on else 0.0
        for t in range(1, T + 1):
            th, ta = theta[t - 1], tau[t - 1]
            b.add_row(f"su_on/{u.id}/{t}", [(ta, 1.0), (th, -1.0)], "<=", 0.0)
            if t == 1:
                b.add_row(f"su_prev/{u.id}/{t}", [(ta, 1.0)], "<=", 1.0 - th0)
                b.add_row(f"su_def/{u.id}/{t}", [(ta, 1.0), (th, -1.0)], ">=", -th0)
            else:
                prev = theta[t - 2]
                b.add_row(f"su_prev/{u.id}/{t}", [(ta, 1.0), (prev, 1.0)], "<=", 1.0)
                b.add_row(f"su_def/{u.id}/{t}", [(ta, 1.0), (th, -1.0), (prev, 1.0)], ">=", 0.0)
        if u.max_startups is not None:
            b.add_row(f"su_budget/{u.id}", [(ta, 1.0) for ta in tau], "<=", float(u.max_startups))
        MT = int(u.min_uptime)
        if MT >= 1:
            if T <= MT:
                b.log.append(f"horizon {T} h does not exceed min_uptime {MT} h of {u.id}; "
                             f"min-uptime sums truncated at hour 1")
            for t in range(2, T + 1):
                window = [tau[t - k - 1] for k in range(1, MT + 1) if t - k >= 1]
                b.add_row(f"min_up/{u.id}/{t}",
                          [(theta[t - 1], 1.0)] + [(ta, -1.0) for ta in window], ">=", 0.0)

    def _ramp_rows(self, u: UnitSpec):
        b, T = self.b, self.T
        p0 = u.initial_output
        for t in range(1, T + 1):
            p = b.var(f"p/{u.id}/{t}")
            terms = [(p, 1.0)]
            const = p0
            if t > 1:
                terms.append((b.var(f"p/{u.id}/{t - 1}"), -1.0))
                const = 0.0
            if u.ramp_up is not None:
                b.add_row(f"ramp_up/{u.id}/{t}", terms, "<=", u.ramp_up + const)
            if u.ramp_down is not None:
                b.add_row(f"ramp_dn/{u.id}/{t}", terms, ">=", -u.ramp_down + const)

    # ---- network -----------------------------------------------------------
    def add_network(self, units, constrained: bool):
        b, T, inst = self.b, self.T, self.inst
        for n, bus in enumerate(inst.buses):
            for t in range(1, T + 1):
                b.add_var(f"spill/{bus.id}/{t}", 0.0, bus.wind_available[t - 1])
                lo, hi = (0.0, 0.0) if n == inst.slack else (-INF, INF)
                b.add_var(f"delta/{bus.id}/{t}", lo, hi)
        for ln in inst.lines:
            for t in range(1, T + 1):
                cap = ln.rating if constrained else INF
                flow = b.add_var(f"flow/{ln.from_bus}/{ln.to_bus}/{t}", -cap, cap)
                # the DC flow law is kept without ratings so unconstrained flows stay physical
                b.add_row(f"flowdef/{ln.from_bus}/{ln.to_bus}/{t}",
                          [(flow, 1.0),
                           (b.var(f"delta/{ln.from_bus}/{t}"), -ln.susceptance),
                           (b.var(f"delta/{ln.to_bus}/{t}"), ln.susceptance)], "=", 0.0)
        for bus in inst.buses:
            for t in range(1, T + 1):
                terms = [(b.var(f"p/{u.id}/{t}"), 1.0) for u in units if u.bus == bus.id]
                terms.append((b.var(f"spill/{bus.id}/{t}"), -1.0))
                for ln in inst.lines:
                    fl = b.var(f"flow/{ln.from_bus}/{ln.to_bus}/{t}") if (
                        bus.id in (ln.from_bus, ln.to_bus)) else None
                    if ln.from_bus == bus.id:
                        terms.append((fl, -1.0))
                    elif ln.to_bus == bus.id:
                        terms.append((fl, 1.0))
                rhs = bus.electric_demand[t - 1] - bus.wind_available[t - 1]
                b.add_row(f"bal/{bus.id}/{t}", terms, "=", rhs)

    # ---- heat zones --------------------------------------------------------
    def add_zones(self, units, storage_enabled: bool):
        b, T = self.b, self.T
        for z in self.inst.zones:
            st = z.storage if storage_enabled else None
            if st is not None:
                # level at the start of each hour; day starts at the initial level
                # and must end replenished to it
                b.add_var(f"storage/{z.id}/1", st.initial_level, st.initial_level)
                for t in range(2, T + 1):
                    b.add_var(f"storage/{z.id}/{t}", 0.0, st.capacity)
                b.add_var(f"storage/{z.id}/{T + 1}", st.initial_level, st.capacity)
            eta = z.transfer_efficiency
            for t in range(1, T + 1):
                terms = [(b.var(f"h/{u.id}/{t}"), eta) for u in units if u.zone == z.id]
                if st is not None:
                    s_now = b.var(f"storage/{z.id}/{t}")
                    s_next = b.var(f"storage/{z.id}/{t + 1}")
                    terms += [(s_now, eta - st.hourly_loss), (s_next, -eta)]
                b.add_row(f"heat/{z.id}/{t}", terms, "=", z.heat_demand[t - 1])


def _unit_set(inst: ValidatedInstance, opts: BuildOptions):
    return [u for u in inst.units if opts.p2h_enabled or u.kind != "p2h"]


def build_uc_model(inst: ValidatedInstance, opts=None) -> MilpModel:
    """Full coupled model: costs, commitment, curves, limits, ramps, DC network and heat zones."""
    opts = _options(opts)
    asm = _UcAssembler(inst, _model_name("uc", opts))
    units = _unit_set(inst, opts)
    for u in units:
        asm.add_unit(u, electric=True, thermal=True, ramps=True)
    asm.add_network(units, opts.transmission_constrained)
    asm.add_zones(units, opts.storage_enabled)
    if not opts.coupled:
        asm.b.log.append("coupled=False requested; decoupled dispatch uses the two-stage builders")
    return asm.b.build()


def thermal_stage_units(inst: ValidatedInstance):
    """Heat producers dispatched in the decoupled heat stage (power-to-heat excluded)."""
    return [u for u in inst.units if u.is_thermal and u.kind != "p2h"]


def build_thermal_only_model(inst: ValidatedInstance, opts=None) -> MilpModel:
    """Heat-zone model over heat producers; CHP power is an unpriced by-product within its limits."""
    opts = _options(opts)
    if not inst.zones:
        raise NoThermalZones("instance has no thermal zones")
    asm = _UcAssembler(inst, _model_name("thermal", opts))
    units = thermal_stage_units(inst)
    for u in units:
        # CHP power limits and ramps stay so the pinned heat is electrically reachable
        asm.add_unit(u, electric=u.is_chp, thermal=True, ramps=u.is_chp)
    asm.add_zones(units, opts.storage_enabled)
    if opts.p2h_enabled and any(u.kind == "p2h" for u in inst.units):
        asm.b.log.append("power-to-heat units are not dispatched in the decoupled heat stage")
    return asm.b.build()


def electric_stage_units(inst: ValidatedInstance):
    return [u for u in inst.units if u.is_electric and u.kind != "p2h"]


def build_electric_stage_model(inst: ValidatedInstance, fixed_heat: Mapping, opts=None,
                               fixed_commitment: Optional[Mapping] = None,
                               tol: float = 1e-7) -> MilpModel:
    """Electric model with every CHP's heat output pinned to ``fixed_heat[unit_id]``.

    ``fixed_commitment`` optionally pins CHP on/off status as well (inherited
    from the heat stage).
    """
    opts = _options(opts)
    asm = _UcAssembler(inst, _model_name("electric", opts))
    units = electric_stage_units(inst)
    for u in units:
        if u.is_chp:
            heat = np.asarray(fixed_heat[u.id], dtype=float)
            on = None if fixed_commitment is None else np.asarray(fixed_commitment[u.id])
            _check_fixing(u, heat, on, tol)
            asm.add_unit(u, electric=True, thermal=True, ramps=True, fixed_theta=on,
                         fixed_heat=heat)
        else:
            asm.add_unit(u, electric=True, thermal=False, ramps=True)
    asm.add_network(units, opts.transmission_constrained)
    return asm.b.build()


def _check_fixing(u: UnitSpec, heat, on, tol):
    lo, hi = _curve_range(u, "h")
    heat_samples = np.asarray(
        u.curve.heat_points if isinstance(u.curve, Curve1D) else u.curve.heat_grid, dtype=float)
    smin, smax = float(heat_samples.min()), float(heat_samples.max())
    for t, v in enumerate(heat, start=1):
        if v > u.h_max + tol or v > smax + tol:
            raise InfeasibleFixing(f"fixed heat {v:.6g} of {u.id} at hour {t} exceeds h_max")
        if v < -tol:
            raise InfeasibleFixing(f"fixed heat {v:.6g} of {u.id} at hour {t} is negative")
        if on is not None:
            if on[t - 1] < 0.5 and abs(v) > tol:
                raise InfeasibleFixing(f"{u.id} is off at hour {t} but has fixed heat {v:.6g}")
            if on[t - 1] >= 0.5 and (v < smin - tol or v < u.h_min - tol):
                raise InfeasibleFixing(
                    f"fixed heat {v:.6g} of {u.id} at hour {t} is below its sampled range")


def _model_name(kind: str, opts: BuildOptions) -> str:
    flags = [k for k in ("transmission_constrained", "storage_enabled", "p2h_enabled")
             if getattr(opts, k)]
    return f"{kind}[{','.join(flags) or 'plain'}]"
