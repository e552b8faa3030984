"""Case protocol: decoupled vs coupled dispatch, wind penetration, renewable integration."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from chpuc.builder import (BuildOptions, InfeasibleFixing, NoThermalZones, build_electric_stage_model,
                           build_thermal_only_model, build_uc_model)
from chpuc.instance import ValidatedInstance, scale_wind, validate_instance
from chpuc.lpmodel import MilpModel
from chpuc.schedule import Schedule, extract_schedule
from chpuc.solver import solve_milp

log = logging.getLogger(__name__)


class ZeroBaselineIntegration(ZeroDivisionError):
    pass


class StageInfeasible(RuntimeError):
    def __init__(self, stage: str, status: str, model: Optional[MilpModel] = None):
        super().__init__(f"{stage} stage {status}")
        self.stage = stage
        self.status = status
        self.model = model


@dataclass(frozen=True)
class CaseConfig:
    label: str
    transmission_constrained: bool = True
    coupled: bool = True
    storage_enabled: bool = False
    p2h_enabled: bool = False
    wind_penetration: Optional[float] = 0.45

    @property
    def build_options(self) -> BuildOptions:
        return BuildOptions(self.transmission_constrained, self.coupled,
                            self.storage_enabled, self.p2h_enabled)

    @property
    def is_baseline(self) -> bool:
        """Unconstrained decoupled dispatch, the reference for renewable integration."""
        return not self.transmission_constrained and not self.coupled

    @classmethod
    def from_dict(cls, d: dict) -> "CaseConfig":
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown case fields: {sorted(unknown)}")
        return cls(**d)


def standard_cases() -> list:
    """The seven cases: decoupled (0, 1), coupled (2), + storage (3), + P2H (4), more wind (5, 6)."""
    return [
        CaseConfig("Case 0", transmission_constrained=False, coupled=False),
        CaseConfig("Case 1", coupled=False),
        CaseConfig("Case 2"),
        CaseConfig("Case 3", storage_enabled=True),
        CaseConfig("Case 4", storage_enabled=True, p2h_enabled=True),
        CaseConfig("Case 5", storage_enabled=True, p2h_enabled=True, wind_penetration=0.65),
        CaseConfig("Case 6", storage_enabled=True, p2h_enabled=True, wind_penetration=0.85),
    ]


def baseline_config(penetration: Optional[float]) -> CaseConfig:
    pct = "as-is" if penetration is None else f"{100 * penetration:g}%"
    return CaseConfig(f"baseline {pct}", transmission_constrained=False, coupled=False,
                      wind_penetration=penetration)


@dataclass(frozen=True)
class SolverSettings:
    gap_tol: float = 1e-6
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    engine: str = "auto"


@dataclass
class CaseResult:
    config: CaseConfig
    status: str
    total_cost: float = float("nan")
    fuel_cost: float = float("nan")
    startup_cost: float = float("nan")
    om_cost: float = float("nan")
    fuel_mwh: float = float("nan")
    wind_mwh: float = float("nan")
    spill_mwh: float = float("nan")
    ri: Optional[float] = None
    line_usage: dict = field(default_factory=dict)   # line label -> (max, mean) of |flow|/rating
    schedule: Optional[Schedule] = None
    binaries: int = 0
    variables: int = 0
    solve_s: float = 0.0
    gap: float = float("nan")
    message: str = ""
    models: list = field(default_factory=list, repr=False)
    instance: Optional[ValidatedInstance] = field(default=None, repr=False)  # after wind scaling

    @property
    def label(self) -> str:
        return self.config.label

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible")

    @property
    def integrated_wind(self) -> float:
        return self.wind_mwh - self.spill_mwh


def _prepare(inst, config: CaseConfig) -> ValidatedInstance:
    inst = validate_instance(inst)
    if config.wind_penetration is not None:
        inst = scale_wind(inst, config.wind_penetration)
    return inst


def _solve(model: MilpModel, settings: SolverSettings, stage: str):
    sol = solve_milp(model, gap_tol=settings.gap_tol, node_limit=settings.node_limit,
                     time_limit=settings.time_limit, engine=settings.engine)
    if not sol.has_incumbent:
        raise StageInfeasible(stage, sol.status, model)
    return sol


def line_usage(schedule: Schedule, inst: ValidatedInstance) -> dict:
    out = {}
    for ln in inst.lines:
        flow = schedule.flow.get(ln.label)
        if flow is None:
            continue
        use = np.abs(flow) / ln.rating
        out[ln.label] = (float(use.max()), float(use.mean()))
    return out


def _finish(config, inst, schedule, sols, models, t0) -> CaseResult:
    worst_gap = max(s.gap for s in sols)
    status = "optimal" if all(s.status == "optimal" for s in sols) else "feasible"
    return CaseResult(
        config=config,
        status=status,
        total_cost=schedule.total_cost,
        fuel_cost=schedule.fuel_cost,
        startup_cost=schedule.startup_cost,
        om_cost=schedule.om_cost,
        fuel_mwh=schedule.fuel_mwh,
        wind_mwh=inst.total_wind(),
        spill_mwh=schedule.spill_mwh,
        line_usage=line_usage(schedule, inst),
        schedule=schedule,
        binaries=sum(m.n_binary for m in models),
        variables=sum(m.n_vars for m in models),
        solve_s=time.perf_counter() - t0,
        gap=worst_gap,
        models=models,
        instance=inst,
    )


def run_coupled(inst, config: CaseConfig, settings: SolverSettings = SolverSettings()) -> CaseResult:
    """Single co-optimised solve of the full model."""
    if not config.coupled:
        raise ValueError(f"{config.label} is not a coupled case")
    t0 = time.perf_counter()
    inst = _prepare(inst, config)
    model = build_uc_model(inst, config.build_options)
    sol = _solve(model, settings, "coupled")
    schedule = extract_schedule(model, sol.x, inst)
    return _finish(config, inst, schedule, [sol], [model], t0)


def run_decoupled(inst, config: CaseConfig, settings: SolverSettings = SolverSettings()) -> CaseResult:
    """Heat-led dispatch: heat zones first, then electric UC with CHP heat and commitment pinned.

    CHP fuel is priced once, in the electric stage; the heat stage contributes
    the cost of heat-only units.
    """
    if config.coupled:
        raise ValueError(f"{config.label} is a coupled case")
    t0 = time.perf_counter()
    inst = _prepare(inst, config)
    opts = config.build_options
    sols, models = [], []
    fixed_heat, fixed_on = {}, {}
    thermal_sched = None
    try:
        thermal = build_thermal_only_model(inst, opts)
    except NoThermalZones:
        thermal = None
    if thermal is not None and thermal.n_vars:
        sol = _solve(thermal, settings, "thermal")
        sols.append(sol)
        models.append(thermal)
        thermal_sched = extract_schedule(thermal, sol.x, inst)
        for uid, us in thermal_sched.units.items():
            if inst.unit(uid).is_chp:
                fixed_heat[uid] = us.heat
                fixed_on[uid] = us.on
    electric = build_electric_stage_model(inst, fixed_heat, opts, fixed_commitment=fixed_on)
    sol = _solve(electric, settings, "electric")
    sols.append(sol)
    models.append(electric)
    schedule = extract_schedule(electric, sol.x, inst)
    if thermal_sched is not None:
        heat_only = Schedule(inst.horizon)
        heat_only.units = {uid: us for uid, us in thermal_sched.units.items()
                           if not inst.unit(uid).is_chp}
        heat_only.storage = thermal_sched.storage
        heat_only.storage_end = thermal_sched.storage_end
        schedule = heat_only.merged(schedule, inst)
    return _finish(config, inst, schedule, sols, models, t0)


def run_case(inst, config: CaseConfig, settings: SolverSettings = SolverSettings()) -> CaseResult:
    """Run one case; solver or fixing failures are recorded on the result, not raised."""
    runner = run_coupled if config.coupled else run_decoupled
    try:
        return runner(inst, config, settings)
    except StageInfeasible as exc:
        log.warning("%s: %s", config.label, exc)
        return CaseResult(config, exc.status, message=str(exc),
                          models=[exc.model] if exc.model is not None else [])
    except InfeasibleFixing as exc:
        log.warning("%s: %s", config.label, exc)
        return CaseResult(config, "infeasible", message=f"electric stage: {exc}")


def renewable_integration(integrated: float, baseline_integrated: float) -> float:
    """Relative change in integrated wind energy against the baseline."""
    if baseline_integrated <= 0:
        raise ZeroBaselineIntegration("baseline integrates no wind energy")
    return integrated / baseline_integrated - 1.0


def compute_ri(result: CaseResult, baseline: CaseResult, rtol: float = 1e-9) -> float:
    if not np.isclose(result.wind_mwh, baseline.wind_mwh, rtol=rtol, atol=1e-9):
        raise ValueError(f"{result.label} and {baseline.label} have different wind energy; "
                         "RI needs matching instance and penetration")
    return renewable_integration(result.integrated_wind, baseline.integrated_wind)


@dataclass
class SuiteResult:
    rows: list                        # CaseResult per requested config, in order
    baselines: dict                   # penetration -> baseline CaseResult
    reference: Optional[str] = "Case 1"

    def row(self, label: str) -> CaseResult:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def cost_variation(self, result: CaseResult) -> Optional[float]:
        """Percent cost change against the reference case; None for the reference itself."""
        if self.reference is None or result.label == self.reference:
            return None
        try:
            ref = self.row(self.reference)
        except KeyError:
            return None
        if not (ref.ok and result.ok):
            return None
        return 100.0 * (result.total_cost - ref.total_cost) / ref.total_cost


def _run_packed(args):
    inst, config, settings = args
    return run_case(inst, config, settings)


def run_suite(inst, configs: Sequence[CaseConfig], settings: SolverSettings = SolverSettings(),
              jobs: int = 1, reference: Optional[str] = "Case 1") -> SuiteResult:
    """Run every config plus one unconstrained-decoupled baseline per extra penetration.

    Results are merged by label, so ``jobs > 1`` gives the same table as a serial run.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("no cases to run")
    labels = [c.label for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError("case labels must be unique")
    if not configs[0].is_baseline:
        log.warning("first case %s is not an unconstrained decoupled baseline", labels[0])
    inst = validate_instance(inst)
    baseline_for = {}
    for c in configs:
        if c.is_baseline and c.wind_penetration not in baseline_for:
            baseline_for[c.wind_penetration] = c.label
    extra = [baseline_config(p) for p in dict.fromkeys(c.wind_penetration for c in configs)
             if p not in baseline_for]
    todo = configs + extra
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_packed, [(inst, c, settings) for c in todo]))
    else:
        results = [run_case(inst, c, settings) for c in todo]
    by_label = {r.label: r for r in results}
    baselines = {}
    for p in dict.fromkeys(c.wind_penetration for c in configs):
        label = baseline_for.get(p) or baseline_config(p).label
        baselines[p] = by_label[label]
    rows = [by_label[c.label] for c in configs]
    for r in rows:
        base = baselines[r.config.wind_penetration]
        if r.ok and base.ok:
            try:
                r.ri = compute_ri(r, base)
            except ZeroBaselineIntegration:
                r.ri = None
    return SuiteResult(rows, baselines, reference)
