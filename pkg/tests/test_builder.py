import numpy as np
import pytest

from chpuc.builder import (BuildOptions, InfeasibleFixing, NoThermalZones,
                           build_electric_stage_model, build_thermal_only_model, build_uc_model)
from chpuc.linearize import interpolate_2d
from chpuc.schedule import InfeasibleAssignment, extract_schedule
from chpuc.solver import solve_milp
from oracles import boiler, conservation_report, electric_unit, make_instance, single_bus

PLAIN = BuildOptions(transmission_constrained=False, storage_enabled=False, p2h_enabled=False)

CHP1 = {"id": "CHP1", "kind": "chp-1dof", "bus": "N1", "zone": "Z1",
        "curve": {"fuel_points": [60, 120, 180], "power_points": [15, 38, 60],
                  "heat_points": [28, 52, 75.0]},
        "costs": {"fuel_price": 25.0, "startup_cost": 800},
        "e_min": 15, "e_max": 60, "h_min": 28, "h_max": 75.0}
CHP2 = {"id": "CHP2", "kind": "chp-2dof", "bus": "N1", "zone": "Z1",
        "curve": {"o_points": [0.0, 1.0], "fuel_grid": [[100, 100], [160, 160], [220, 220]],
                  "power_grid": [[45, 33], [80, 58], [115, 84]],
                  "heat_grid": [[0, 40], [0, 66], [0, 92.0]]},
        "costs": {"fuel_price": 25.0}, "e_min": 33, "e_max": 115, "h_min": 0, "h_max": 92.0}


def _one_unit(T=2):
    return make_instance(single_bus(T=T, demand=[20.0] * T,
                                    units=[electric_unit("G1", "N1", [10, 30, 60], [5, 15, 25])]))


def _counts(model):
    return model.n_binary, model.n_vars - model.n_binary


def test_single_unit_variable_counts():
    m = build_uc_model(_one_unit(), PLAIN)
    assert _counts(m) == (8, 14)


def test_constrained_single_bus_is_identical():
    inst = _one_unit()
    a = build_uc_model(inst, PLAIN)
    b = build_uc_model(inst, BuildOptions(transmission_constrained=True, storage_enabled=False,
                                          p2h_enabled=False))
    assert a.fingerprint() == b.fingerprint()
    assert not any(n.startswith(("flow", "rating")) for n in b.row_names)


def test_model_is_byte_identical_across_builds(mini24):
    from chpuc.instance import validate_instance
    inst = validate_instance(mini24)
    assert build_uc_model(inst).fingerprint() == build_uc_model(validate_instance(mini24)).fingerprint()


def _boiler_instance(demand):
    return make_instance(single_bus(T=2, units=[electric_unit("G1", "N1", [10, 30], [5, 15]),
                                                boiler("H1", "Z1", [2, 20], [1.8, 18])],
                                    zones=[{"id": "Z1", "heat_demand": demand}]))


def test_thermal_model_counts():
    m = build_thermal_only_model(_boiler_instance([5.0, 6.0]), PLAIN)
    heat_rows = [n for n in m.row_names if n.startswith("heat/")]
    assert len(heat_rows) == 2
    assert m.n_binary == 6
    assert not any(n.startswith("storage/") for n in m.var_names)


def test_thermal_model_zero_demand_costs_nothing():
    inst = _boiler_instance([0.0, 0.0])
    m = build_thermal_only_model(inst, PLAIN)
    sol = solve_milp(m)
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    sched = extract_schedule(m, sol.x, inst)
    assert sched.units["H1"].on.sum() == 0


def test_thermal_model_needs_a_zone():
    with pytest.raises(NoThermalZones):
        build_thermal_only_model(_one_unit(), PLAIN)


def _chp_instance(unit, heat):
    return make_instance(single_bus(T=2, demand=[100.0, 100.0],
                                    units=[unit, electric_unit("G1", "N1", [10, 300], [5, 150])],
                                    zones=[{"id": "Z1", "heat_demand": heat}]))


def test_one_dof_chp_pinned_at_breakpoint_is_fully_determined():
    inst = _chp_instance(CHP1, [52.0, 52.0])
    m = build_electric_stage_model(inst, {"CHP1": [52.0, 52.0]}, PLAIN,
                                   fixed_commitment={"CHP1": [1, 1]})
    for sign in (1.0, -1.0):
        c = np.zeros(m.n_vars)
        c[m.col("p/CHP1/1")] = sign
        sol = solve_milp(m.with_objective(c))
        assert sol.x[m.col("p/CHP1/1")] == pytest.approx(38.0, abs=1e-8)
        assert sol.x[m.col("f/CHP1/1")] == pytest.approx(120.0, abs=1e-8)


def test_two_dof_chp_pinned_heat_leaves_a_continuum():
    # two distinct (f, o) points on the surface deliver the same 30 MWth
    pts = [(100.0, 0.75), (160.0, 30.0 / 66.0)]
    for f, o in pts:
        assert interpolate_2d_heat(f, o) == pytest.approx(30.0, abs=1e-12)
    inst = _chp_instance(CHP2, [30.0, 30.0])
    m = build_electric_stage_model(inst, {"CHP2": [30.0, 30.0]}, PLAIN,
                                   fixed_commitment={"CHP2": [1, 1]})
    for f, o in pts:
        fixed = m.fixed({"f/CHP2/1": f, "o/CHP2/1": o})
        assert solve_milp(fixed).status == "optimal"


def interpolate_2d_heat(f, o):
    from chpuc.linearize import Curve2D
    return interpolate_2d(Curve2D(**CHP2["curve"]), f, o)[1]


def test_fixed_heat_above_h_max_is_rejected():
    inst = _chp_instance(CHP1, [52.0, 52.0])
    with pytest.raises(InfeasibleFixing):
        build_electric_stage_model(inst, {"CHP1": [80.0, 52.0]}, PLAIN)


def test_zero_demand_schedule_is_all_off():
    inst = make_instance(single_bus(T=2, demand=[0.0, 0.0],
                                    units=[electric_unit("G1", "N1", [10, 30], [5, 15])]))
    m = build_uc_model(inst, PLAIN)
    sched = extract_schedule(m, np.zeros(m.n_vars), inst)
    assert sched.units["G1"].on.sum() == 0 and sched.total_cost == 0.0


def _two_bus(wind_a=0.0, wind_b=0.0, demand_b=20.0):
    return make_instance(single_bus(
        T=2, buses=[{"id": "A", "electric_demand": [0.0, 0.0], "wind_available": [wind_a] * 2},
                    {"id": "B", "electric_demand": [demand_b] * 2, "wind_available": [wind_b] * 2}],
        lines=[{"from_bus": "A", "to_bus": "B", "susceptance": 10.0, "rating": 30.0}],
        units=[electric_unit("G1", "A", [10, 100], [5, 50], price=10.0),
               electric_unit("G2", "B", [10, 100], [5, 50], price=30.0)]))


def test_flow_rating_breach_is_named():
    # 40 MW of wind at A, 5 at B, 35 MW of load at B: the line is loaded to its 30 MW rating
    inst = _two_bus(wind_a=40.0, wind_b=5.0, demand_b=35.0)
    m = build_uc_model(inst, BuildOptions(storage_enabled=False, p2h_enabled=False))
    sol = solve_milp(m)
    assert sol.x[m.col("flow/A/B/1")] == pytest.approx(30.0)
    x = sol.x.copy()
    # shift 0.5 MW of spillage from A to B: balances hold, the rating breaks by 0.5
    x[m.col("flow/A/B/1")] += 0.5
    x[m.col("spill/A/1")] -= 0.5
    x[m.col("spill/B/1")] += 0.5
    x[m.col("delta/A/1")] += 0.5 / 10.0
    with pytest.raises(InfeasibleAssignment) as err:
        extract_schedule(m, x, inst)
    assert err.value.label == "flow/A/B/1"
    assert err.value.amount == pytest.approx(0.5)


def test_schedule_costs_match_model_objective():
    inst = _two_bus()
    m = build_uc_model(inst, BuildOptions(storage_enabled=False, p2h_enabled=False))
    sol = solve_milp(m)
    sched = extract_schedule(m, sol.x, inst)
    assert sched.total_cost == pytest.approx(sol.objective, abs=1e-6)
    assert conservation_report(sched, inst, constrained=True).ok
    # cheap unit at A exports up to the rating
    assert np.abs(sched.flow["A/B"]).max() <= 30.0 + 1e-9


def test_fractional_binary_is_rejected():
    inst = _one_unit()
    m = build_uc_model(inst, PLAIN)
    sol = solve_milp(m)
    x = sol.x.copy()
    k = m.col("tau/G1/2")
    x[k] = 0.5
    with pytest.raises(InfeasibleAssignment):
        extract_schedule(m, x, inst)


def _uptime_instance(min_uptime, budget=None, initially_on=False):
    extra = {"min_uptime": min_uptime}
    if budget is not None:
        extra["max_startups"] = budget
    return make_instance(single_bus(T=4, demand=[20.0, 0.0, 0.0, 20.0], units=[
        electric_unit("G1", "N1", [10, 60], [0, 30], price=10.0, startup=5.0, om_time=100.0,
                      initially_on=initially_on, **extra),
        electric_unit("G2", "N1", [10, 600], [0, 300], price=50.0)]))


def test_min_uptime_keeps_unit_on_after_start():
    inst = _uptime_instance(3)
    m = build_uc_model(inst, PLAIN)
    sched = extract_schedule(m, solve_milp(m).x, inst)
    on = sched.units["G1"].on
    starts = np.flatnonzero(sched.units["G1"].startup > 0.5)
    for s in starts:
        assert on[s:min(s + 3, 4)].min() == 1.0
    assert conservation_report(sched, inst, constrained=False).ok


def test_startup_budget_is_respected():
    inst = _uptime_instance(1, budget=1)
    m = build_uc_model(inst, PLAIN)
    sched = extract_schedule(m, solve_milp(m).x, inst)
    assert sched.units["G1"].startup.sum() <= 1.0


def test_build_log_lists_families(mini24):
    from chpuc.instance import validate_instance
    text = build_uc_model(validate_instance(mini24)).log_text()
    assert "theta" in text and "heat" in text
