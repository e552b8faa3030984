"""Generate src/chpuc/data/mini24.json, the bundled 6-bus desk-scale test system.

Wind sits at a remote bus (B3) exporting through two rated lines. CHP1 and
the electric boiler EB2 share the wind bus, so their output competes with
wind for the export corridor; CHP2 and EB1 sit next door at B4. Each CHP's
heat capacity is 45 % of its zone's peak heat load, and each zone's gas
boiler alone can cover the full zone load.
"""
import json
from pathlib import Path

T = 24
LOAD_SHAPE = [0.62, 0.58, 0.56, 0.55, 0.56, 0.60, 0.70, 0.82, 0.90, 0.94, 0.96, 0.97,
              0.96, 0.95, 0.94, 0.95, 0.97, 1.00, 0.99, 0.95, 0.90, 0.82, 0.74, 0.67]
WIND_SHAPE = [0.80, 0.86, 0.90, 0.92, 0.90, 0.84, 0.74, 0.62, 0.52, 0.46, 0.42, 0.40,
              0.42, 0.46, 0.52, 0.58, 0.62, 0.66, 0.70, 0.74, 0.78, 0.80, 0.82, 0.82]
HEAT_SHAPE = [0.40, 0.37, 0.36, 0.37, 0.42, 0.58, 0.85, 1.00, 0.92, 0.80, 0.70, 0.64,
              0.60, 0.58, 0.60, 0.66, 0.78, 0.90, 0.96, 0.92, 0.80, 0.66, 0.52, 0.44]

PEAK_LOAD = 380.0
LOAD_SHARE = {"B1": 0.35, "B2": 0.25, "B3": 0.0, "B4": 0.15, "B5": 0.15, "B6": 0.10}
CHP_SHARE = {"Z1": 0.45, "Z2": 0.45}
PENETRATION = 0.45

CHP2_HEAT_MAX = 92.0
CHP1_HEAT_MAX = 75.0


def r(x, nd=4):
    return round(x, nd)


def main():
    load_total = [PEAK_LOAD * s for s in LOAD_SHAPE]
    wind_scale = PENETRATION * sum(load_total) / sum(WIND_SHAPE)
    buses = []
    for bid, share in LOAD_SHARE.items():
        wind = [r(wind_scale * w) for w in WIND_SHAPE] if bid == "B3" else [0.0] * T
        buses.append({"id": bid, "electric_demand": [r(share * v) for v in load_total],
                      "wind_available": wind})

    lines = [
        {"from_bus": "B1", "to_bus": "B2", "susceptance": 10.0, "rating": 200.0},
        {"from_bus": "B1", "to_bus": "B6", "susceptance": 8.0, "rating": 120.0},
        {"from_bus": "B2", "to_bus": "B4", "susceptance": 6.0, "rating": 140.0},
        {"from_bus": "B4", "to_bus": "B3", "susceptance": 5.0, "rating": 75.0},
        {"from_bus": "B3", "to_bus": "B5", "susceptance": 5.0, "rating": 75.0},
        {"from_bus": "B5", "to_bus": "B6", "susceptance": 6.0, "rating": 200.0},
        {"from_bus": "B4", "to_bus": "B5", "susceptance": 4.0, "rating": 200.0},
    ]

    z1_peak = CHP2_HEAT_MAX / CHP_SHARE["Z1"]
    z2_peak = CHP1_HEAT_MAX / CHP_SHARE["Z2"]
    zones = [
        {"id": "Z1", "heat_demand": [r(z1_peak * s) for s in HEAT_SHAPE],
         "transfer_efficiency": 0.97},
        {"id": "Z2", "heat_demand": [r(z2_peak * s) for s in HEAT_SHAPE],
         "transfer_efficiency": 0.96,
         "storage": {"capacity": 300.0, "hourly_loss": 0.01, "initial_level": 0.0}},
    ]

    gas, coal, backup = 25.0, 12.0, 60.0
    units = [
        {"id": "G1", "kind": "electric-only", "bus": "B6",
         "curve": {"fuel_points": [160, 280, 400], "power_points": [60, 110, 150]},
         "costs": {"fuel_price": coal, "startup_cost": 3000, "om_time": 200, "om_startup": 100,
                   "om_fuel": 1.0},
         "e_min": 60, "e_max": 150, "ramp_up": 60, "ramp_down": 60,
         "max_startups": 2, "min_uptime": 6, "initially_on": True},
        {"id": "G2", "kind": "electric-only", "bus": "B1",
         "curve": {"fuel_points": [80, 200, 290], "power_points": [40, 110, 160]},
         "costs": {"fuel_price": gas, "startup_cost": 2000, "om_time": 100, "om_startup": 50,
                   "om_fuel": 0.5},
         "e_min": 40, "e_max": 160, "ramp_up": 80, "ramp_down": 80,
         "max_startups": 2, "min_uptime": 3, "initially_on": True},
        {"id": "G3", "kind": "electric-only", "bus": "B2",
         "curve": {"fuel_points": [30, 230], "power_points": [10, 80]},
         "costs": {"fuel_price": gas, "startup_cost": 300, "om_time": 50, "om_fuel": 0.5},
         "e_min": 10, "e_max": 80, "ramp_up": 80, "ramp_down": 80,
         "max_startups": 3, "min_uptime": 1, "initially_on": False},
        {"id": "CHP2", "kind": "chp-2dof", "bus": "B4", "zone": "Z1",
         "curve": {"o_points": [0.0, 1.0],
                   "fuel_grid": [[100, 100], [160, 160], [220, 220]],
                   "power_grid": [[45, 33], [80, 58], [115, 84]],
                   "heat_grid": [[0, 40], [0, 66], [0, CHP2_HEAT_MAX]]},
         "costs": {"fuel_price": gas, "startup_cost": 1500, "om_time": 80, "om_startup": 50,
                   "om_fuel": 0.5},
         "e_min": 33, "e_max": 115, "h_min": 0, "h_max": CHP2_HEAT_MAX,
         "ramp_up": 60, "ramp_down": 60, "max_startups": 2, "min_uptime": 4,
         "initially_on": True},
        {"id": "CHP1", "kind": "chp-1dof", "bus": "B3", "zone": "Z2",
         "curve": {"fuel_points": [60, 120, 180], "power_points": [15, 38, 60],
                   "heat_points": [28, 52, CHP1_HEAT_MAX]},
         "costs": {"fuel_price": gas, "startup_cost": 800, "om_time": 40, "om_startup": 20,
                   "om_fuel": 0.5},
         "e_min": 15, "e_max": 60, "h_min": 28, "h_max": CHP1_HEAT_MAX,
         "ramp_up": 45, "ramp_down": 45, "max_startups": 2, "min_uptime": 3,
         "initially_on": False},
        {"id": "GB1", "kind": "heat-only", "zone": "Z1",
         "curve": {"fuel_points": [25, 240], "heat_points": [22.5, 216]},
         "costs": {"fuel_price": backup, "startup_cost": 100, "om_time": 10, "om_fuel": 0.5},
         "h_min": 22.5, "h_max": 216, "max_startups": 3, "min_uptime": 2},
        {"id": "GB2", "kind": "heat-only", "zone": "Z2",
         "curve": {"fuel_points": [20, 200], "heat_points": [18, 180]},
         "costs": {"fuel_price": backup, "startup_cost": 100, "om_time": 10, "om_fuel": 0.5},
         "h_min": 18, "h_max": 180, "max_startups": 3, "min_uptime": 2},
        {"id": "EB1", "kind": "p2h", "bus": "B4", "zone": "Z1",
         "curve": {"fuel_points": [0, 20], "power_points": [0, -20], "heat_points": [0, 19.8]},
         "costs": {"startup_cost": 5, "om_time": 1},
         "e_min": -20, "e_max": 0, "h_min": 0, "h_max": 19.8},
        {"id": "EB2", "kind": "p2h", "bus": "B3", "zone": "Z2",
         "curve": {"fuel_points": [0, 20], "power_points": [0, -20], "heat_points": [0, 19.8]},
         "costs": {"startup_cost": 5, "om_time": 1},
         "e_min": -20, "e_max": 0, "h_min": 0, "h_max": 19.8},
    ]
    data = {"name": "mini24", "horizon": T, "buses": buses, "lines": lines, "zones": zones,
            "units": units}
    out = Path(__file__).resolve().parents[1] / "src" / "chpuc" / "data" / "mini24.json"
    out.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
