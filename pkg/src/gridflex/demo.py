"""Bundled 30-bus demo system with 61 synthetic summer days.

Layout:

* West (buses 1-8): wind at buses 2 and 5, exported over two rated
  corridors; bus 8 hangs off a single 100 MW line (location set ``C``).
* North pocket (buses 9-14): local load and an expensive peaker, fed by two
  160 MW ties. Mining here (location set ``A``) congests the ties at peak.
* Central/East (buses 15-30): the bulk of generation and load on a strong,
  unconstrained network (location set ``B``).

Everything is generated from fixed constants and a seeded RNG, so the case
is identical on every call.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .case import Branch, Bus, CostCurve, DemandProfile, Generator, GridCase, Renewable, validate_case
from .io import DEFAULT_SEGMENTS, polynomial_segments, serialize_case, write_mcase, write_profile_csv

N_DAYS = 61
SEED = 20200628

COUNTIES = {
    **dict.fromkeys((1, 2, 3), "Ector"),
    **dict.fromkeys((4, 5, 6), "Midland"),
    **dict.fromkeys((7, 8), "Pecos"),
    **dict.fromkeys((9, 10, 11), "Lubbock"),
    **dict.fromkeys((12, 13, 14), "Hale"),
    **dict.fromkeys((15, 16, 17, 18), "Bell"),
    **dict.fromkeys((19, 20, 21, 22), "Travis"),
    **dict.fromkeys((23, 24, 25, 26), "Harris"),
    **dict.fromkeys((27, 28), "Fort Bend"),
}

# from, to, reactance (p.u.), flow limit (MW or None)
BRANCHES = [
    (1, 2, 0.04, None), (2, 3, 0.05, None), (1, 3, 0.06, None), (3, 4, 0.05, None),
    (4, 5, 0.04, None), (5, 6, 0.05, None), (4, 6, 0.06, None), (6, 7, 0.05, None),
    (7, 8, 0.08, 100.0),
    (3, 15, 0.10, 330.0), (6, 17, 0.10, 330.0),
    (9, 10, 0.03, None), (10, 11, 0.03, None), (11, 12, 0.03, None), (12, 13, 0.03, None),
    (13, 14, 0.03, None), (9, 14, 0.04, None), (11, 13, 0.04, None),
    (13, 16, 0.08, 160.0), (14, 18, 0.08, 160.0),
    (15, 16, 0.02, None), (16, 17, 0.02, None), (17, 18, 0.02, None), (15, 19, 0.02, None),
    (19, 20, 0.02, None), (20, 21, 0.02, None), (16, 21, 0.03, None), (18, 22, 0.02, None),
    (21, 22, 0.02, None), (22, 23, 0.03, None),
    (23, 24, 0.02, None), (24, 25, 0.02, None), (25, 26, 0.02, None), (26, 27, 0.02, None),
    (27, 28, 0.02, None), (28, 29, 0.02, None), (29, 30, 0.02, None), (23, 26, 0.03, None),
    (25, 28, 0.03, None), (30, 27, 0.03, None),
    (20, 24, 0.04, 700.0), (22, 25, 0.04, 700.0),
]

# bus, p_min, p_max, ramp (MW/h or None), startup $, quadratic cost [a, b, c] on p
GENERATORS = [
    (15, 250.0, 600.0, 150.0, 24000.0, [0.004, 16.0, 300.0]),
    (20, 200.0, 500.0, 130.0, 20000.0, [0.005, 18.0, 300.0]),
    (22, 60.0, 400.0, 220.0, 3000.0, [0.010, 27.0, 100.0]),
    (25, 40.0, 350.0, 200.0, 2000.0, [0.012, 29.0, 100.0]),
    (27, 20.0, 200.0, None, 500.0, [0.050, 58.0, 50.0]),
    (18, 15.0, 150.0, None, 400.0, [0.080, 66.0, 50.0]),
    (11, 10.0, 150.0, None, 300.0, [0.150, 105.0, 40.0]),
    (4, 30.0, 150.0, None, 800.0, [0.030, 34.0, 100.0]),
]

WIND = [(2, 380.0), (5, 300.0)]

PEAK_LOAD = {
    **dict.fromkeys(range(1, 8), 15.0),
    8: 40.0,
    **dict.fromkeys(range(9, 15), 25.0),
    **dict.fromkeys(range(15, 23), 80.0),
    **dict.fromkeys(range(23, 31), 140.0),
}

LOCATION_SETS = {
    "A": [9, 10, 11, 12, 13, 14],
    "B": [16, 17, 19, 21, 23, 24],
    "C": [8],
}


def diurnal_shape() -> np.ndarray:
    h = np.arange(24)
    return 0.56 + 0.44 * np.exp(-(((h - 16.0) / 4.2) ** 2)) + 0.05 * np.exp(-(((h - 8.0) / 2.0) ** 2))


def demo_profiles(n_days: int = N_DAYS, seed: int = SEED) -> tuple[dict[int, np.ndarray], dict[int, np.ndarray]]:
    rng = np.random.default_rng(seed)
    d = np.arange(n_days)
    scale = 0.90 + 0.06 * np.sin(np.pi * (d + 5) / (n_days + 10)) + rng.normal(0.0, 0.03, n_days)
    shape = diurnal_shape()
    base = (scale[:, None] * shape[None, :]).ravel()
    demand = {}
    for bus, peak in PEAK_LOAD.items():
        jitter = 1.0 + rng.normal(0.0, 0.015, base.size)
        demand[bus] = np.round(peak * base * jitter, 3)
    h = np.arange(24)
    night = 0.55 + 0.45 * np.cos(2 * np.pi * (h - 2) / 24.0) ** 2
    wind = {}
    for bus, cap in WIND:
        cf = np.clip(rng.beta(2.0, 2.5, n_days), 0.05, 0.95)
        series = cap * np.clip(cf[:, None] * night[None, :] + rng.normal(0.0, 0.05, (n_days, 24)), 0.0, 1.0)
        wind[bus] = np.round(series.ravel(), 3)
    return demand, wind


def demo_generators(n_segments: int = DEFAULT_SEGMENTS) -> list[Generator]:
    gens = []
    for bus, p_min, p_max, ramp, startup, (a, b, c) in GENERATORS:
        no_load, segs = polynomial_segments([a, b, c], p_min, p_max, n_segments)
        gens.append(
            Generator(
                bus=bus,
                p_min=p_min,
                p_max=p_max,
                ramp_limit=np.inf if ramp is None else ramp,
                startup_cost=startup,
                no_load_cost=no_load,
                cost_curve=CostCurve(tuple(segs)),
            )
        )
    return gens


def demo_case(n_days: int = N_DAYS, seed: int = SEED) -> GridCase:
    demand, wind = demo_profiles(n_days, seed)
    case = GridCase(
        base_mva=100.0,
        buses=tuple(Bus(b, COUNTIES.get(b)) for b in range(1, 31)),
        branches=tuple(Branch(f, t, x, lim) for f, t, x, lim in BRANCHES),
        generators=tuple(demo_generators()),
        demand=DemandProfile.from_mapping(demand),
        renewables=tuple(Renewable(b, s) for b, s in wind.items()),
    )
    return validate_case(case)


def demo_mcase() -> str:
    """The demo network as matrix blocks with the original quadratic costs."""
    case = demo_case(n_days=1)
    return write_mcase(case, costs=[list(g[5]) for g in GENERATORS])


# -- demo economics ------------------------------------------------------------------

BTC_PRICE = 25000.0
DIFFICULTY = 143.0
ELEC_PRICE = 30.0
RRS_PRICE = 11.27
ERS_PRICE = 6.03


def demo_economics(n_intervals: int, seed: int = SEED):
    """Coin price random walk around 25k $/BTC, flat difficulty and a fixed power contract."""
    from .economics import MiningEconomics

    rng = np.random.default_rng([seed, 1])
    walk = np.exp(np.cumsum(rng.normal(0.0, 0.004, n_intervals)))
    btc = np.round(BTC_PRICE * walk / walk.mean(), 2)
    return MiningEconomics(btc, np.full(n_intervals, DIFFICULTY), np.full(n_intervals, ELEC_PRICE))


def demo_reserves(n_intervals: int, seed: int = SEED):
    from .economics import synthetic_reserve

    return (
        synthetic_reserve("RRS", RRS_PRICE, n_intervals, 0.004, seed),
        synthetic_reserve("ERS", ERS_PRICE, n_intervals, 0.001, seed + 1),
    )


def demo_price_history(n_intervals: int = 8760, seed: int = SEED) -> np.ndarray:
    """A year of synthetic hourly prices: diurnal shape, noise and rare spikes."""
    rng = np.random.default_rng([seed, 2])
    h = np.arange(n_intervals) % 24
    base = 22.0 + 14.0 * np.exp(-(((h - 16.0) / 3.5) ** 2))
    spikes = (rng.random(n_intervals) < 0.01) * rng.exponential(60.0, n_intervals)
    return np.round(base + rng.normal(0.0, 4.0, n_intervals) + spikes, 2)


def write_demo_inputs(out) -> list[str]:
    """Write the demo case, profiles, economics and ready-to-run configs into ``out``."""
    from .economics import write_economics_csv, write_program_csv

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    case = demo_case()
    n = case.n_intervals
    demand, wind = demo_profiles()
    rrs, ers = demo_reserves(n)
    hist = demo_price_history()
    files = {
        "case.json": serialize_case(case, indent=1),
        "case.m": demo_mcase(),
        "demand.csv": write_profile_csv(demand),
        "renewables.csv": write_profile_csv(wind),
        "economics.csv": write_economics_csv(demo_economics(n)),
        "rrs.csv": write_program_csv(rrs),
        "ers.csv": write_program_csv(ers),
        "lmp_history.csv": "interval,price_usd_mwh\n" + "".join(f"{t},{v!r}\n" for t, v in enumerate(hist.tolist())),
        "scenario_A.json": {"label": "A-120MW", "facilities": [{"bus": b, "capacity": 20.0} for b in LOCATION_SETS["A"]]},
        "sweep_spec.json": {"location_sets": LOCATION_SETS, "capacities_mw": [0, 60, 120, 240, 330], "days": [0, 6]},
        "simulate.json": {"case": "case.json", "scenario": "scenario_A.json", "days": [0, 60], "output": "out/simulate"},
        "simulate_mcase.json": {
            "case": "case.m", "format": "mcase", "profiles": {"demand": "demand.csv", "renewables": "renewables.csv"},
            "days": [0, 1], "output": "out/simulate_mcase",
        },
        "sweep.json": {"case": "case.json", "sweep": "sweep_spec.json", "output": "out/sweep"},
    }
    programs = [
        {"name": "RRS", "kind": "reserve_record", "path": "rrs.csv"},
        {"name": "ERS", "kind": "reserve_record", "path": "ers.csv"},
        {"name": "price-driven", "kind": "price_driven"},
    ]
    files["profit.json"] = {
        "case": "case.json", "scenario": "scenario_A.json", "days": [0, 60], "output": "out/profit",
        "economics": "economics.csv", "programs": programs,
        "thresholds": {"start": 0, "stop": 120, "num": 61}, "draws": 1000,
        "noise": {"kind": "bootstrap", "path": "lmp_history.csv"}, "seed": 7, "capacity_mw": 1.0,
    }
    files["portfolio.json"] = {
        "case": "case.json", "scenario": "scenario_A.json", "days": [0, 60], "output": "out/portfolio",
        "economics": "economics.csv",
        "programs": programs[:2] + [{"name": "price-driven", "kind": "price_driven", "threshold": 60.0}],
        "capacity_mw": 100.0,
    }
    for name, content in files.items():
        text = content if isinstance(content, str) else json.dumps(content, indent=2) + "\n"
        (out / name).write_text(text)
    return list(files)
