"""Shared builders for small hand-checkable cases."""

import math

import numpy as np
import pytest

from gridflex.case import Branch, Bus, CostCurve, CostSegment, DemandProfile, Generator, GridCase, Renewable, validate_case
from gridflex.market import OPTIMAL, PriceRecord


def gen(bus, p_min, p_max, slope, no_load=0.0, startup=0.0, ramp=math.inf, status="in"):
    curve = CostCurve((CostSegment(p_max, slope),)) if p_max > p_min else CostCurve(())
    return Generator(bus, p_min, p_max, ramp, startup, no_load, curve, status)


def make_case(n_buses, branches, generators, demand, renewables=(), counties=None, n_days=1):
    """``demand`` maps bus -> scalar MW (held flat) or a full series."""
    n = 24 * n_days
    series = {b: np.full(n, float(v)) if np.isscalar(v) else np.asarray(v, float) for b, v in demand.items()}
    counties = counties or {}
    return validate_case(
        GridCase(
            base_mva=100.0,
            buses=tuple(Bus(b, counties.get(b)) for b in range(1, n_buses + 1)),
            branches=tuple(Branch(*br) for br in branches),
            generators=tuple(generators),
            demand=DemandProfile.from_mapping(series),
            renewables=tuple(Renewable(b, s) for b, s in renewables),
        )
    )


def record_from(lmp, bus_ids=None, statuses=None):
    """PriceRecord over whole days from a ``[bus, interval]`` array."""
    lmp = np.asarray(lmp, dtype=float)
    n_days = lmp.shape[1] // 24
    statuses = statuses or [OPTIMAL] * n_days
    lmp = lmp.copy()
    for d, s in enumerate(statuses):
        if s != OPTIMAL:
            lmp[:, d * 24 : (d + 1) * 24] = np.nan
    bus_ids = bus_ids or list(range(1, lmp.shape[0] + 1))
    return PriceRecord(tuple(bus_ids), tuple(range(n_days)), lmp, tuple(statuses), {})


@pytest.fixture
def two_bus():
    return make_case(2, [(1, 2, 0.1, None)], [gen(1, 0, 200, 30.0)], {2: 100.0})


@pytest.fixture
def ring():
    """3-bus ring, equal reactances, line 1-2 limited to 80 MW."""
    return make_case(
        3,
        [(1, 2, 0.1, 80.0), (2, 3, 0.1, None), (1, 3, 0.1, None)],
        [gen(1, 0, 300, 10.0), gen(3, 0, 300, 50.0)],
        {2: 150.0},
    )


def random_portfolio(seed, max_programs=5, max_horizon=8760):
    """Seeded portfolio instance: programs, economics and a capacity."""
    from gridflex.economics import DrProgram, MiningEconomics

    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_programs + 1))
    T = int(rng.choice([1, 3, 24, int(rng.integers(1, max_horizon + 1)), max_horizon]))
    econ = MiningEconomics(
        rng.uniform(15000, 35000, T),
        np.full(T, 143.0) * rng.uniform(0.8, 1.2),
        rng.uniform(10, 120, T),
    )
    programs = []
    for i in range(n):
        revenue = np.round(rng.uniform(0, 30, T), 2)
        if rng.random() < 0.5:
            deployment = (rng.random(T) < rng.uniform(0, 0.5)).astype(float)
        else:
            deployment = rng.uniform(0, 1, T) * (rng.random(T) < 0.3)
        programs.append(DrProgram(f"p{i}", revenue=revenue, deployment=deployment))
    if n > 1 and rng.random() < 0.2:
        programs[-1] = DrProgram("dup", revenue=programs[0].revenue, deployment=programs[0].deployment)
    return programs, econ, float(np.round(rng.uniform(1, 500), 1))


# acceptance verdicts, filled by test_acceptance and echoed after the run
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
