"""Mining-load scenarios and capacity x location sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .analytics import AnalyticsError, LmpStats, compute_stats
from .case import DemandProfile, GridCase
from .market import FAILED, INFEASIBLE, OPTIMAL, PriceRecord, SolverSettings, case_hash, run_horizon


@dataclass(frozen=True)
class Facility:
    bus: int
    capacity: float

    def __post_init__(self):
        object.__setattr__(self, "bus", int(self.bus))
        object.__setattr__(self, "capacity", float(self.capacity))
        if not self.capacity > 0:
            raise ValueError(f"facility at bus {self.bus}: capacity must be > 0 MW")


def fixed_uniform(facility: Facility, n_intervals: int) -> np.ndarray:
    """Full rated load in every interval."""
    return np.full(n_intervals, facility.capacity)


STRATEGIES: dict[str, Callable[[Facility, int], np.ndarray]] = {"fixed_uniform": fixed_uniform}


@dataclass(frozen=True)
class MiningScenario:
    facilities: tuple[Facility, ...] = ()
    strategy: str = "fixed_uniform"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "facilities", tuple(self.facilities))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")

    @classmethod
    def uniform(cls, buses: Sequence[int], total_mw: float, label: str = "") -> "MiningScenario":
        """``total_mw`` split equally across ``buses``; zero gives the empty scenario."""
        if total_mw < 0:
            raise ValueError("total capacity must be non-negative")
        if total_mw == 0:
            return cls((), label=label)
        if not buses:
            raise ValueError("no buses to place facilities on")
        share = total_mw / len(buses)
        return cls(tuple(Facility(b, share) for b in buses), label=label)

    @property
    def total(self) -> float:
        return float(sum(f.capacity for f in self.facilities))

    @property
    def empty(self) -> bool:
        return not self.facilities

    def union(self, other: "MiningScenario") -> "MiningScenario":
        if other.strategy != self.strategy:
            raise ValueError("cannot merge scenarios with different strategies")
        label = "+".join(x for x in (self.label, other.label) if x)
        return MiningScenario(self.facilities + other.facilities, self.strategy, label)

    def to_document(self) -> dict:
        return {
            "label": self.label,
            "strategy": self.strategy,
            "facilities": [{"bus": f.bus, "capacity": f.capacity} for f in self.facilities],
        }

    @classmethod
    def from_document(cls, doc: Mapping) -> "MiningScenario":
        unknown = set(doc) - {"label", "strategy", "facilities"}
        if unknown:
            raise ValueError(f"unknown scenario field(s): {sorted(unknown)}")
        facs = tuple(Facility(f["bus"], f["capacity"]) for f in doc.get("facilities", ()))
        return cls(facs, doc.get("strategy", "fixed_uniform"), doc.get("label", ""))


def inject(case: GridCase, scenario: MiningScenario) -> GridCase:
    """New case with each facility's load added to its bus, one facility at a time."""
    known = set(case.bus_ids)
    for f in scenario.facilities:
        if f.bus not in known:
            raise ValueError(f"scenario {scenario.label!r}: bus {f.bus} is not in the case")
    if scenario.empty:
        return case
    n = case.n_intervals
    profile = STRATEGIES[scenario.strategy]
    series = dict(case.demand.series)
    for f in scenario.facilities:
        base = series.get(f.bus, np.zeros(n))
        series[f.bus] = base + profile(f, n)
    return replace(case, demand=DemandProfile.from_mapping(series))


# -- sweeps -------------------------------------------------------------------------------


@dataclass(eq=False)
class SweepCell:
    location: str | None
    capacity: float
    record: PriceRecord
    stats: LmpStats | None

    @property
    def feasible_days(self) -> int:
        return self.record.count(OPTIMAL)

    @property
    def infeasible_days(self) -> int:
        return self.record.count(INFEASIBLE)

    @property
    def failed_days(self) -> int:
        return self.record.count(FAILED)


@dataclass(eq=False)
class SweepReport:
    baseline: SweepCell
    cells: dict[tuple[str, float], SweepCell] = field(default_factory=dict)

    def locations(self) -> list[str]:
        return list(dict.fromkeys(k[0] for k in self.cells))

    def capacities(self, location: str) -> list[float]:
        return sorted(c for loc, c in self.cells if loc == location)

    def infeasible_counts(self, location: str) -> list[int]:
        """Days not solved to optimality, by ascending capacity."""
        return [self.cells[(location, c)].infeasible_days + self.cells[(location, c)].failed_days
                for c in self.capacities(location)]


def monotonicity_violations(report: SweepReport) -> list[tuple[str, float, int]]:
    """``(location, capacity, day)`` where a day solved at this capacity failed at a lower one."""
    out = []
    for loc in report.locations():
        bad: set[int] = set()
        for cap in report.capacities(loc):
            rec = report.cells[(loc, cap)].record
            ok = {d for d, s in zip(rec.days, rec.statuses) if s == OPTIMAL}
            out.extend((loc, cap, d) for d in sorted(ok & bad))
            bad |= {d for d, s in zip(rec.days, rec.statuses) if s != OPTIMAL}
    return out


def _stats(record: PriceRecord, case: GridCase) -> LmpStats | None:
    try:
        return compute_stats(record, case)
    except AnalyticsError:
        return None


def _run_cell(args) -> PriceRecord:
    case, scenario, days, settings, seed = args
    return run_horizon(case, scenario if not scenario.empty else None, days, settings, seed=seed)


def capacity_sweep(
    case: GridCase,
    location_sets: Mapping[str, Sequence[int]],
    capacities: Sequence[float],
    days: range | None = None,
    settings: SolverSettings = SolverSettings(),
    jobs: int = 1,
    seed: int | None = None,
) -> SweepReport:
    """Run every (location set, total capacity) cell plus the no-mining baseline.

    Capacities are split equally over each set's buses. Cells that inject the
    same load (every capacity-0 cell, for one) are solved once and share a
    record.
    """
    if days is None:
        days = range(case.n_days)
    cells = {(loc, float(cap)): MiningScenario.uniform(buses, float(cap), label=f"{loc}@{cap:g}")
             for loc, buses in location_sets.items() for cap in capacities}
    baseline = MiningScenario()
    keys: dict[tuple, str] = {None: case_hash(case)}
    for key, scen in cells.items():
        keys[key] = case_hash(inject(case, scen))
    unique = list(dict.fromkeys(keys.values()))
    scenario_of = {keys[None]: baseline}
    for key, scen in cells.items():
        scenario_of.setdefault(keys[key], scen)
    work = [(case, scenario_of[h], days, settings, seed) for h in unique]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, work))
    else:
        records = [_run_cell(w) for w in work]
    by_hash = dict(zip(unique, records))

    def cell(loc, cap, key):
        rec = by_hash[keys[key]]
        return SweepCell(loc, cap, rec, _stats(rec, inject(case, scenario_of[keys[key]])))

    report = SweepReport(cell(None, 0.0, None))
    for key in cells:
        report.cells[key] = cell(key[0], key[1], key)
    return report
