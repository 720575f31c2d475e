"""Grid case data model: buses, branches, generators and hourly profiles.

All containers are immutable. Time series are stored as read-only numpy
arrays; equality between cases is exact (bit-for-bit on floats).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

HOURS_PER_DAY = 24


class CaseError(ValueError):
    """Structured diagnostic for a malformed or invalid grid case.

    ``kind`` is one of ``syntax``, ``schema``, ``reference``, ``invariant``,
    ``island`` or ``io``; ``location`` points at the offending element
    (a JSON path such as ``branches[2].to_bus`` or ``line 4, column 7``).
    """

    def __init__(self, kind: str, message: str, location: str | None = None):
        self.kind = kind
        self.location = location
        self.message = message
        where = f" at {location}" if location else ""
        super().__init__(f"{kind} error{where}: {message}")


def _frozen_array(values, name: str = "series") -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise CaseError("schema", f"{name} must be a flat list of numbers")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Bus:
    id: int
    county: str | None = None


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    reactance: float
    flow_limit: float | None = None
    status: str = "in"

    @property
    def in_service(self) -> bool:
        return self.status == "in"

    @property
    def monitored(self) -> bool:
        return self.in_service and self.flow_limit is not None


@dataclass(frozen=True)
class CostSegment:
    breakpoint_mw: float
    slope: float


@dataclass(frozen=True)
class CostCurve:
    """Convex piecewise-linear energy cost above ``p_min``.

    Segment ``k`` spans ``[breakpoint[k-1], breakpoint[k]]`` with the first
    segment starting at the generator's ``p_min``. Cost of running at
    ``p_min`` is carried by the generator's no-load cost.
    """

    segments: tuple[CostSegment, ...] = ()

    def widths(self, p_min: float) -> np.ndarray:
        bps = np.array([s.breakpoint_mw for s in self.segments], dtype=float)
        return np.diff(np.concatenate(([p_min], bps)))

    def slopes(self) -> np.ndarray:
        return np.array([s.slope for s in self.segments], dtype=float)

    def cost(self, p_min: float, output: float) -> float:
        """Energy cost of producing ``output`` MW (excluding no-load cost)."""
        total = 0.0
        lo = p_min
        for seg in self.segments:
            used = min(max(output - lo, 0.0), seg.breakpoint_mw - lo)
            total += used * seg.slope
            lo = seg.breakpoint_mw
        return total


@dataclass(frozen=True)
class Generator:
    bus: int
    p_min: float
    p_max: float
    ramp_limit: float
    startup_cost: float
    no_load_cost: float
    cost_curve: CostCurve
    status: str = "in"

    @property
    def in_service(self) -> bool:
        return self.status == "in"


@dataclass(frozen=True, eq=False)
class DemandProfile:
    """Per-bus hourly demand, MW. Buses without a series have zero demand."""

    series: Mapping[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data: Mapping[int, Iterable[float]]) -> "DemandProfile":
        return cls({int(b): _frozen_array(v, f"demand[{b}]") for b, v in sorted(data.items())})

    @property
    def n_intervals(self) -> int:
        for arr in self.series.values():
            return len(arr)
        return 0

    def matrix(self, bus_ids: list[int]) -> np.ndarray:
        """Dense ``[bus, interval]`` demand in the given bus order."""
        out = np.zeros((len(bus_ids), self.n_intervals))
        index = {b: i for i, b in enumerate(bus_ids)}
        for b, arr in self.series.items():
            out[index[b]] = arr
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, DemandProfile):
            return NotImplemented
        if list(self.series) != list(other.series):
            return False
        return all(np.array_equal(self.series[b], other.series[b]) for b in self.series)


@dataclass(frozen=True, eq=False)
class Renewable:
    """Zero-cost curtailable injection; ``series`` is the available MW."""

    bus: int
    series: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "series", _frozen_array(self.series, "renewable series"))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Renewable):
            return NotImplemented
        return self.bus == other.bus and np.array_equal(self.series, other.series)


@dataclass(frozen=True)
class GridCase:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    demand: DemandProfile
    renewables: tuple[Renewable, ...] = ()

    def __post_init__(self):
        if isinstance(self.base_mva, (int, float)) and not isinstance(self.base_mva, bool):
            object.__setattr__(self, "base_mva", float(self.base_mva))
        for name in ("buses", "branches", "generators", "renewables"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    @property
    def n_intervals(self) -> int:
        return self.demand.n_intervals

    @property
    def n_days(self) -> int:
        return self.n_intervals // HOURS_PER_DAY

    @property
    def counties(self) -> dict[int, str]:
        return {b.id: b.county for b in self.buses if b.county is not None}

    def demand_matrix(self) -> np.ndarray:
        return self.demand.matrix(self.bus_ids)

    def renewable_matrix(self) -> np.ndarray:
        if not self.renewables:
            return np.zeros((0, self.n_intervals))
        return np.vstack([r.series for r in self.renewables])


def validate_case(case: GridCase) -> GridCase:
    """Check every structural invariant; raise :class:`CaseError` on the first violation."""
    if not (isinstance(case.base_mva, float) and math.isfinite(case.base_mva) and case.base_mva > 0):
        raise CaseError("invariant", "base_mva must be a positive number", "base_mva")
    if not case.buses:
        raise CaseError("invariant", "case has no buses", "buses")
    ids = set()
    for i, bus in enumerate(case.buses):
        if bus.id in ids:
            raise CaseError("invariant", f"duplicate bus id {bus.id}", f"buses[{i}].id")
        ids.add(bus.id)

    for i, br in enumerate(case.branches):
        loc = f"branches[{i}]"
        for end in ("from_bus", "to_bus"):
            if getattr(br, end) not in ids:
                raise CaseError("reference", f"unknown bus {getattr(br, end)}", f"{loc}.{end}")
        if br.from_bus == br.to_bus:
            raise CaseError("invariant", "branch connects a bus to itself", loc)
        if br.status not in ("in", "out"):
            raise CaseError("invariant", f"status must be 'in' or 'out', got {br.status!r}", f"{loc}.status")
        if not (math.isfinite(br.reactance) and br.reactance > 0):
            raise CaseError("invariant", "reactance must be positive", f"{loc}.reactance")
        if br.flow_limit is not None and not (br.flow_limit > 0 and math.isfinite(br.flow_limit)):
            raise CaseError("invariant", "flow_limit must be positive or null", f"{loc}.flow_limit")

    for i, gen in enumerate(case.generators):
        _validate_generator(gen, ids, f"generators[{i}]")

    n_t = case.demand.n_intervals
    for b, arr in case.demand.series.items():
        if b not in ids:
            raise CaseError("reference", f"unknown bus {b}", f"demand.{b}")
        if len(arr) != n_t:
            raise CaseError("invariant", "all demand series must share one length", f"demand.{b}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise CaseError("invariant", "demand must be finite and non-negative", f"demand.{b}")
    if n_t == 0 or n_t % HOURS_PER_DAY:
        raise CaseError("invariant", f"profile length {n_t} is not a positive multiple of 24", "demand")
    for i, ren in enumerate(case.renewables):
        loc = f"renewables[{i}]"
        if ren.bus not in ids:
            raise CaseError("reference", f"unknown bus {ren.bus}", f"{loc}.bus")
        if len(ren.series) != n_t:
            raise CaseError("invariant", "renewable series length differs from demand", f"{loc}.series")
        if not np.all(np.isfinite(ren.series)) or np.any(ren.series < 0):
            raise CaseError("invariant", "renewable output must be finite and non-negative", f"{loc}.series")

    _check_single_island(case)
    return case


def _validate_generator(gen: Generator, ids: set[int], loc: str) -> None:
    if gen.bus not in ids:
        raise CaseError("reference", f"unknown bus {gen.bus}", f"{loc}.bus")
    if gen.status not in ("in", "out"):
        raise CaseError("invariant", f"status must be 'in' or 'out', got {gen.status!r}", f"{loc}.status")
    for name in ("p_min", "p_max", "startup_cost", "no_load_cost"):
        value = getattr(gen, name)
        if not (math.isfinite(value) and value >= 0):
            raise CaseError("invariant", f"{name} must be finite and non-negative", f"{loc}.{name}")
    if gen.p_max < gen.p_min:
        raise CaseError("invariant", "p_max is below p_min", f"{loc}.p_max")
    if not gen.ramp_limit > 0:
        raise CaseError("invariant", "ramp_limit must be positive (null for unlimited)", f"{loc}.ramp_limit")

    segs = gen.cost_curve.segments
    if not segs and gen.p_max > gen.p_min:
        raise CaseError("invariant", "cost curve needs at least one segment", f"{loc}.cost_curve")
    prev_bp, prev_slope = gen.p_min, -math.inf
    for k, seg in enumerate(segs):
        sloc = f"{loc}.cost_curve[{k}]"
        if not (math.isfinite(seg.breakpoint_mw) and math.isfinite(seg.slope)):
            raise CaseError("invariant", "cost segment values must be finite", sloc)
        if seg.breakpoint_mw <= prev_bp:
            raise CaseError("invariant", "breakpoints must be strictly increasing above p_min", f"{sloc}.breakpoint_mw")
        if seg.slope < prev_slope:
            raise CaseError("invariant", "non-convex cost curve: slope decreases", f"{sloc}.slope")
        prev_bp, prev_slope = seg.breakpoint_mw, seg.slope
    if segs and segs[-1].breakpoint_mw != gen.p_max:
        raise CaseError("invariant", "final breakpoint must equal p_max", f"{loc}.cost_curve")


def _check_single_island(case: GridCase) -> None:
    index = {b.id: i for i, b in enumerate(case.buses)}
    live = [br for br in case.branches if br.in_service]
    n = len(index)
    rows = [index[br.from_bus] for br in live]
    cols = [index[br.to_bus] for br in live]
    graph = coo_matrix((np.ones(len(live)), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(graph, directed=False)
    if n_comp > 1:
        stray = [case.buses[i].id for i in range(n) if labels[i] != labels[0]]
        raise CaseError("island", f"network splits into {n_comp} islands; e.g. bus {stray[0]} is disconnected", "branches")
