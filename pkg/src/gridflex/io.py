"""Reading and writing grid cases.

Two case encodings are supported:

* the native JSON document (``parse_case`` / ``serialize_case``), and
* MATPOWER-style matrix blocks (``parse_mcase`` / ``write_mcase``).

Hourly profiles travel as CSV with an ``interval,bus_<id>,...`` header.
Every malformed input raises :class:`~gridflex.case.CaseError`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from pathlib import Path
from typing import Any

import numpy as np

from .case import (
    HOURS_PER_DAY,
    Branch,
    Bus,
    CaseError,
    CostCurve,
    CostSegment,
    DemandProfile,
    Generator,
    GridCase,
    Renewable,
    validate_case,
)

TOP_LEVEL_KEYS = ("base_mva", "buses", "branches", "generators", "demand", "renewables", "counties")
BUS_KEYS = ("id", "county")
BRANCH_KEYS = ("from_bus", "to_bus", "reactance", "flow_limit", "status")
GENERATOR_KEYS = ("bus", "p_min", "p_max", "ramp_limit", "startup_cost", "no_load_cost", "cost_curve", "status")
SEGMENT_KEYS = ("breakpoint_mw", "slope")
RENEWABLE_KEYS = ("bus", "series")

DEFAULT_SEGMENTS = 4


# -- native schema ---------------------------------------------------------


def _number(value: Any, loc: str, *, nullable: bool = False) -> float | None:
    if value is None and nullable:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseError("schema", f"expected a number, got {type(value).__name__}", loc)
    value = float(value)
    if not math.isfinite(value):
        raise CaseError("schema", "number must be finite", loc)
    return value


def _integer(value: Any, loc: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise CaseError("schema", f"expected an integer, got {value!r}", loc)
    return value


def _obj(value: Any, loc: str, allowed: tuple[str, ...], required: tuple[str, ...]) -> dict:
    if not isinstance(value, dict):
        raise CaseError("schema", f"expected an object, got {type(value).__name__}", loc)
    for key in value:
        if key not in allowed:
            raise CaseError("schema", f"unknown field {key!r}", f"{loc}.{key}" if loc else key)
    for key in required:
        if key not in value:
            raise CaseError("schema", f"missing field {key!r}", loc or "document")
    return value


def _list(value: Any, loc: str) -> list:
    if not isinstance(value, list):
        raise CaseError("schema", f"expected a list, got {type(value).__name__}", loc)
    return value


def _series(value: Any, loc: str) -> np.ndarray:
    items = _list(value, loc)
    return np.array([_number(v, f"{loc}[{i}]") for i, v in enumerate(items)], dtype=float)


def _status(value: Any, loc: str) -> str:
    if value not in ("in", "out"):
        raise CaseError("schema", f"status must be 'in' or 'out', got {value!r}", loc)
    return value


def _bus_key(key: str, loc: str) -> int:
    try:
        return int(key)
    except (TypeError, ValueError):
        raise CaseError("schema", f"bus key {key!r} is not an integer", loc) from None


def parse_case(source: str) -> GridCase:
    """Parse a native-schema JSON document into a validated :class:`GridCase`."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise CaseError("syntax", exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    except (TypeError, RecursionError, UnicodeDecodeError) as exc:
        raise CaseError("syntax", str(exc)) from None

    _obj(doc, "", TOP_LEVEL_KEYS, ("base_mva", "buses", "branches", "generators", "demand"))
    base_mva = _number(doc["base_mva"], "base_mva")

    sidecar = dict(_counties(doc))

    buses = []
    for i, raw in enumerate(_list(doc["buses"], "buses")):
        loc = f"buses[{i}]"
        _obj(raw, loc, BUS_KEYS, ("id",))
        bus_id = _integer(raw["id"], f"{loc}.id")
        county = raw.get("county")
        if county is not None and not isinstance(county, str):
            raise CaseError("schema", "county must be a string or null", f"{loc}.county")
        side = sidecar.get(bus_id)
        if side is not None:
            if county is not None and county != side:
                raise CaseError("invariant", f"county {county!r} conflicts with counties table ({side!r})", f"{loc}.county")
            county = side
        buses.append(Bus(bus_id, county))
    known = {b.id for b in buses}
    for bus_id in sidecar:
        if bus_id not in known:
            raise CaseError("reference", f"unknown bus {bus_id}", f"counties.{bus_id}")

    branches = []
    for i, raw in enumerate(_list(doc["branches"], "branches")):
        loc = f"branches[{i}]"
        _obj(raw, loc, BRANCH_KEYS, ("from_bus", "to_bus", "reactance"))
        branches.append(
            Branch(
                from_bus=_integer(raw["from_bus"], f"{loc}.from_bus"),
                to_bus=_integer(raw["to_bus"], f"{loc}.to_bus"),
                reactance=_number(raw["reactance"], f"{loc}.reactance"),
                flow_limit=_number(raw.get("flow_limit"), f"{loc}.flow_limit", nullable=True),
                status=_status(raw.get("status", "in"), f"{loc}.status"),
            )
        )

    generators = []
    for i, raw in enumerate(_list(doc["generators"], "generators")):
        loc = f"generators[{i}]"
        _obj(raw, loc, GENERATOR_KEYS, ("bus", "p_min", "p_max", "cost_curve"))
        segments = []
        for k, seg in enumerate(_list(raw["cost_curve"], f"{loc}.cost_curve")):
            sloc = f"{loc}.cost_curve[{k}]"
            _obj(seg, sloc, SEGMENT_KEYS, SEGMENT_KEYS)
            segments.append(CostSegment(_number(seg["breakpoint_mw"], f"{sloc}.breakpoint_mw"), _number(seg["slope"], f"{sloc}.slope")))
        ramp = _number(raw.get("ramp_limit"), f"{loc}.ramp_limit", nullable=True)
        generators.append(
            Generator(
                bus=_integer(raw["bus"], f"{loc}.bus"),
                p_min=_number(raw["p_min"], f"{loc}.p_min"),
                p_max=_number(raw["p_max"], f"{loc}.p_max"),
                ramp_limit=math.inf if ramp is None else ramp,
                startup_cost=_number(raw.get("startup_cost", 0.0), f"{loc}.startup_cost"),
                no_load_cost=_number(raw.get("no_load_cost", 0.0), f"{loc}.no_load_cost"),
                cost_curve=CostCurve(tuple(segments)),
                status=_status(raw.get("status", "in"), f"{loc}.status"),
            )
        )

    demand_raw = doc["demand"]
    if not isinstance(demand_raw, dict):
        raise CaseError("schema", "demand must map bus ids to series", "demand")
    demand = {}
    for key, values in demand_raw.items():
        bus_id = _bus_key(key, f"demand.{key}")
        if bus_id in demand:
            raise CaseError("schema", f"duplicate demand entry for bus {bus_id}", f"demand.{key}")
        demand[bus_id] = _series(values, f"demand.{key}")

    renewables = []
    for i, raw in enumerate(_list(doc.get("renewables", []), "renewables")):
        loc = f"renewables[{i}]"
        _obj(raw, loc, RENEWABLE_KEYS, RENEWABLE_KEYS)
        renewables.append(Renewable(_integer(raw["bus"], f"{loc}.bus"), _series(raw["series"], f"{loc}.series")))

    case = GridCase(
        base_mva=base_mva,
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(generators),
        demand=DemandProfile.from_mapping(demand),
        renewables=tuple(renewables),
    )
    return validate_case(case)


def _counties(doc: dict) -> list[tuple[int, str]]:
    raw = doc.get("counties", {})
    if raw is None:
        return []
    if not isinstance(raw, dict):
        raise CaseError("schema", "counties must map bus ids to county names", "counties")
    out = []
    for key, county in raw.items():
        if not isinstance(county, str):
            raise CaseError("schema", "county name must be a string", f"counties.{key}")
        out.append((_bus_key(key, f"counties.{key}"), county))
    return out


def _num_out(value: float) -> float:
    # json writes repr(float): the shortest text that round-trips bit-exactly
    return float(value)


def case_to_document(case: GridCase) -> dict:
    return {
        "base_mva": _num_out(case.base_mva),
        "buses": [{"id": b.id, "county": b.county} for b in case.buses],
        "branches": [
            {
                "from_bus": br.from_bus,
                "to_bus": br.to_bus,
                "reactance": _num_out(br.reactance),
                "flow_limit": None if br.flow_limit is None else _num_out(br.flow_limit),
                "status": br.status,
            }
            for br in case.branches
        ],
        "generators": [
            {
                "bus": g.bus,
                "p_min": _num_out(g.p_min),
                "p_max": _num_out(g.p_max),
                "ramp_limit": None if math.isinf(g.ramp_limit) else _num_out(g.ramp_limit),
                "startup_cost": _num_out(g.startup_cost),
                "no_load_cost": _num_out(g.no_load_cost),
                "cost_curve": [{"breakpoint_mw": s.breakpoint_mw, "slope": s.slope} for s in g.cost_curve.segments],
                "status": g.status,
            }
            for g in case.generators
        ],
        "demand": {str(b): arr.tolist() for b, arr in case.demand.series.items()},
        "renewables": [{"bus": r.bus, "series": r.series.tolist()} for r in case.renewables],
        "counties": {str(b): c for b, c in case.counties.items()},
    }


def serialize_case(case: GridCase, indent: int | None = None) -> str:
    """Encode a case as a native-schema JSON document."""
    return json.dumps(case_to_document(case), indent=indent, allow_nan=False)


def round_trip(case: GridCase) -> GridCase:
    return parse_case(serialize_case(case))


# -- matrix-block format -----------------------------------------------------

_BLOCK_RE = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\]\s*;?", re.S)
_SCALAR_RE = re.compile(r"mpc\.(\w+)\s*=\s*([-+0-9.eE]+)\s*;")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _rows(block: str, name: str) -> list[list[float]]:
    rows = []
    for chunk in re.split(r"[;\n]", block):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            rows.append([float(tok) for tok in chunk.replace(",", " ").split()])
        except ValueError:
            raise CaseError("syntax", f"non-numeric entry in row {chunk!r}", f"mpc.{name}") from None
    if rows:
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise CaseError("schema", f"column-count mismatch: row has {len(row)} columns, expected {width}", f"mpc.{name} row {i + 1}")
    return rows


def polynomial_segments(coeffs: list[float], p_min: float, p_max: float, n_segments: int = DEFAULT_SEGMENTS) -> tuple[float, list[CostSegment]]:
    """Chord-linearize a polynomial cost on ``[p_min, p_max]``.

    ``coeffs`` are highest degree first. Returns the cost at ``p_min`` (to be
    booked as no-load cost) and the convex segment list. A linear polynomial
    yields a single segment.
    """
    poly = np.poly1d(coeffs) if coeffs else np.poly1d([0.0])
    at_min = float(poly(p_min))
    if p_max <= p_min:
        return at_min, []
    if poly.order >= 2 and coeffs[0] < 0:
        raise CaseError("invariant", "non-convex polynomial cost (negative leading coefficient)")
    k = 1 if poly.order <= 1 else n_segments
    edges = [p_min + (p_max - p_min) * i / k for i in range(k + 1)]
    edges[-1] = p_max
    segs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        segs.append(CostSegment(hi, (float(poly(hi)) - float(poly(lo))) / (hi - lo)))
    for a, b in zip(segs, segs[1:]):
        if b.slope < a.slope:
            raise CaseError("invariant", "non-convex polynomial cost on [p_min, p_max]")
    return at_min, segs


def _piecewise_segments(points: list[float], p_min: float, p_max: float) -> tuple[float, list[CostSegment]]:
    xs, ys = points[0::2], points[1::2]
    if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
        raise CaseError("invariant", "piecewise-linear cost needs increasing breakpoints")
    at_min = float(np.interp(p_min, xs, ys))
    knots = [p_min] + [x for x in xs if p_min < x < p_max] + [p_max]
    segs = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi > lo:
            segs.append(CostSegment(hi, (float(np.interp(hi, xs, ys)) - float(np.interp(lo, xs, ys))) / (hi - lo)))
    return at_min, segs


def parse_mcase(source: str, n_segments: int = DEFAULT_SEGMENTS, n_days: int = 1) -> GridCase:
    """Parse MATPOWER-style ``mpc.*`` matrix blocks.

    Bus ``Pd`` becomes a flat demand series of ``24 * n_days`` hours; attach
    real profiles with :func:`with_profiles`.
    """
    if not isinstance(source, str):
        raise CaseError("syntax", "matrix-block source must be text")
    text = _strip_comments(source)
    blocks = {m.group(1): m.group(2) for m in _BLOCK_RE.finditer(text)}
    scalars = {m.group(1): m.group(2) for m in _SCALAR_RE.finditer(text)}
    for name in ("bus", "gen", "branch", "gencost"):
        if name not in blocks:
            raise CaseError("schema", f"missing block mpc.{name}", f"mpc.{name}")
    if "baseMVA" not in scalars:
        raise CaseError("schema", "missing block mpc.baseMVA", "mpc.baseMVA")
    base_mva = float(scalars["baseMVA"])

    bus_rows = _rows(blocks["bus"], "bus")
    gen_rows = _rows(blocks["gen"], "gen")
    branch_rows = _rows(blocks["branch"], "branch")
    cost_rows = [row for row in re.split(r"[;\n]", blocks["gencost"]) if row.strip()]
    _require_columns(bus_rows, 3, "bus")
    _require_columns(gen_rows, 10, "gen")
    _require_columns(branch_rows, 11, "branch")
    if len(cost_rows) < len(gen_rows):
        raise CaseError("schema", f"mpc.gencost has {len(cost_rows)} rows for {len(gen_rows)} generators", "mpc.gencost")

    n_t = HOURS_PER_DAY * n_days
    buses, demand = [], {}
    for row in bus_rows:
        bus_id = _as_int(row[0], "mpc.bus")
        buses.append(Bus(bus_id))
        if row[2] != 0:
            demand[bus_id] = np.full(n_t, row[2])
    if not demand and buses:
        demand[buses[0].id] = np.zeros(n_t)

    branches = []
    for i, row in enumerate(branch_rows):
        status = "in" if row[10] > 0 else "out"
        if status == "in" and row[3] == 0:
            raise CaseError("invariant", "zero reactance on in-service branch", f"mpc.branch row {i + 1}")
        branches.append(
            Branch(
                from_bus=_as_int(row[0], "mpc.branch"),
                to_bus=_as_int(row[1], "mpc.branch"),
                reactance=abs(row[3]) if row[3] != 0 else 1.0,
                flow_limit=row[5] if row[5] > 0 else None,
                status=status,
            )
        )

    generators = []
    for i, row in enumerate(gen_rows):
        loc = f"mpc.gencost row {i + 1}"
        try:
            cost = [float(tok) for tok in cost_rows[i].replace(",", " ").split()]
        except ValueError:
            raise CaseError("syntax", "non-numeric gencost entry", loc) from None
        if len(cost) < 4:
            raise CaseError("schema", "gencost row needs model, startup, shutdown, n", loc)
        model, startup, n = int(cost[0]), cost[1], int(cost[3])
        p_max, p_min = row[8], row[9]
        try:
            if model == 2:
                if len(cost) < 4 + n:
                    raise CaseError("schema", f"gencost row declares {n} coefficients but has {len(cost) - 4}", loc)
                no_load, segs = polynomial_segments(cost[4 : 4 + n], p_min, p_max, n_segments)
            elif model == 1:
                if len(cost) < 4 + 2 * n:
                    raise CaseError("schema", f"gencost row declares {n} points but has fewer", loc)
                no_load, segs = _piecewise_segments(cost[4 : 4 + 2 * n], p_min, p_max)
            else:
                raise CaseError("schema", f"unsupported cost model {model}", loc)
        except CaseError as exc:
            if exc.location is None:
                raise CaseError(exc.kind, exc.message, loc) from None
            raise
        ramp = row[16] * 60.0 if len(row) >= 17 and row[16] > 0 else math.inf
        generators.append(
            Generator(
                bus=_as_int(row[0], "mpc.gen"),
                p_min=p_min,
                p_max=p_max,
                ramp_limit=ramp,
                startup_cost=startup,
                no_load_cost=max(no_load, 0.0),
                cost_curve=CostCurve(tuple(segs)),
                status="in" if row[7] > 0 else "out",
            )
        )

    case = GridCase(base_mva, tuple(buses), tuple(branches), tuple(generators), DemandProfile.from_mapping(demand))
    return validate_case(case)


def _require_columns(rows: list[list[float]], n: int, name: str) -> None:
    if rows and len(rows[0]) < n:
        raise CaseError("schema", f"column-count mismatch: need at least {n} columns, found {len(rows[0])}", f"mpc.{name}")


def _as_int(value: float, loc: str) -> int:
    if not float(value).is_integer():
        raise CaseError("schema", f"bus id {value} is not an integer", loc)
    return int(value)


def write_mcase(case: GridCase, costs: list[list[float]] | None = None) -> str:
    """Write the static network as matrix blocks.

    ``costs`` supplies one polynomial coefficient list per generator; when
    omitted, each generator's piecewise curve is written as gencost model 1.
    Demand is the hour-0 snapshot.
    """
    demand0 = {b: float(arr[0]) for b, arr in case.demand.series.items()}
    lines = ["function mpc = gridcase", "mpc.version = '2';", f"mpc.baseMVA = {case.base_mva!r};", "mpc.bus = ["]
    for b in case.buses:
        lines.append(f"\t{b.id}\t1\t{demand0.get(b.id, 0.0)!r}\t0\t0\t0\t1\t1\t0\t230\t1\t1.1\t0.9;")
    lines += ["];", "mpc.gen = ["]
    for g in case.generators:
        ramp = 0.0 if math.isinf(g.ramp_limit) else g.ramp_limit / 60.0
        status = 1 if g.in_service else 0
        cols = [g.bus, 0, 0, 0, 0, 1, case.base_mva, status, g.p_max, g.p_min, 0, 0, 0, 0, 0, 0, ramp, 0, 0, 0, 0]
        lines.append("\t" + "\t".join(repr(float(c)) if isinstance(c, float) else str(c) for c in cols) + ";")
    lines += ["];", "mpc.branch = ["]
    for br in case.branches:
        rate = 0.0 if br.flow_limit is None else br.flow_limit
        status = 1 if br.in_service else 0
        cols = [br.from_bus, br.to_bus, 0.0, br.reactance, 0.0, rate, rate, rate, 0, 0, status, -360, 360]
        lines.append("\t" + "\t".join(repr(c) if isinstance(c, float) else str(c) for c in cols) + ";")
    lines += ["];", "mpc.gencost = ["]
    for i, g in enumerate(case.generators):
        if costs is not None:
            coeffs = costs[i]
            row = [2, g.startup_cost, 0.0, len(coeffs), *coeffs]
        else:
            pts = [g.p_min, 0.0]
            acc = 0.0
            lo = g.p_min
            for seg in g.cost_curve.segments:
                acc += (seg.breakpoint_mw - lo) * seg.slope
                pts += [seg.breakpoint_mw, acc]
                lo = seg.breakpoint_mw
            pts = [p if k % 2 == 0 else p + g.no_load_cost for k, p in enumerate(pts)]
            row = [1, g.startup_cost, 0.0, len(pts) // 2, *pts]
        lines.append("\t" + "\t".join(repr(float(c)) if not isinstance(c, int) else str(c) for c in row) + ";")
    lines += ["];", ""]
    return "\n".join(lines)


# -- profiles ------------------------------------------------------------------


def read_profile_csv(source: str) -> dict[int, np.ndarray]:
    """Parse an ``interval,bus_<id>,...`` CSV into ``{bus_id: series}``."""
    reader = csv.reader(io.StringIO(source))
    try:
        header = next(reader)
    except StopIteration:
        raise CaseError("syntax", "empty profile file", "line 1") from None
    if not header or header[0].strip() != "interval":
        raise CaseError("schema", "first column must be 'interval'", "line 1")
    bus_ids = []
    for col, name in enumerate(header[1:], start=2):
        m = re.fullmatch(r"bus_(\d+)", name.strip())
        if not m:
            raise CaseError("schema", f"column {name!r} is not of the form bus_<id>", f"line 1, column {col}")
        bus_ids.append(int(m.group(1)))
    values = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CaseError("schema", f"expected {len(header)} fields, got {len(row)}", f"line {lineno}")
        try:
            if int(row[0]) != len(values):
                raise CaseError("schema", f"interval {row[0]} out of sequence", f"line {lineno}")
            values.append([float(v) for v in row[1:]])
        except ValueError:
            raise CaseError("syntax", "non-numeric field", f"line {lineno}") from None
    data = np.array(values, dtype=float).reshape(len(values), len(bus_ids))
    return {b: data[:, j].copy() for j, b in enumerate(bus_ids)}


def write_profile_csv(series: dict[int, np.ndarray]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    ids = sorted(series)
    writer.writerow(["interval"] + [f"bus_{b}" for b in ids])
    n = len(next(iter(series.values()))) if ids else 0
    for t in range(n):
        writer.writerow([t] + [repr(float(series[b][t])) for b in ids])
    return buf.getvalue()


def with_profiles(case: GridCase, demand: dict[int, np.ndarray] | None = None, renewables: dict[int, np.ndarray] | None = None) -> GridCase:
    """Return a copy of ``case`` with demand and/or renewable profiles replaced."""
    from dataclasses import replace

    new = case
    if demand is not None:
        new = replace(new, demand=DemandProfile.from_mapping(demand))
    if renewables is not None:
        new = replace(new, renewables=tuple(Renewable(b, s) for b, s in renewables.items()))
    return validate_case(new)


def load_case(path: str | Path, fmt: str = "native", n_segments: int = DEFAULT_SEGMENTS) -> GridCase:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CaseError("io", f"cannot read {path}: {exc.strerror}", str(path)) from None
    if fmt == "native":
        return parse_case(text)
    if fmt == "mcase":
        return parse_mcase(text, n_segments=n_segments)
    raise CaseError("schema", f"unknown case format {fmt!r}")
