"""Day-ahead unit commitment, real-time economic dispatch and nodal prices.

Both problems share one day program: 24 hourly blocks linked by ramp
limits. SCUC treats commitments as binaries; SCED is the same program with
the commitments fixed, and its row duals give the prices::

    LMP[n, t] = lambda[t] + sum_l PTDF[l, n] * (mu_lower[l, t] - mu_upper[l, t])
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .bnb import MixedBinaryProgram, solve_mbp
from .case import HOURS_PER_DAY, DemandProfile, GridCase
from .io import serialize_case
from .lp import EQ, GE, LE, LinearProgram, LpSolution, solve_lp
from .network import NetworkModel, build_network

T = HOURS_PER_DAY

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
FAILED = "failed_to_converge"


@dataclass(frozen=True)
class SolverSettings:
    gap: float = 1e-6
    node_cap: int = 1_000_000
    lp_method: str = "highs"


@dataclass(frozen=True, eq=False)
class InitialState:
    """Generator state at the hour before the day starts (one entry per in-service generator)."""

    output: np.ndarray
    committed: np.ndarray


@dataclass(frozen=True, eq=False)
class CommitmentSchedule:
    day: int
    on_off: np.ndarray  # [generator, hour] over all case generators; out-of-service rows are 0
    status: str = OPTIMAL
    objective: float = math.nan
    nodes: int = 0

    @property
    def startups(self) -> np.ndarray:
        prev = np.concatenate([self.on_off[:, :1], self.on_off[:, :-1]], axis=1)
        return np.maximum(self.on_off - prev, 0)


@dataclass(eq=False)
class DispatchResult:
    day: int
    feasibility: str
    generation: np.ndarray | None = None  # [generator, hour]
    renewable: np.ndarray | None = None  # [renewable, hour]
    system_lambda: np.ndarray | None = None  # [hour]
    mu_upper: np.ndarray | None = None  # [line, hour], >= 0
    mu_lower: np.ndarray | None = None
    lmp: np.ndarray | None = None  # [bus, hour]
    flows: np.ndarray | None = None  # [line, hour]
    objective: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.feasibility == OPTIMAL


@dataclass(eq=False)
class PriceRecord:
    """Nodal prices over a horizon; absent (infeasible/failed) intervals are NaN."""

    bus_ids: tuple[int, ...]
    days: tuple[int, ...]
    lmp: np.ndarray  # [bus, interval]
    statuses: tuple[str, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def n_intervals(self) -> int:
        return self.lmp.shape[1]

    @property
    def feasible_mask(self) -> np.ndarray:
        return np.repeat(np.array([s == OPTIMAL for s in self.statuses], dtype=bool), T)

    def count(self, status: str) -> int:
        return sum(1 for s in self.statuses if s == status)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PriceRecord):
            return NotImplemented
        return (
            self.bus_ids == other.bus_ids
            and self.days == other.days
            and self.statuses == other.statuses
            and self.metadata == other.metadata
            and np.array_equal(self.lmp, other.lmp, equal_nan=True)
        )


# -- day program -----------------------------------------------------------------


@dataclass(eq=False)
class DayProgram:
    lp: LinearProgram
    gen_index: np.ndarray  # case generator index per program generator
    u: np.ndarray  # [g, t] variable indices
    s: np.ndarray
    seg: np.ndarray  # [q, t]
    seg_gen: np.ndarray  # program generator owning segment q
    ren: np.ndarray  # [w, t]
    balance_rows: np.ndarray  # [t]
    line_up_rows: np.ndarray  # [l, t]
    line_dn_rows: np.ndarray
    p_min: np.ndarray


def day_demand(case: GridCase, day: int) -> np.ndarray:
    return case.demand_matrix()[:, day * T : (day + 1) * T]


def build_day_program(
    model: NetworkModel,
    case: GridCase,
    day: int,
    initial: InitialState | None = None,
    demand: np.ndarray | None = None,
) -> DayProgram:
    """Assemble the 24-hour program for ``day``.

    ``demand`` overrides the case's ``[bus, hour]`` demand for the day.
    """
    if not 0 <= day < case.n_days:
        raise ValueError(f"day {day} outside the profile ({case.n_days} days)")
    if demand is None:
        demand = day_demand(case, day)
    gen_index = np.array([i for i, g in enumerate(case.generators) if g.in_service], dtype=int)
    gens = [case.generators[i] for i in gen_index]
    G, W, L = len(gens), len(case.renewables), model.n_lines
    bus_pos = {b: i for i, b in enumerate(model.bus_index)}

    p_min = np.array([g.p_min for g in gens], dtype=float)
    ramp = np.array([g.ramp_limit for g in gens], dtype=float)
    widths, slopes, seg_gen = [], [], []
    for k, g in enumerate(gens):
        widths.extend(g.cost_curve.widths(g.p_min))
        slopes.extend(g.cost_curve.slopes())
        seg_gen.extend([k] * len(g.cost_curve.segments))
    widths, slopes, seg_gen = np.array(widths), np.array(slopes), np.array(seg_gen, dtype=int)
    Q = len(widths)

    n_u = G * T
    u = np.arange(n_u).reshape(G, T)
    s = n_u + np.arange(n_u).reshape(G, T)
    seg = 2 * n_u + np.arange(Q * T).reshape(Q, T)
    ren = 2 * n_u + Q * T + np.arange(W * T).reshape(W, T)
    n_var = 2 * n_u + Q * T + W * T

    c = np.zeros(n_var)
    lo = np.zeros(n_var)
    hi = np.zeros(n_var)
    c[u] = np.array([g.no_load_cost for g in gens])[:, None]
    hi[u] = 1.0
    c[s] = np.array([g.startup_cost for g in gens])[:, None]
    hi[s] = 1.0
    c[seg] = slopes[:, None]
    hi[seg] = widths[:, None]
    if W:
        hi[ren] = case.renewable_matrix()[:, day * T : (day + 1) * T]

    rows, cols, vals, rhs, senses = [], [], [], [], []
    n_rows = 0

    def add_block(r, cidx, v, b, sense):
        nonlocal n_rows
        v = np.asarray(v, dtype=float).ravel()
        keep = v != 0.0
        rows.append(np.asarray(r).ravel()[keep] + n_rows)
        cols.append(np.asarray(cidx).ravel()[keep])
        vals.append(v[keep])
        b = np.asarray(b, dtype=float).ravel()
        rhs.append(b)
        senses.extend([sense] * len(b))
        start = n_rows
        n_rows += len(b)
        return np.arange(start, n_rows)

    # per-hour injection columns: u (scaled by p_min), segments, renewables
    inj_cols = np.concatenate([u, seg, ren], axis=0)  # [n_inj, T]
    inj_mult = np.concatenate([p_min, np.ones(Q), np.ones(W)])
    inj_bus = np.array(
        [bus_pos[g.bus] for g in gens]
        + [bus_pos[gens[k].bus] for k in seg_gen]
        + [bus_pos[r.bus] for r in case.renewables],
        dtype=int,
    )
    n_inj = len(inj_mult)

    # system balance
    r_idx = np.repeat(np.arange(T)[None, :], n_inj, axis=0)
    balance = add_block(r_idx, inj_cols, np.repeat(inj_mult[:, None], T, axis=1), demand.sum(axis=0), EQ)

    # monitored line limits
    line_up = line_dn = np.zeros((0, T), dtype=int)
    if L:
        coef = model.ptdf[:, inj_bus] * inj_mult[None, :]  # [L, n_inj]
        nz_l, nz_j = np.nonzero(coef)
        pd = model.ptdf @ demand  # [L, T]
        limits = model.line_limits[:, None]
        r_blk = (nz_l[:, None] * T + np.arange(T)[None, :])
        c_blk = inj_cols[nz_j]
        v_blk = np.repeat(coef[nz_l, nz_j][:, None], T, axis=1)
        line_up = add_block(r_blk, c_blk, v_blk, (limits + pd).ravel(), LE).reshape(L, T)
        line_dn = add_block(r_blk, c_blk, v_blk, (-limits + pd).ravel(), GE).reshape(L, T)

    # segment capacity tied to commitment: seg - width * u <= 0
    if Q:
        r_blk = np.arange(Q * T).reshape(Q, T)
        add_block(
            np.stack([r_blk, r_blk]),
            np.stack([seg, u[seg_gen]]),
            np.stack([np.ones((Q, T)), -np.repeat(widths[:, None], T, axis=1)]),
            np.zeros(Q * T),
            LE,
        )

    # startup indicator: s_t - u_t + u_{t-1} >= 0
    if G:
        r_blk = np.arange(G * (T - 1)).reshape(G, T - 1)
        add_block(
            np.stack([r_blk, r_blk, r_blk]),
            np.stack([s[:, 1:], u[:, 1:], u[:, :-1]]),
            np.stack([np.ones((G, T - 1)), -np.ones((G, T - 1)), np.ones((G, T - 1))]),
            np.zeros(G * (T - 1)),
            GE,
        )
        if initial is not None:
            r_blk = np.arange(G)
            add_block(np.stack([r_blk, r_blk]), np.stack([s[:, 0], u[:, 0]]), np.stack([np.ones(G), -np.ones(G)]), -initial.committed, GE)

    # ramping; rows are skipped for units that can swing their full range in an hour
    seg_sum = [np.flatnonzero(seg_gen == k) for k in range(G)]
    for k, g in enumerate(gens):
        if not math.isfinite(ramp[k]) or ramp[k] >= g.p_max:
            continue
        qs = seg[seg_sum[k]]  # [K, T]
        K = len(qs)
        allowance = ramp[k] + p_min[k]
        # up: p_min*u_t + sum seg_t - sum seg_{t-1} <= R + p_min
        r_blk = np.arange(T - 1)
        add_block(
            np.concatenate([r_blk[None, :], np.repeat(r_blk[None, :], K, 0), np.repeat(r_blk[None, :], K, 0)]),
            np.concatenate([u[k, 1:][None, :], qs[:, 1:], qs[:, :-1]]),
            np.concatenate([np.full((1, T - 1), p_min[k]), np.ones((K, T - 1)), -np.ones((K, T - 1))]),
            np.full(T - 1, allowance),
            LE,
        )
        # down: p_min*u_{t-1} + sum seg_{t-1} - sum seg_t <= R + p_min
        add_block(
            np.concatenate([r_blk[None, :], np.repeat(r_blk[None, :], K, 0), np.repeat(r_blk[None, :], K, 0)]),
            np.concatenate([u[k, :-1][None, :], qs[:, :-1], qs[:, 1:]]),
            np.concatenate([np.full((1, T - 1), p_min[k]), np.ones((K, T - 1)), -np.ones((K, T - 1))]),
            np.full(T - 1, allowance),
            LE,
        )
        if initial is not None:
            prev_p, prev_u = initial.output[k], initial.committed[k]
            zero = np.zeros(1, dtype=int)
            add_block(
                np.concatenate([zero, np.zeros(K, dtype=int)]),
                np.concatenate([[u[k, 0]], qs[:, 0]]),
                np.concatenate([[p_min[k]], np.ones(K)]),
                [ramp[k] + p_min[k] * (1.0 - prev_u) + prev_p],
                LE,
            )
            if K:
                add_block(np.zeros(K, dtype=int), qs[:, 0], -np.ones(K), [allowance - prev_p], LE)

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_rows, n_var)
    )
    lp = LinearProgram(c, A, tuple(senses), np.concatenate(rhs), lo, hi)
    return DayProgram(lp, gen_index, u, s, seg, seg_gen, ren, balance, line_up, line_dn, p_min)


# -- SCUC / SCED --------------------------------------------------------------------


def solve_scuc(
    model: NetworkModel,
    case: GridCase,
    day: int,
    initial: InitialState | None = None,
    settings: SolverSettings = SolverSettings(),
    demand: np.ndarray | None = None,
) -> CommitmentSchedule:
    prog = build_day_program(model, case, day, initial, demand)
    result = solve_mbp(MixedBinaryProgram(prog.lp, tuple(prog.u.ravel())), settings.gap, settings.node_cap, settings.lp_method)
    on_off = np.zeros((len(case.generators), T), dtype=int)
    status = result.status
    if status == "unbounded":
        status = INFEASIBLE
    if result.has_incumbent:
        on_off[prog.gen_index] = np.round(result.solution.x[prog.u]).astype(int)
    if status != OPTIMAL:
        # infeasible days carry no usable commitment; failed days keep the incumbent for inspection
        return CommitmentSchedule(day, on_off, status, result.objective_value, result.nodes)
    return CommitmentSchedule(day, on_off, OPTIMAL, result.objective_value, result.nodes)


def fix_commitment(prog: DayProgram, schedule: CommitmentSchedule) -> LinearProgram:
    lo, hi = prog.lp.lo.copy(), prog.lp.hi.copy()
    committed = schedule.on_off[prog.gen_index].astype(float)
    lo[prog.u] = committed
    hi[prog.u] = committed
    return prog.lp.with_bounds(lo, hi)


def solve_sced(
    model: NetworkModel,
    case: GridCase,
    schedule: CommitmentSchedule,
    day: int,
    initial: InitialState | None = None,
    settings: SolverSettings = SolverSettings(),
    demand: np.ndarray | None = None,
) -> DispatchResult:
    if schedule.day != day:
        raise ValueError(f"schedule is for day {schedule.day}, not {day}")
    if schedule.status != OPTIMAL:
        return DispatchResult(day, schedule.status)
    if demand is None:
        demand = day_demand(case, day)
    prog = build_day_program(model, case, day, initial, demand)
    sol = solve_lp(fix_commitment(prog, schedule), settings.lp_method)
    if not sol.optimal:
        return DispatchResult(day, INFEASIBLE)
    return extract_dispatch(model, case, prog, sol, day, demand)


def extract_dispatch(model: NetworkModel, case: GridCase, prog: DayProgram, sol: LpSolution, day: int, demand: np.ndarray) -> DispatchResult:
    x, y = sol.x, sol.duals
    n_gen = len(case.generators)
    gen = np.zeros((n_gen, T))
    committed = x[prog.u]
    above = np.zeros_like(committed)
    np.add.at(above, prog.seg_gen, x[prog.seg])
    gen[prog.gen_index] = prog.p_min[:, None] * committed + above
    ren = x[prog.ren] if prog.ren.size else np.zeros((0, T))

    lam = y[prog.balance_rows]
    if model.n_lines:
        mu_up = -y[prog.line_up_rows]
        mu_dn = y[prog.line_dn_rows]
    else:
        mu_up = mu_dn = np.zeros((0, T))
    lmp = lam[None, :] + model.ptdf.T @ (mu_dn - mu_up)

    inj = -demand.copy()
    bus_pos = {b: i for i, b in enumerate(model.bus_index)}
    for i, g in enumerate(case.generators):
        inj[bus_pos[g.bus]] += gen[i]
    for w, r in enumerate(case.renewables):
        inj[bus_pos[r.bus]] += ren[w]
    flows = model.ptdf @ inj
    return DispatchResult(day, OPTIMAL, gen, ren, lam, mu_up, mu_dn, lmp, flows, sol.objective_value)


def next_initial(case: GridCase, schedule: CommitmentSchedule, dispatch: DispatchResult) -> InitialState | None:
    """Hour-23 state handed to the next day; ``None`` (free start) after a failed day."""
    if not dispatch.optimal:
        return None
    live = [i for i, g in enumerate(case.generators) if g.in_service]
    return InitialState(dispatch.generation[live, -1].copy(), schedule.on_off[live, -1].astype(float))


def simulate_day(
    model: NetworkModel,
    case: GridCase,
    day: int,
    initial: InitialState | None = None,
    settings: SolverSettings = SolverSettings(),
    day_ahead_demand: np.ndarray | None = None,
) -> tuple[CommitmentSchedule, DispatchResult]:
    schedule = solve_scuc(model, case, day, initial, settings, day_ahead_demand)
    return schedule, solve_sced(model, case, schedule, day, initial, settings)


# -- horizon -----------------------------------------------------------------------------


def case_hash(case: GridCase) -> str:
    return hashlib.sha256(serialize_case(case).encode()).hexdigest()


def run_horizon(
    case: GridCase,
    scenario=None,
    days: range | None = None,
    settings: SolverSettings = SolverSettings(),
    model: NetworkModel | None = None,
    forecast: Callable[[GridCase, int], np.ndarray] | None = None,
    keep_dispatch: bool = False,
    seed: int | None = None,
):
    """SCUC then SCED for each day; returns a :class:`PriceRecord`.

    ``scenario`` (a :class:`~gridflex.mining.MiningScenario`) is injected
    before solving; an empty scenario is the same as none. ``forecast(case, day)`` may supply a day-ahead
    ``[bus, hour]`` demand for the commitment step; by default the realized
    profile is used. With ``keep_dispatch`` the per-day results are returned
    as a second value.
    """
    label = None
    if scenario is not None and not scenario.empty:
        from .mining import inject

        case = inject(case, scenario)
        label = scenario.label
    if days is None:
        days = range(case.n_days)
    if days.start < 0 or days.stop > case.n_days:
        raise ValueError(f"days {days.start}..{days.stop - 1} outside the {case.n_days}-day profile")
    if model is None:
        model = build_network(case)

    lmp = np.full((model.n_buses, T * len(days)), np.nan)
    statuses, dispatches = [], []
    initial = None
    for k, day in enumerate(days):
        da = forecast(case, day) if forecast is not None else None
        schedule, result = simulate_day(model, case, day, initial, settings, da)
        statuses.append(result.feasibility)
        if result.optimal:
            lmp[:, k * T : (k + 1) * T] = result.lmp
        initial = next_initial(case, schedule, result)
        if keep_dispatch:
            dispatches.append((schedule, result))
    meta = {
        "scenario": label,
        "seed": seed,
        "case_hash": case_hash(case),
        "reference_bus": model.reference_bus,
        "settings": {"gap": settings.gap, "node_cap": settings.node_cap, "lp_method": settings.lp_method},
    }
    record = PriceRecord(tuple(model.bus_index), tuple(days), lmp, tuple(statuses), meta)
    return (record, dispatches) if keep_dispatch else record


# -- export ------------------------------------------------------------------------------


def price_record_csv(record: PriceRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["interval", "bus_id", "lmp"])
    for t in range(record.n_intervals):
        for i, b in enumerate(record.bus_ids):
            v = record.lmp[i, t]
            w.writerow([t, b, "" if math.isnan(v) else repr(float(v))])
    return buf.getvalue()


def price_record_sidecar(record: PriceRecord) -> str:
    doc = {
        "bus_ids": list(record.bus_ids),
        "days": list(record.days),
        "statuses": list(record.statuses),
        "failed_days": [d for d, s in zip(record.days, record.statuses) if s == FAILED],
        "infeasible_days": [d for d, s in zip(record.days, record.statuses) if s == INFEASIBLE],
        "metadata": record.metadata,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def read_price_record(csv_text: str, sidecar_text: str) -> PriceRecord:
    side = json.loads(sidecar_text)
    bus_ids = tuple(int(b) for b in side["bus_ids"])
    pos = {b: i for i, b in enumerate(bus_ids)}
    n = T * len(side["days"])
    lmp = np.full((len(bus_ids), n), np.nan)
    reader = csv.reader(io.StringIO(csv_text))
    header = next(reader)
    if header != ["interval", "bus_id", "lmp"]:
        raise ValueError("price record CSV must have header interval,bus_id,lmp")
    for row in reader:
        if row and row[2] != "":
            lmp[pos[int(row[1])], int(row[0])] = float(row[2])
    return PriceRecord(bus_ids, tuple(side["days"]), lmp, tuple(side["statuses"]), side.get("metadata", {}))


def with_demand(case: GridCase, demand: np.ndarray) -> GridCase:
    """Copy of ``case`` with a full ``[bus, interval]`` demand matrix."""
    return replace(case, demand=DemandProfile.from_mapping({b: demand[i] for i, b in enumerate(case.bus_ids)}))
