"""Demand-response economics for a mining facility.

A facility of ``C`` MW splits its capacity over demand-response programs.
Enrolling one MW in program ``i`` earns ``revenue_i(t)`` every interval and
forgoes the net mining reward ``r(t)`` whenever the program deploys it
(fraction ``deployment_i(t)``). The expected profit of a portfolio ``c`` is

    sum_i sum_t [c_i * revenue_i(t) - c_i * deployment_i(t) * r(t)]

which is linear in ``c`` over the simplex ``c >= 0, sum(c) <= C``, so the
optimum is either nothing or all of ``C`` in the best program.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lp import LE, LpBuilder, solve_lp
from .market import PriceRecord

HOURS_PER_YEAR = 8760
RESERVE_RECORD = "reserve_record"
PRICE_DRIVEN = "price_driven"
PERCENTILES = (2.5, 97.5)


def _series(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MiningEconomics:
    """Per-interval coin price ($/BTC), difficulty (MWh/BTC) and electricity price ($/MWh)."""

    btc_price: np.ndarray
    difficulty: np.ndarray
    elec_price: np.ndarray

    def __post_init__(self):
        for name in ("btc_price", "difficulty", "elec_price"):
            object.__setattr__(self, name, _series(getattr(self, name), name))
        n = len(self.btc_price)
        if len(self.difficulty) != n or len(self.elec_price) != n:
            raise ValueError("economics series lengths differ")
        if np.any(self.difficulty <= 0):
            raise ValueError("difficulty must be positive")

    @property
    def horizon(self) -> int:
        return len(self.btc_price)

    def mining_revenue(self) -> np.ndarray:
        return self.btc_price / self.difficulty

    def net_reward_series(self) -> np.ndarray:
        return self.btc_price / self.difficulty - self.elec_price

    def restrict(self, mask: np.ndarray) -> "MiningEconomics":
        return MiningEconomics(self.btc_price[mask], self.difficulty[mask], self.elec_price[mask])


def net_reward(econ: MiningEconomics, t: int) -> float:
    if not 0 <= t < econ.horizon:
        raise IndexError(f"interval {t} outside the {econ.horizon}-interval horizon")
    return float(econ.btc_price[t] / econ.difficulty[t] - econ.elec_price[t])


@dataclass(frozen=True, eq=False)
class DrProgram:
    """A demand-response program.

    ``reserve_record`` programs carry fixed revenue and deployment series.
    ``price_driven`` programs carry a threshold; :func:`price_driven_program`
    fills in their series from a price record.
    """

    name: str
    kind: str = RESERVE_RECORD
    revenue: np.ndarray | None = None
    deployment: np.ndarray | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in (RESERVE_RECORD, PRICE_DRIVEN):
            raise ValueError(f"unknown program kind {self.kind!r}")
        if self.kind == PRICE_DRIVEN and self.threshold is None:
            raise ValueError(f"price-driven program {self.name!r} needs a threshold")
        if (self.revenue is None) != (self.deployment is None):
            raise ValueError(f"program {self.name!r}: give both revenue and deployment or neither")
        if self.revenue is not None:
            object.__setattr__(self, "revenue", _series(self.revenue, "revenue"))
            object.__setattr__(self, "deployment", _series(self.deployment, "deployment"))
            if len(self.revenue) != len(self.deployment):
                raise ValueError(f"program {self.name!r}: revenue and deployment lengths differ")
            if np.any(self.deployment < 0) or np.any(self.deployment > 1):
                raise ValueError(f"program {self.name!r}: deployment must lie in [0, 1]")

    @property
    def materialized(self) -> bool:
        return self.revenue is not None

    @property
    def horizon(self) -> int:
        return 0 if self.revenue is None else len(self.revenue)

    def restrict(self, mask: np.ndarray) -> "DrProgram":
        if not self.materialized:
            return self
        return DrProgram(self.name, self.kind, self.revenue[mask], self.deployment[mask], self.threshold)


# -- portfolio ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PortfolioSolution:
    capacities: np.ndarray
    expected_profit: float
    binding: int | None
    scores: np.ndarray

    def to_document(self, programs: Sequence[DrProgram] | None = None) -> dict:
        names = [p.name for p in programs] if programs else None
        return {
            "capacities_mw": [float(c) for c in self.capacities],
            "programs": names,
            "expected_profit": float(self.expected_profit),
            "binding": self.binding if self.binding is None or names is None else names[self.binding],
            "scores": [float(s) for s in self.scores],
        }


def _check_inputs(programs: Sequence[DrProgram], econ: MiningEconomics, capacity: float, horizon: int | None):
    if not programs:
        raise ValueError("no demand-response programs given")
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    T = econ.horizon if horizon is None else int(horizon)
    if econ.horizon != T:
        raise ValueError(f"economics horizon {econ.horizon} != {T}")
    for p in programs:
        if not p.materialized:
            raise ValueError(f"program {p.name!r} has no revenue/deployment series")
        if p.horizon != T:
            raise ValueError(f"program {p.name!r} horizon {p.horizon} != {T}")
    return T


def portfolio_objective(programs: Sequence[DrProgram], econ: MiningEconomics, capacities) -> float:
    """The double sum over programs and intervals, exactly rounded."""
    r = econ.net_reward_series()
    terms = []
    for c, p in zip(capacities, programs):
        c = float(c)
        if c != 0.0:
            terms.extend(c * p.revenue)
            terms.extend(-(c * p.deployment * r))
    return math.fsum(terms)


def program_scores(programs: Sequence[DrProgram], econ: MiningEconomics) -> np.ndarray:
    r = econ.net_reward_series()
    return np.array([math.fsum([*p.revenue, *(-(p.deployment * r))]) for p in programs])


def solve_portfolio(
    programs: Sequence[DrProgram],
    econ: MiningEconomics,
    capacity: float,
    horizon: int | None = None,
) -> PortfolioSolution:
    """Best split of ``capacity`` MW over ``programs`` (linear program, dense simplex).

    Ties between equal scores go to the lowest program index: Bland's rule
    only brings in a column whose reduced cost is strictly negative.
    """
    _check_inputs(programs, econ, capacity, horizon)
    scores = program_scores(programs, econ)
    lp = LpBuilder()
    cols = [lp.add_var(f"c{i}", 0.0, math.inf, -float(s)) for i, s in enumerate(scores)]
    lp.add_row("capacity", cols, [1.0] * len(cols), LE, float(capacity))
    sol = solve_lp(lp.build(), "simplex")
    if not sol.optimal:
        raise RuntimeError(f"portfolio LP ended {sol.status}")
    x = np.where(np.abs(sol.x) <= 1e-9 * capacity, 0.0, sol.x)
    chosen = np.flatnonzero(x > 0)
    binding = int(chosen[0]) if chosen.size == 1 and math.isclose(x[chosen[0]], capacity, rel_tol=1e-12) else None
    if binding is not None:
        x = np.zeros(len(programs))
        x[binding] = float(capacity)
    x.setflags(write=False)
    return PortfolioSolution(x, portfolio_objective(programs, econ, x), binding, scores)


def vertex_oracle(
    programs: Sequence[DrProgram],
    econ: MiningEconomics,
    capacity: float,
    horizon: int | None = None,
) -> PortfolioSolution:
    """Evaluate the objective at 0 and at each ``capacity * e_i``; keep the best (lowest index on ties)."""
    _check_inputs(programs, econ, capacity, horizon)
    n = len(programs)
    best_x, best_val, best_i = np.zeros(n), 0.0, None
    for i in range(n):
        x = np.zeros(n)
        x[i] = float(capacity)
        terms = []
        for t in range(econ.horizon):
            r_t = econ.btc_price[t] / econ.difficulty[t] - econ.elec_price[t]
            terms.append(x[i] * programs[i].revenue[t])
            terms.append(-(x[i] * programs[i].deployment[t] * r_t))
        val = math.fsum(terms)
        if val > best_val:
            best_x, best_val, best_i = x, val, i
    best_x.setflags(write=False)
    return PortfolioSolution(best_x, best_val, best_i, program_scores(programs, econ))


# -- price-driven deployment and Monte-Carlo profit ---------------------------------


def feasible_average_lmp(record: PriceRecord) -> tuple[np.ndarray, np.ndarray]:
    """Bus-mean LMP over feasible intervals, plus the feasibility mask."""
    mask = record.feasible_mask
    if not mask.any():
        raise ValueError("price record has no feasible interval")
    return record.lmp[:, mask].mean(axis=0), mask


def price_driven_deployment(record: PriceRecord, threshold: float) -> np.ndarray:
    """1 where the bus-average LMP exceeds ``threshold``; feasible intervals only."""
    avg, _ = feasible_average_lmp(record)
    return (avg > threshold).astype(float)


def price_driven_program(record: PriceRecord, threshold: float, name: str = "price-driven") -> DrProgram:
    """Availability paid at the average LMP, deployed above ``threshold`` (feasible intervals)."""
    avg, _ = feasible_average_lmp(record)
    return DrProgram(name, PRICE_DRIVEN, avg, (avg > threshold).astype(float), float(threshold))


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise on the average-LMP series.

    ``kind`` is ``none``, ``gaussian`` (zero mean, ``sigma``) or ``bootstrap``
    (residuals drawn with replacement from ``residuals``).
    """

    kind: str = "none"
    sigma: float = 0.0
    residuals: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "bootstrap"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("gaussian noise needs a finite sigma >= 0")
        if self.kind == "bootstrap" and not self.residuals:
            raise ValueError("bootstrap noise needs residuals")
        object.__setattr__(self, "residuals", tuple(float(r) for r in self.residuals))

    @classmethod
    def from_history(cls, prices: Sequence[float]) -> "NoiseSpec":
        """Bootstrap from a historical price series: residuals about its mean."""
        p = np.asarray(prices, dtype=float)
        p = p[np.isfinite(p)]
        if not p.size:
            raise ValueError("historical price series is empty")
        return cls("bootstrap", residuals=tuple(p - p.mean()))

    def to_document(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "gaussian":
            doc["sigma"] = self.sigma
        if self.kind == "bootstrap":
            doc["n_residuals"] = len(self.residuals)
        return doc

    def draws(self, n_draws: int, n: int, seed: int) -> np.ndarray:
        """``[n_draws, n]`` noise; draw ``k`` uses its own stream keyed by ``(seed, k)``."""
        out = np.zeros((n_draws, n))
        if self.kind == "none":
            return out
        res = np.asarray(self.residuals)
        for k in range(n_draws):
            rng = np.random.default_rng([seed, k])
            if self.kind == "gaussian":
                out[k] = rng.normal(0.0, self.sigma, n)
            else:
                out[k] = res[rng.integers(0, len(res), n)]
        return out


@dataclass(frozen=True, eq=False)
class ProfitReport:
    """Annual per-MW profit; one entry per threshold (a single entry for fixed programs)."""

    program: str
    thresholds: np.ndarray | None
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    draws: int
    seed: int
    annualization: float
    noise: dict

    def to_document(self) -> dict:
        return {
            "program": self.program,
            "thresholds": None if self.thresholds is None else [float(x) for x in self.thresholds],
            "mean": [float(x) for x in self.mean],
            "lower": [float(x) for x in self.lower],
            "upper": [float(x) for x in self.upper],
            "draws": self.draws,
            "seed": self.seed,
            "annualization_factor": self.annualization,
            "bounds_percentiles": list(PERCENTILES),
            "noise": self.noise,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True) + "\n"


def _bounds(profits: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # profits: [draws, k]
    mean = profits.mean(axis=0)
    # identical draws (no noise): report that value exactly, not a rounded average
    mean = np.where(np.all(profits == profits[:1], axis=0), profits[0], mean)
    lo, hi = np.percentile(profits, PERCENTILES, axis=0)
    return mean, np.minimum(lo, mean), np.maximum(hi, mean)


def _align(econ: MiningEconomics, record: PriceRecord) -> tuple[np.ndarray, np.ndarray, MiningEconomics]:
    avg, mask = feasible_average_lmp(record)
    if econ.horizon != record.n_intervals:
        raise ValueError(f"economics horizon {econ.horizon} != price record {record.n_intervals} intervals")
    return avg, mask, econ.restrict(mask)


def threshold_sweep(
    econ: MiningEconomics,
    record: PriceRecord,
    thresholds: Sequence[float],
    draws: int = 1000,
    seed: int = 0,
    noise: NoiseSpec = NoiseSpec(),
) -> ProfitReport:
    """Price-driven program profit at each threshold.

    Every threshold sees the same noise draws, so the curves are comparable.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    th = np.array(thresholds, dtype=float)
    if th.size == 0 or np.any(np.diff(th) < 0):
        raise ValueError("thresholds must be a non-empty ascending list")
    avg, _, econ_f = _align(econ, record)
    T = len(avg)
    r = econ_f.net_reward_series()
    prices = avg[None, :] + noise.draws(draws, T, seed)  # [draws, T]
    revenue = prices.sum(axis=1)
    factor = HOURS_PER_YEAR / T
    profits = np.empty((draws, th.size))
    for j, thr in enumerate(th):
        loss = ((prices > thr) * r[None, :]).sum(axis=1)
        profits[:, j] = (revenue - loss) * factor
    mean, lower, upper = _bounds(profits)
    return ProfitReport(PRICE_DRIVEN, th, mean, lower, upper, draws, seed, factor, noise.to_document())


def annual_profit(
    program: DrProgram,
    econ: MiningEconomics,
    record: PriceRecord,
    draws: int = 1000,
    seed: int = 0,
    noise: NoiseSpec = NoiseSpec(),
) -> ProfitReport:
    """Annualized per-MW profit of one program over the record's feasible intervals.

    Price-driven programs are re-derived from the noisy average LMP in each
    draw; reserve programs keep their recorded revenue and deployment.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    if program.kind == PRICE_DRIVEN:
        rep = threshold_sweep(econ, record, [program.threshold], draws, seed, noise)
        return ProfitReport(program.name, rep.thresholds, rep.mean, rep.lower, rep.upper,
                            draws, seed, rep.annualization, rep.noise)
    _, mask, econ_f = _align(econ, record)
    if program.horizon != record.n_intervals:
        raise ValueError(f"program {program.name!r} horizon {program.horizon} != {record.n_intervals}")
    prog = program.restrict(mask)
    T = int(mask.sum())
    factor = HOURS_PER_YEAR / T
    value = math.fsum(prog.revenue - prog.deployment * econ_f.net_reward_series()) * factor
    profits = np.full((draws, 1), value)
    mean, lower, upper = _bounds(profits)
    return ProfitReport(program.name, None, mean, lower, upper, draws, seed, factor, noise.to_document())


def synthetic_reserve(name: str, price: float, n_intervals: int, frequency: float, seed: int = 0) -> DrProgram:
    """Constant availability price with deployments drawn at ``frequency`` per interval."""
    if not 0 <= frequency <= 1:
        raise ValueError("frequency must lie in [0, 1]")
    rng = np.random.default_rng([seed, n_intervals])
    deployed = (rng.random(n_intervals) < frequency).astype(float)
    return DrProgram(name, RESERVE_RECORD, np.full(n_intervals, float(price)), deployed)


# -- CSV I/O ------------------------------------------------------------------------


def _read_columns(text: str, columns: Sequence[str], what: str) -> dict[str, np.ndarray]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError(f"{what}: empty file") from None
    if header != ["interval", *columns]:
        raise ValueError(f"{what}: expected header {['interval', *columns]}, got {header}")
    rows = [r for r in reader if r and any(x.strip() for x in r)]
    data = {c: np.empty(len(rows)) for c in columns}
    for k, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{what}: line {k + 2}: expected {len(header)} fields")
        if int(row[0]) != k:
            raise ValueError(f"{what}: line {k + 2}: intervals must run 0, 1, 2, ...")
        for c, v in zip(columns, row[1:]):
            data[c][k] = float(v)
    return data


def read_economics_csv(text: str) -> MiningEconomics:
    d = _read_columns(text, ["btc_usd", "difficulty_mwh_per_btc", "elec_price_usd_mwh"], "economics csv")
    return MiningEconomics(d["btc_usd"], d["difficulty_mwh_per_btc"], d["elec_price_usd_mwh"])


def write_economics_csv(econ: MiningEconomics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["interval", "btc_usd", "difficulty_mwh_per_btc", "elec_price_usd_mwh"])
    for t in range(econ.horizon):
        w.writerow([t, repr(float(econ.btc_price[t])), repr(float(econ.difficulty[t])), repr(float(econ.elec_price[t]))])
    return buf.getvalue()


def read_program_csv(text: str, name: str) -> DrProgram:
    d = _read_columns(text, ["revenue_usd_mwh", "deployment_frac"], f"program csv {name!r}")
    return DrProgram(name, RESERVE_RECORD, d["revenue_usd_mwh"], d["deployment_frac"])


def write_program_csv(program: DrProgram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["interval", "revenue_usd_mwh", "deployment_frac"])
    for t in range(program.horizon):
        w.writerow([t, repr(float(program.revenue[t])), repr(float(program.deployment[t]))])
    return buf.getvalue()


def read_price_history_csv(text: str) -> np.ndarray:
    """Historical prices as ``interval,price_usd_mwh``."""
    return _read_columns(text, ["price_usd_mwh"], "price history csv")["price_usd_mwh"]


def profit_csv(report: ProfitReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "mean", "lower", "upper"])
    th = report.thresholds if report.thresholds is not None else [math.nan]
    for j, t in enumerate(th):
        w.writerow(["" if math.isnan(t) else repr(float(t)), repr(float(report.mean[j])),
                    repr(float(report.lower[j])), repr(float(report.upper[j]))])
    return buf.getvalue()
