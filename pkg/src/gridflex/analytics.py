"""LMP statistics over a price record: bus averages, hour-of-day profiles,
county means and baseline-vs-scenario comparisons.

Infeasible intervals are absent (NaN) in the record and are left out of every
mean and deviation here; they never raise.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .case import HOURS_PER_DAY, GridCase
from .market import PriceRecord

PEAK_WINDOW = (15, 17)
STD_MODES = ("hourly", "samples")


class AnalyticsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LmpStats:
    """Summary statistics of one price record.

    ``avg_lmp`` is NaN on infeasible intervals. ``std_dev`` is the population
    deviation of the feasible ``avg_lmp`` values (``std_mode="hourly"``) or of
    every feasible bus-interval price (``"samples"``).
    """

    avg_lmp: np.ndarray
    hourly_lmp: np.ndarray
    overall_mean: float
    std_dev: float
    county_lmp: dict[str, np.ndarray]
    std_mode: str = "hourly"
    weighted: bool = False

    @property
    def n_intervals(self) -> int:
        return len(self.avg_lmp)

    def window_mean(self, start_h: int, end_h: int) -> float:
        """Mean of ``avg_lmp`` over hours ``start_h <= h < end_h`` of feasible days."""
        if not 0 <= start_h < end_h <= HOURS_PER_DAY:
            raise ValueError(f"bad hour window [{start_h}, {end_h})")
        hours = np.arange(self.n_intervals) % HOURS_PER_DAY
        sel = self.avg_lmp[(hours >= start_h) & (hours < end_h)]
        sel = sel[~np.isnan(sel)]
        return float(np.mean(sel)) if sel.size else math.nan

    def summary(self, peak_window: tuple[int, int] = PEAK_WINDOW) -> "TableRow":
        return TableRow(self.overall_mean, self.window_mean(*peak_window), self.std_dev)


@dataclass(frozen=True)
class TableRow:
    overall_mean: float
    peak_mean: float
    std_dev: float


@dataclass(frozen=True)
class ComparisonRow:
    baseline: TableRow
    scenario: TableRow
    overall_delta: float
    peak_delta: float
    std_delta: float
    nonuniform: bool


def _record_demand(record: PriceRecord, case: GridCase) -> np.ndarray:
    full = case.demand_matrix()
    index = {b: i for i, b in enumerate(case.bus_ids)}
    rows = [index[b] for b in record.bus_ids]
    cols = np.concatenate([np.arange(d * HOURS_PER_DAY, (d + 1) * HOURS_PER_DAY) for d in record.days])
    return full[np.ix_(rows, cols)]


def average_lmp(record: PriceRecord, weights: np.ndarray | None = None) -> np.ndarray:
    """Bus mean per interval; NaN where the interval is infeasible."""
    mask = record.feasible_mask
    out = np.full(record.n_intervals, np.nan)
    if not mask.any():
        return out
    lmp = record.lmp[:, mask]
    if weights is None:
        out[mask] = lmp.mean(axis=0)
    else:
        w = weights[:, mask]
        total = w.sum(axis=0)
        # intervals with no load fall back to the plain mean
        safe = np.where(total > 0, total, 1.0)
        out[mask] = np.where(total > 0, (w * lmp).sum(axis=0) / safe, lmp.mean(axis=0))
    return out


def compute_stats(record: PriceRecord, case: GridCase, weighted: bool = False, std_mode: str = "hourly") -> LmpStats:
    if std_mode not in STD_MODES:
        raise ValueError(f"std_mode must be one of {STD_MODES}")
    mask = record.feasible_mask
    if not mask.any():
        raise AnalyticsError("price record has no feasible interval")
    weights = _record_demand(record, case) if weighted else None
    avg = average_lmp(record, weights)
    feasible = avg[mask]
    overall = float(np.mean(feasible))
    if std_mode == "hourly":
        std = float(np.std(feasible))
    else:
        std = float(np.std(record.lmp[:, mask]))

    by_hour = avg.reshape(-1, HOURS_PER_DAY)
    hourly = np.full(HOURS_PER_DAY, np.nan)
    for h in range(HOURS_PER_DAY):
        col = by_hour[:, h]
        col = col[~np.isnan(col)]
        if col.size:
            hourly[h] = col.mean()

    counties = county_members(record, case)
    county_lmp = {}
    for name, rows in counties.items():
        series = np.full(record.n_intervals, np.nan)
        series[mask] = record.lmp[np.ix_(rows, np.flatnonzero(mask))].mean(axis=0)
        county_lmp[name] = series
    for arr in (avg, hourly, *county_lmp.values()):
        arr.setflags(write=False)
    return LmpStats(avg, hourly, overall, std, county_lmp, std_mode, weighted)


def county_members(record: PriceRecord, case: GridCase) -> dict[str, list[int]]:
    """Record row indices per county, counties sorted by name; unmapped buses skipped."""
    county_of = {b.id: b.county for b in case.buses}
    out: dict[str, list[int]] = {}
    for i, b in enumerate(record.bus_ids):
        name = county_of.get(b)
        if name is not None:
            out.setdefault(name, []).append(i)
    return dict(sorted(out.items()))


def county_table(record: PriceRecord, case: GridCase, interval: int) -> dict[str, float]:
    if not 0 <= interval < record.n_intervals:
        raise IndexError(f"interval {interval} outside the record")
    if not record.feasible_mask[interval]:
        raise AnalyticsError(f"interval {interval} is infeasible")
    col = record.lmp[:, interval]
    return {name: float(col[rows].mean()) for name, rows in county_members(record, case).items()}


def compare(baseline, scenario, peak_window: tuple[int, int] = PEAK_WINDOW) -> ComparisonRow:
    """Deltas of scenario over baseline; accepts :class:`LmpStats` or :class:`TableRow`."""
    if isinstance(baseline, LmpStats) and isinstance(scenario, LmpStats):
        if baseline.n_intervals != scenario.n_intervals:
            raise AnalyticsError(
                f"horizons differ: {baseline.n_intervals} vs {scenario.n_intervals} intervals"
            )
    base = baseline.summary(peak_window) if isinstance(baseline, LmpStats) else baseline
    scen = scenario.summary(peak_window) if isinstance(scenario, LmpStats) else scenario
    d_overall = scen.overall_mean - base.overall_mean
    d_peak = scen.peak_mean - base.peak_mean
    d_std = scen.std_dev - base.std_dev
    return ComparisonRow(base, scen, d_overall, d_peak, d_std, bool(d_peak > d_overall))


# -- CSV exports --------------------------------------------------------------------


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def stats_csv(stats: LmpStats) -> str:
    names = list(stats.county_lmp)
    rows = (
        [t, _fmt(stats.avg_lmp[t])] + [_fmt(stats.county_lmp[n][t]) for n in names]
        for t in range(stats.n_intervals)
    )
    return _csv(["interval", "avg_lmp"] + [f"county:{n}" for n in names], rows)


def hourly_csv(stats: LmpStats) -> str:
    return _csv(["hour", "lmp"], ([h, _fmt(v)] for h, v in enumerate(stats.hourly_lmp)))


def county_csv(table: dict[str, float]) -> str:
    return _csv(["county", "lmp"], ([n, _fmt(v)] for n, v in table.items()))


def comparison_csv(rows: dict[str, ComparisonRow]) -> str:
    header = [
        "setting", "overall_mean", "peak_mean", "std_dev",
        "delta_overall", "delta_peak", "delta_std", "nonuniform",
    ]
    out = []
    for label, r in rows.items():
        s = r.scenario
        out.append([
            label, _fmt(s.overall_mean), _fmt(s.peak_mean), _fmt(s.std_dev),
            _fmt(r.overall_delta), _fmt(r.peak_delta), _fmt(r.std_delta), int(r.nonuniform),
        ])
    return _csv(header, out)
