"""Command-line interface.

Every command takes ``--config <file.json>``; paths inside a config are
relative to the config file. A command writes its artifacts plus
``run_manifest.json`` into the output directory, and a manifest can be passed
back as ``--config`` to reproduce the run.

Exit status: 0 on success (at least one feasible day), 2 when every day
failed, 1 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics, economics, market
from .case import CaseError, GridCase, validate_case
from .io import DEFAULT_SEGMENTS, load_case, read_profile_csv, with_profiles
from .mining import MiningScenario, capacity_sweep, inject, monotonicity_violations

MANIFEST_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 1, 2

CONFIG_KEYS = {
    "case", "format", "segments", "profiles", "days", "output", "seed", "solver", "analytics",
    "scenario", "sweep", "economics", "programs", "price_record", "thresholds", "draws", "noise",
    "capacity_mw",
}


class ConfigError(Exception):
    pass


# -- small I/O helpers ----------------------------------------------------------------


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _load_json(path: Path, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _read_text(path: Path, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc.strerror}") from None


# -- configuration ------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Resolved run configuration (absolute paths, defaults filled in)."""

    case: Path | None = None
    format: str = "native"
    segments: int = DEFAULT_SEGMENTS
    profiles: dict = field(default_factory=dict)
    days: tuple[int, int] | None = None
    output: Path | None = None
    seed: int = 0
    solver: dict = field(default_factory=lambda: {"gap": 1e-6, "node_cap": 1_000_000, "lp_method": "highs"})
    analytics: dict = field(default_factory=lambda: {"peak_window": [15, 17], "weighted": False, "std_mode": "hourly"})
    scenario: Path | None = None
    sweep: Path | None = None
    economics: Path | None = None
    programs: list = field(default_factory=list)
    price_record: Path | None = None
    thresholds: list | None = None
    draws: int = 1000
    noise: dict = field(default_factory=lambda: {"kind": "none"})
    capacity_mw: float = 1.0

    def settings(self) -> market.SolverSettings:
        return market.SolverSettings(float(self.solver["gap"]), int(self.solver["node_cap"]), self.solver["lp_method"])

    def input_paths(self) -> list[Path]:
        paths = [self.case, *self.profiles.values(), self.scenario, self.sweep, self.economics]
        paths += [Path(p["path"]) for p in self.programs if "path" in p]
        if self.noise.get("path"):
            paths.append(Path(self.noise["path"]))
        if self.price_record is not None:
            paths += [self.price_record, self.price_record.with_suffix(".json")]
        return [p for p in paths if p is not None]

    def to_document(self) -> dict:
        """Everything that determines the artifacts (the output location does not)."""
        def s(p):
            return None if p is None else str(p)

        return {
            "case": s(self.case),
            "format": self.format,
            "segments": self.segments,
            "profiles": {k: str(v) for k, v in sorted(self.profiles.items())},
            "days": None if self.days is None else list(self.days),
            "seed": self.seed,
            "solver": dict(self.solver),
            "analytics": dict(self.analytics),
            "scenario": s(self.scenario),
            "sweep": s(self.sweep),
            "economics": s(self.economics),
            "programs": self.programs,
            "price_record": s(self.price_record),
            "thresholds": self.thresholds,
            "draws": self.draws,
            "noise": self.noise,
            "capacity_mw": self.capacity_mw,
        }


def _path(value, base: Path, key: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"config field {key!r} must be a path string")
    p = Path(value)
    return (p if p.is_absolute() else base / p).resolve()


def _existing(value, base: Path, key: str) -> Path:
    p = _path(value, base, key)
    if not p.exists():
        raise ConfigError(f"{key}: no such file: {p}")
    return p


def parse_config(doc: dict, base: Path) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    cfg = RunConfig()
    if doc.get("case") is not None:
        cfg.case = _existing(doc["case"], base, "case")
    cfg.format = doc.get("format", "native")
    if cfg.format not in ("native", "mcase"):
        raise ConfigError(f"format must be 'native' or 'mcase', not {cfg.format!r}")
    cfg.segments = int(doc.get("segments", DEFAULT_SEGMENTS))
    if cfg.segments < 1:
        raise ConfigError("segments must be >= 1")
    profiles = doc.get("profiles") or {}
    if not isinstance(profiles, dict) or set(profiles) - {"demand", "renewables"}:
        raise ConfigError("profiles must be an object with 'demand' and/or 'renewables'")
    cfg.profiles = {k: _existing(v, base, f"profiles.{k}") for k, v in profiles.items() if v is not None}
    if doc.get("days") is not None:
        days = doc["days"]
        if not (isinstance(days, list) and len(days) == 2 and all(isinstance(d, int) for d in days) and 0 <= days[0] <= days[1]):
            raise ConfigError("days must be [first, last] (inclusive, 0-based)")
        cfg.days = (days[0], days[1])
    if doc.get("output") is not None:
        cfg.output = _path(doc["output"], base, "output")
    cfg.seed = doc.get("seed", 0)
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    solver = doc.get("solver") or {}
    if set(solver) - {"gap", "node_cap", "lp_method"}:
        raise ConfigError(f"unknown solver field(s): {sorted(set(solver) - {'gap', 'node_cap', 'lp_method'})}")
    cfg.solver.update(solver)
    if not (float(cfg.solver["gap"]) >= 0 and int(cfg.solver["node_cap"]) >= 1 and cfg.solver["lp_method"] in ("highs", "simplex")):
        raise ConfigError("solver: need gap >= 0, node_cap >= 1, lp_method 'highs' or 'simplex'")
    an = doc.get("analytics") or {}
    if set(an) - {"peak_window", "weighted", "std_mode"}:
        raise ConfigError(f"unknown analytics field(s): {sorted(set(an) - {'peak_window', 'weighted', 'std_mode'})}")
    cfg.analytics.update(an)
    pw = cfg.analytics["peak_window"]
    if not (isinstance(pw, list) and len(pw) == 2 and 0 <= pw[0] < pw[1] <= 24):
        raise ConfigError("analytics.peak_window must be [start_hour, end_hour) within 0..24")
    if cfg.analytics["std_mode"] not in analytics.STD_MODES:
        raise ConfigError(f"analytics.std_mode must be one of {analytics.STD_MODES}")
    for key in ("scenario", "sweep", "economics", "price_record"):
        if doc.get(key) is not None:
            setattr(cfg, key, _existing(doc[key], base, key))
    programs = doc.get("programs") or []
    if not isinstance(programs, list):
        raise ConfigError("programs must be a list")
    for k, p in enumerate(programs):
        if not isinstance(p, dict) or "name" not in p or p.get("kind") not in (economics.RESERVE_RECORD, economics.PRICE_DRIVEN):
            raise ConfigError(f"programs[{k}]: need 'name' and kind 'reserve_record' or 'price_driven'")
        if set(p) - {"name", "kind", "path", "threshold"}:
            raise ConfigError(f"programs[{k}]: unknown field(s) {sorted(set(p) - {'name', 'kind', 'path', 'threshold'})}")
        entry = dict(p)
        if p["kind"] == economics.RESERVE_RECORD:
            entry["path"] = str(_existing(p.get("path"), base, f"programs[{k}].path"))
        cfg.programs.append(entry)
    th = doc.get("thresholds")
    if isinstance(th, dict):
        if set(th) != {"start", "stop", "num"}:
            raise ConfigError("thresholds object needs start, stop, num")
        th = [float(x) for x in np.linspace(th["start"], th["stop"], int(th["num"]))]
    if th is not None:
        if not (isinstance(th, list) and th and all(isinstance(x, (int, float)) for x in th)):
            raise ConfigError("thresholds must be a non-empty list of numbers")
        cfg.thresholds = [float(x) for x in th]
    cfg.draws = int(doc.get("draws", 1000))
    if cfg.draws < 1:
        raise ConfigError("draws must be >= 1")
    noise = dict(doc.get("noise") or {"kind": "none"})
    if noise.get("kind") not in ("none", "gaussian", "bootstrap"):
        raise ConfigError("noise.kind must be none, gaussian or bootstrap")
    if noise["kind"] == "bootstrap":
        noise["path"] = str(_existing(noise.get("path"), base, "noise.path"))
    cfg.noise = noise
    cfg.capacity_mw = float(doc.get("capacity_mw", 1.0))
    if not cfg.capacity_mw > 0:
        raise ConfigError("capacity_mw must be positive")
    return cfg


def load_config(path: Path, command: str) -> tuple[RunConfig, dict | None]:
    """Config or manifest; a manifest also returns the recorded input hashes."""
    path = Path(path)
    doc = _load_json(path, "config")
    if isinstance(doc, dict) and "manifest_version" in doc:
        if doc.get("command") != command:
            raise ConfigError(f"manifest {path} was written by {doc.get('command')!r}, not {command!r}")
        cfg = parse_config(doc["config"], path.parent.resolve())
        cfg.output = path.parent.resolve()
        return cfg, doc.get("inputs", {})
    return parse_config(doc, path.parent.resolve()), None


def _check_hashes(cfg: RunConfig, recorded: dict | None) -> dict:
    hashes = {str(p): sha256_file(p) for p in cfg.input_paths()}
    if recorded is not None:
        for p, h in recorded.items():
            if hashes.get(p) != h:
                raise ConfigError(f"input {p} differs from the manifest (sha256 mismatch)")
    return dict(sorted(hashes.items()))


# -- shared steps -------------------------------------------------------------------------


def build_case(cfg: RunConfig) -> GridCase:
    if cfg.case is None:
        raise ConfigError("config needs a 'case' path")
    case = load_case(cfg.case, cfg.format, cfg.segments)
    if cfg.profiles:
        demand = read_profile_csv(_read_text(cfg.profiles["demand"], "profile")) if "demand" in cfg.profiles else None
        ren = read_profile_csv(_read_text(cfg.profiles["renewables"], "profile")) if "renewables" in cfg.profiles else None
        case = with_profiles(case, demand, ren)
    return validate_case(case)


def day_range(cfg: RunConfig, case: GridCase, override=None) -> range:
    days = override if override is not None else cfg.days
    if days is None:
        return range(case.n_days)
    first, last = days
    if last >= case.n_days:
        raise ConfigError(f"days [{first}, {last}] exceed the {case.n_days}-day profile")
    return range(first, last + 1)


def write_record(out: Path, record: market.PriceRecord, case: GridCase, cfg: RunConfig, prefix: str = "") -> dict:
    """Price record + analytics exports; returns the stats summary (or None if nothing was feasible)."""
    write_atomic(out / f"{prefix}price_record.csv", market.price_record_csv(record))
    write_atomic(out / f"{prefix}price_record.json", market.price_record_sidecar(record))
    try:
        stats = analytics.compute_stats(record, case, bool(cfg.analytics["weighted"]), cfg.analytics["std_mode"])
    except analytics.AnalyticsError:
        return None
    write_atomic(out / f"{prefix}stats.csv", analytics.stats_csv(stats))
    write_atomic(out / f"{prefix}hourly.csv", analytics.hourly_csv(stats))
    # county snapshot at the highest-priced feasible interval
    peak = int(np.nanargmax(stats.avg_lmp))
    write_atomic(out / f"{prefix}county_{peak}.csv", analytics.county_csv(analytics.county_table(record, case, peak)))
    return stats


def write_manifest(out: Path, command: str, cfg: RunConfig, hashes: dict, extra: dict) -> None:
    doc = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": cfg.to_document(),
        "inputs": hashes,
        "seed": cfg.seed,
        "settings": cfg.to_document()["solver"],
        **extra,
    }
    write_atomic(out / "run_manifest.json", _dump(doc))


def _statuses(record: market.PriceRecord) -> dict:
    return {str(d): s for d, s in zip(record.days, record.statuses)}


def load_scenario(path: Path | None) -> MiningScenario | None:
    if path is None:
        return None
    try:
        return MiningScenario.from_document(_load_json(path, "scenario"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"scenario {path}: {exc}") from None


# -- commands -----------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig, args) -> int:
    case = build_case(cfg)
    print(
        f"ok: {len(case.buses)} buses, {len(case.branches)} branches, {len(case.generators)} generators, "
        f"{case.n_days} day(s)"
    )
    return EXIT_OK


def simulate_record(cfg: RunConfig, case: GridCase) -> tuple[market.PriceRecord, GridCase]:
    """Run the configured horizon; also returns the case with the scenario load added."""
    scenario = load_scenario(cfg.scenario)
    record = market.run_horizon(case, scenario, day_range(cfg, case), cfg.settings(), seed=cfg.seed)
    return record, (inject(case, scenario) if scenario is not None else case)


def cmd_simulate(cfg: RunConfig, args, hashes: dict) -> int:
    record, scen_case = simulate_record(cfg, build_case(cfg))
    out = cfg.output
    write_record(out, record, scen_case, cfg)
    write_manifest(out, "simulate", cfg, hashes, {"statuses": _statuses(record)})
    return EXIT_OK if record.count(market.OPTIMAL) else EXIT_ALL_FAILED


def cmd_sweep(cfg: RunConfig, args, hashes: dict) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a 'sweep' spec path")
    spec = _load_json(cfg.sweep, "sweep spec")
    if not isinstance(spec, dict) or set(spec) - {"location_sets", "capacities_mw", "days"} or "location_sets" not in spec or "capacities_mw" not in spec:
        raise ConfigError("sweep spec needs location_sets and capacities_mw (and optional days)")
    sets = {str(k): [int(b) for b in v] for k, v in spec["location_sets"].items()}
    caps = [float(c) for c in spec["capacities_mw"]]
    if any(c < 0 or not math.isfinite(c) for c in caps):
        raise ConfigError("capacities_mw must be finite and non-negative")
    case = build_case(cfg)
    unknown = sorted({b for v in sets.values() for b in v} - set(case.bus_ids))
    if unknown:
        raise ConfigError(f"sweep spec: unknown bus(es) {unknown}")
    days = day_range(cfg, case, tuple(spec["days"]) if spec.get("days") is not None else None)
    report = capacity_sweep(case, sets, caps, days, cfg.settings(), jobs=max(1, args.jobs), seed=cfg.seed)

    out = cfg.output
    pw = tuple(cfg.analytics["peak_window"])
    base_stats = write_record(out / "baseline", report.baseline.record, case, cfg)

    rows, detail, comparisons = [], {}, {}
    if base_stats is not None:
        comparisons["baseline"] = analytics.compare(base_stats, base_stats, pw)
    any_feasible = report.baseline.feasible_days > 0
    for (loc, cap), cell in report.cells.items():
        name = f"{loc}_{cap:g}MW"
        scen = MiningScenario.uniform(sets[loc], cap, label=name)
        stats = write_record(out / "cells" / name, cell.record, inject(case, scen), cfg)
        any_feasible |= cell.feasible_days > 0
        cmp = analytics.compare(base_stats, stats, pw) if (stats is not None and base_stats is not None) else None
        if cmp is not None:
            comparisons[name] = cmp
        rows.append([
            loc, repr(cap), cell.failed_days, cell.infeasible_days, cell.feasible_days,
            *(analytics._fmt(v) for v in ((stats.summary(pw).overall_mean, stats.summary(pw).peak_mean, stats.std_dev) if stats else (math.nan,) * 3)),
            *(analytics._fmt(v) for v in ((cmp.overall_delta, cmp.peak_delta, cmp.std_delta) if cmp else (math.nan,) * 3)),
            "" if cmp is None else int(cmp.nonuniform),
        ])
        detail[name] = {"location": loc, "capacity_mw": cap, "statuses": _statuses(cell.record)}
    header = [
        "location", "capacity_mw", "failed_days", "infeasible_days", "feasible_days",
        "overall_mean", "peak_mean", "std_dev", "delta_overall", "delta_peak", "delta_std", "nonuniform",
    ]
    write_atomic(out / "sweep_summary.csv", analytics._csv(header, rows))
    write_atomic(out / "comparison.csv", analytics.comparison_csv(comparisons))
    violations = [list(v) for v in monotonicity_violations(report)]
    write_atomic(out / "sweep_report.json", _dump({
        "cells": detail,
        "baseline": _statuses(report.baseline.record),
        "monotonicity_violations": violations,
        "infeasible_counts": {loc: dict(zip(map(repr, report.capacities(loc)), report.infeasible_counts(loc)))
                              for loc in report.locations()},
    }))
    write_manifest(out, "sweep", cfg, hashes, {"statuses": {k: v["statuses"] for k, v in detail.items()}})
    return EXIT_OK if any_feasible else EXIT_ALL_FAILED


def _record_for_economics(cfg: RunConfig) -> market.PriceRecord:
    if cfg.price_record is not None:
        sidecar = cfg.price_record.with_suffix(".json")
        return market.read_price_record(_read_text(cfg.price_record, "price record"), _read_text(sidecar, "price record sidecar"))
    return simulate_record(cfg, build_case(cfg))[0]


def align_series(values: np.ndarray, record: market.PriceRecord, what: str) -> np.ndarray:
    """Series indexed by the record's intervals, or by the whole profile (sliced to the record's days)."""
    n = record.n_intervals
    if len(values) == n:
        return values
    if record.days and len(values) >= market.T * (max(record.days) + 1):
        idx = np.concatenate([np.arange(d * market.T, (d + 1) * market.T) for d in record.days])
        return values[idx]
    raise ConfigError(f"{what}: {len(values)} intervals do not cover the price record ({n} intervals)")


def _economics_inputs(cfg: RunConfig, record: market.PriceRecord):
    if cfg.economics is None:
        raise ConfigError("config needs an 'economics' CSV path")
    try:
        econ = economics.read_economics_csv(_read_text(cfg.economics, "economics"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    econ = economics.MiningEconomics(
        align_series(econ.btc_price, record, "economics"),
        align_series(econ.difficulty, record, "economics"),
        align_series(econ.elec_price, record, "economics"),
    )
    reserves = []
    for p in cfg.programs:
        if p["kind"] == economics.RESERVE_RECORD:
            try:
                prog = economics.read_program_csv(_read_text(Path(p["path"]), "program"), p["name"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            reserves.append(economics.DrProgram(
                prog.name, prog.kind,
                align_series(prog.revenue, record, p["name"]),
                align_series(prog.deployment, record, p["name"]),
            ))
    if not cfg.programs:
        raise ConfigError("config needs at least one program")
    return econ, reserves


def _noise(cfg: RunConfig) -> economics.NoiseSpec:
    kind = cfg.noise["kind"]
    try:
        if kind == "bootstrap":
            hist = economics.read_price_history_csv(_read_text(Path(cfg.noise["path"]), "price history"))
            return economics.NoiseSpec.from_history(hist)
        if kind == "gaussian":
            return economics.NoiseSpec("gaussian", float(cfg.noise.get("sigma", 0.0)))
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from None
    return economics.NoiseSpec()


def _portfolio(cfg, econ, reserves, record, default_threshold=None):
    mask = record.feasible_mask
    programs = []
    r_iter = iter(reserves)
    for p in cfg.programs:
        if p["kind"] == economics.RESERVE_RECORD:
            programs.append(next(r_iter).restrict(mask))
        else:
            th = p.get("threshold", default_threshold)
            if th is None:
                raise ConfigError(f"program {p['name']!r}: portfolio needs a threshold")
            programs.append(economics.price_driven_program(record, float(th), p["name"]))
    sol = economics.solve_portfolio(programs, econ.restrict(mask), cfg.capacity_mw)
    doc = sol.to_document(programs)
    doc["capacity_mw"] = cfg.capacity_mw
    doc["horizon_intervals"] = int(mask.sum())
    doc["thresholds"] = {p.name: p.threshold for p in programs if p.kind == economics.PRICE_DRIVEN}
    return doc


def cmd_portfolio(cfg: RunConfig, args, hashes: dict) -> int:
    record = _record_for_economics(cfg)
    if not record.count(market.OPTIMAL):
        print("gridflex: every day in the price record failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    econ, reserves = _economics_inputs(cfg, record)
    doc = _portfolio(cfg, econ, reserves, record)
    write_atomic(cfg.output / "portfolio.json", _dump(doc))
    write_manifest(cfg.output, "portfolio", cfg, hashes, {"statuses": _statuses(record)})
    return EXIT_OK


def cmd_profit(cfg: RunConfig, args, hashes: dict) -> int:
    record = _record_for_economics(cfg)
    if not record.count(market.OPTIMAL):
        print("gridflex: every day in the price record failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    econ, reserves = _economics_inputs(cfg, record)
    noise = _noise(cfg)
    avg, _ = economics.feasible_average_lmp(record)
    thresholds = cfg.thresholds
    if thresholds is None:
        thresholds = [float(x) for x in np.linspace(0.0, math.ceil(avg.max() * 1.1), 41)]
    thresholds = sorted(thresholds)

    reports = []
    r_iter = iter(reserves)
    best_threshold = None
    for p in cfg.programs:
        if p["kind"] == economics.RESERVE_RECORD:
            rep = economics.annual_profit(next(r_iter), econ, record, cfg.draws, cfg.seed, noise)
        else:
            rep = economics.threshold_sweep(econ, record, thresholds, cfg.draws, cfg.seed, noise)
            rep = economics.ProfitReport(p["name"], rep.thresholds, rep.mean, rep.lower, rep.upper,
                                         rep.draws, rep.seed, rep.annualization, rep.noise)
            if best_threshold is None:
                best_threshold = float(rep.thresholds[int(np.argmax(rep.mean))])
        reports.append(rep)

    rows = []
    for rep in reports:
        ths = rep.thresholds if rep.thresholds is not None else thresholds
        for j, t in enumerate(ths):
            k = j if rep.thresholds is not None else 0
            rows.append([rep.program, repr(float(t)), repr(float(rep.mean[k])), repr(float(rep.lower[k])), repr(float(rep.upper[k]))])
    out = cfg.output
    write_atomic(out / "profit_vs_threshold.csv", analytics._csv(["program", "threshold", "mean", "lower", "upper"], rows))
    write_atomic(out / "profit_report.json", _dump({"programs": [r.to_document() for r in reports]}))
    write_atomic(out / "portfolio.json", _dump(_portfolio(cfg, econ, reserves, record, best_threshold)))
    write_manifest(out, "profit", cfg, hashes, {"statuses": _statuses(record)})
    return EXIT_OK


def cmd_demo(args) -> int:
    from .demo import write_demo_inputs

    out = Path(args.out or "gridflex-demo").resolve()
    for name in write_demo_inputs(out):
        print(out / name)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "portfolio": cmd_portfolio,
    "profit": cmd_profit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridflex", description="Market simulation with mining loads and demand-response economics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "SCUC + SCED over a horizon; price record and LMP statistics"),
        ("sweep", "capacity x location sweep with feasibility counts"),
        ("portfolio", "optimal demand-response portfolio"),
        ("profit", "annual demand-response profit versus price threshold"),
        ("validate", "check a case file"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config or a run_manifest.json")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep cells")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--format", choices=("native", "mcase"), default=None, help="override the case format")
        p.add_argument("--out", default=None, help="override the output directory")
    p = sub.add_parser("demo", help="write the bundled demo inputs and configs")
    p.add_argument("--out", default=None, help="target directory (default ./gridflex-demo)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "demo":
        return cmd_demo(args)
    try:
        cfg, recorded = load_config(Path(args.config), args.command)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.seed = args.seed
        if args.format is not None:
            cfg.format = args.format
        if args.out is not None:
            cfg.output = Path(args.out).resolve()
        if args.command == "validate":
            return cmd_validate(cfg, args)
        if cfg.output is None:
            raise ConfigError("config needs an 'output' directory (or pass --out)")
        hashes = _check_hashes(cfg, recorded)
        cfg.output.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, hashes)
    except (ConfigError, CaseError) as exc:
        print(f"gridflex: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"gridflex: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
