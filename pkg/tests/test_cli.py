import csv
import io
import json

import numpy as np
import pytest

from gridflex.cli import main
from gridflex.economics import DrProgram, MiningEconomics, write_economics_csv, write_program_csv
from gridflex.io import serialize_case, write_mcase

from conftest import gen, make_case


def ring_case(days=2):
    h = np.arange(24 * days) % 24
    load = 120.0 + 30.0 * np.sin(np.pi * h / 24)
    return make_case(3, [(1, 2, 0.1, 80.0), (2, 3, 0.1, None), (1, 3, 0.1, None)],
                     [gen(1, 0, 300, 10.0), gen(3, 0, 300, 50.0)], {2: load},
                     counties={1: "west", 2: "east", 3: "west"}, n_days=days)


@pytest.fixture
def inputs(tmp_path):
    case = ring_case()
    (tmp_path / "case.json").write_text(serialize_case(case))
    (tmp_path / "case.m").write_text(write_mcase(case))
    (tmp_path / "demand.csv").write_text("interval,bus_2\n" + "".join(
        f"{t},{v!r}\n" for t, v in enumerate(case.demand.series[2].tolist())))
    n = case.n_intervals
    (tmp_path / "econ.csv").write_text(write_economics_csv(
        MiningEconomics(np.full(n, 25000.0), np.full(n, 143.0), np.full(n, 30.0))))
    dep = np.zeros(n)
    dep[17] = 1.0
    (tmp_path / "rrs.csv").write_text(write_program_csv(DrProgram("RRS", revenue=np.full(n, 11.27), deployment=dep)))
    (tmp_path / "hist.csv").write_text("interval,price_usd_mwh\n" + "".join(f"{t},{20 + t % 7}\n" for t in range(200)))
    (tmp_path / "mine.json").write_text(json.dumps({"label": "m", "facilities": [{"bus": 2, "capacity": 10.0}]}))
    (tmp_path / "overload.json").write_text(json.dumps({"label": "big", "facilities": [{"bus": 2, "capacity": 1000.0}]}))
    (tmp_path / "sweep_spec.json").write_text(json.dumps(
        {"location_sets": {"east": [2]}, "capacities_mw": [0, 100, 400], "days": [0, 1]}))
    return tmp_path


def config(tmp_path, name, **doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


PROGRAMS = [{"name": "RRS", "kind": "reserve_record", "path": "rrs.csv"}, {"name": "pd", "kind": "price_driven"}]


def test_simulate_writes_record_and_manifest(inputs):
    cfg = config(inputs, "sim.json", case="case.json", days=[0, 1], output="out")
    assert run("simulate", "--config", cfg) == 0
    out = inputs / "out"
    rows = list(csv.reader(io.StringIO((out / "price_record.csv").read_text())))
    assert rows[0] == ["interval", "bus_id", "lmp"] and len(rows) == 1 + 48 * 3
    man = json.loads((out / "run_manifest.json").read_text())
    assert man["command"] == "simulate" and man["seed"] == 0
    assert man["statuses"] == {"0": "optimal", "1": "optimal"}
    assert set(man["inputs"]) == {str((inputs / "case.json").resolve())}
    assert (out / "hourly.csv").exists() and (out / "stats.csv").exists()
    assert any(p.name.startswith("county_") for p in out.iterdir())


def test_missing_case_exits_1(inputs, capsys):
    cfg = config(inputs, "bad.json", case="nope.json", output="out")
    assert run("simulate", "--config", cfg) == 1
    assert "nope.json" in capsys.readouterr().err


@pytest.mark.parametrize("doc, needle", [
    ({"case": "case.json", "output": "o", "colour": 1}, "colour"),
    ({"case": "case.json", "output": "o", "days": [0, 9]}, "days"),
    ({"case": "case.json", "output": "o", "solver": {"gap": -1}}, "solver"),
    ({"case": "case.json", "output": "o", "seed": -3}, "seed"),
])
def test_config_errors_exit_1(inputs, capsys, doc, needle):
    assert run("simulate", "--config", config(inputs, "c.json", **doc)) == 1
    assert needle in capsys.readouterr().err


def test_unreadable_json_exits_1(inputs, capsys):
    (inputs / "broken.json").write_text("{")
    assert run("simulate", "--config", inputs / "broken.json") == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_overload_exits_2_with_statuses(inputs):
    cfg = config(inputs, "sim.json", case="case.json", scenario="overload.json", output="out")
    assert run("simulate", "--config", cfg) == 2
    man = json.loads((inputs / "out" / "run_manifest.json").read_text())
    assert set(man["statuses"].values()) == {"infeasible"}


def test_mcase_with_profiles(inputs):
    cfg = config(inputs, "m.json", case="case.m", format="mcase", profiles={"demand": "demand.csv"}, output="out")
    assert run("simulate", "--config", cfg) == 0
    native = config(inputs, "n.json", case="case.json", output="out2")
    assert run("simulate", "--config", native) == 0
    a = (inputs / "out" / "price_record.csv").read_text()
    b = (inputs / "out2" / "price_record.csv").read_text()
    assert a == b


def test_validate(inputs, capsys):
    assert run("validate", "--config", config(inputs, "v.json", case="case.json")) == 0
    assert capsys.readouterr().out.startswith("ok: 3 buses")


def test_sweep_cells_and_zero_row(inputs):
    cfg = config(inputs, "sw.json", case="case.json", sweep="sweep_spec.json", output="sw")
    assert run("sweep", "--config", cfg) == 0
    out = inputs / "sw"
    assert sorted(p.name for p in (out / "cells").iterdir()) == ["east_0MW", "east_100MW", "east_400MW"]
    assert (out / "baseline" / "price_record.csv").exists()
    rows = list(csv.DictReader(io.StringIO((out / "sweep_summary.csv").read_text())))
    assert len(rows) == 3
    zero = rows[0]
    assert (zero["delta_overall"], zero["delta_peak"], zero["delta_std"]) == ("0.0", "0.0", "0.0")
    counts = [int(r["infeasible_days"]) + int(r["failed_days"]) for r in rows]
    assert counts == sorted(counts) and counts[-1] == 2
    report = json.loads((out / "sweep_report.json").read_text())
    assert report["monotonicity_violations"] == []


def test_sweep_parallel_matches_serial(inputs):
    cfg = config(inputs, "sw.json", case="case.json", sweep="sweep_spec.json", output="a")
    assert run("sweep", "--config", cfg) == 0
    assert run("sweep", "--config", cfg, "--jobs", 2, "--out", inputs / "b") == 0
    assert tree(inputs / "a") == tree(inputs / "b")


def test_profit_flat_above_max_lmp(inputs):
    cfg = config(inputs, "p.json", case="case.json", output="p", economics="econ.csv", programs=PROGRAMS,
                 thresholds=[500, 600, 700], draws=5)
    assert run("profit", "--config", cfg) == 0
    rows = [r for r in csv.DictReader(io.StringIO((inputs / "p" / "profit_vs_threshold.csv").read_text()))
            if r["program"] == "pd"]
    assert len({r["mean"] for r in rows}) == 1
    assert float(rows[0]["mean"]) > 0


def test_profit_crosses_zero_once(inputs):
    cfg = config(inputs, "p.json", case="case.json", output="p", economics="econ.csv", programs=PROGRAMS,
                 thresholds={"start": 0, "stop": 100, "num": 51}, draws=20, noise={"kind": "bootstrap", "path": "hist.csv"})
    assert run("profit", "--config", cfg) == 0
    mean = [float(r["mean"]) for r in csv.DictReader(io.StringIO((inputs / "p" / "profit_vs_threshold.csv").read_text()))
            if r["program"] == "pd"]
    assert mean[0] < 0 < mean[-1]
    assert sum(1 for a, b in zip(mean, mean[1:]) if (a < 0) != (b < 0)) == 1
    doc = json.loads((inputs / "p" / "portfolio.json").read_text())
    assert doc["capacity_mw"] == 1.0


def test_portfolio_needs_threshold(inputs, capsys):
    cfg = config(inputs, "pf.json", case="case.json", output="pf", economics="econ.csv", programs=PROGRAMS)
    assert run("portfolio", "--config", cfg) == 1
    assert "threshold" in capsys.readouterr().err


def test_portfolio_from_saved_record(inputs):
    assert run("simulate", "--config", config(inputs, "s.json", case="case.json", output="sim")) == 0
    progs = [PROGRAMS[0], {"name": "pd", "kind": "price_driven", "threshold": 60.0}]
    cfg = config(inputs, "pf.json", price_record="sim/price_record.csv", output="pf", economics="econ.csv",
                 programs=progs, capacity_mw=50)
    assert run("portfolio", "--config", cfg) == 0
    doc = json.loads((inputs / "pf" / "portfolio.json").read_text())
    # linear objective: the whole facility lands on one program, or none pays
    assert sum(doc["capacities_mw"]) in (0.0, 50.0)
    assert sum(1 for c in doc["capacities_mw"] if c) <= 1


@pytest.mark.parametrize("command, extra", [
    ("simulate", {"scenario": "mine.json"}),
    ("sweep", {"sweep": "sweep_spec.json"}),
    ("profit", {"economics": "econ.csv", "programs": PROGRAMS, "draws": 50, "seed": 3,
                "noise": {"kind": "gaussian", "sigma": 4.0}}),
])
def test_rerun_from_manifest_is_byte_identical(inputs, command, extra):
    cfg = config(inputs, f"{command}.json", case="case.json", output="first", **extra)
    assert run(command, "--config", cfg) == 0
    manifest = inputs / "first" / "run_manifest.json"
    assert run(command, "--config", manifest, "--out", inputs / "second") == 0
    assert tree(inputs / "first") == tree(inputs / "second")


def test_manifest_detects_changed_input(inputs, capsys):
    cfg = config(inputs, "sim.json", case="case.json", output="first")
    assert run("simulate", "--config", cfg) == 0
    doc = json.loads((inputs / "case.json").read_text())
    doc["generators"][0]["no_load_cost"] = 1.0
    (inputs / "case.json").write_text(json.dumps(doc))
    assert run("simulate", "--config", inputs / "first" / "run_manifest.json", "--out", inputs / "x") == 1
    assert "sha256" in capsys.readouterr().err


def test_manifest_of_other_command_rejected(inputs):
    assert run("simulate", "--config", config(inputs, "s.json", case="case.json", output="first")) == 0
    assert run("sweep", "--config", inputs / "first" / "run_manifest.json") == 1


def test_seed_override_recorded(inputs):
    cfg = config(inputs, "s.json", case="case.json", output="o", seed=1)
    assert run("simulate", "--config", cfg, "--seed", 42) == 0
    assert json.loads((inputs / "o" / "run_manifest.json").read_text())["seed"] == 42


def test_writes_stay_in_output_dir(inputs):
    before = {p for p in inputs.iterdir()}
    cfg = config(inputs, "s.json", case="case.json", output="o")
    before.add(inputs / "s.json")
    assert run("simulate", "--config", cfg) == 0
    assert {p for p in inputs.iterdir()} - before == {inputs / "o"}
    assert not any(p.name.endswith(".tmp") for p in (inputs / "o").rglob("*"))


def test_demo_writes_inputs(tmp_path):
    assert run("demo", "--out", tmp_path / "d") == 0
    names = {p.name for p in (tmp_path / "d").iterdir()}
    assert {"case.json", "case.m", "simulate.json", "sweep.json", "profit.json", "portfolio.json"} <= names
    assert run("validate", "--config", tmp_path / "d" / "simulate.json") == 0
