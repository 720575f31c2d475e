import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridflex.analytics import (
    AnalyticsError,
    TableRow,
    average_lmp,
    compare,
    comparison_csv,
    compute_stats,
    county_csv,
    county_table,
    hourly_csv,
    stats_csv,
)
from gridflex.market import INFEASIBLE, OPTIMAL, PriceRecord, run_horizon

from conftest import gen, make_case, record_from


def case_for(n_buses, counties=None, n_days=1):
    branches = [(b, b + 1, 0.1, None) for b in range(1, n_buses)]
    return make_case(n_buses, branches, [gen(1, 0, 100, 10.0)], {1: 10.0}, counties=counties, n_days=n_days)


def test_constant_prices():
    case = case_for(3, {1: "a", 2: "a", 3: "b"})
    stats = compute_stats(record_from(np.full((3, 48), 30.0)), case_for(3, {1: "a", 2: "a", 3: "b"}, 2))
    assert stats.overall_mean == 30.0 and stats.std_dev == 0.0
    assert all(np.all(v == 30.0) for v in stats.county_lmp.values())
    assert np.all(stats.hourly_lmp == 30.0)
    assert case.counties == {1: "a", 2: "a", 3: "b"}


def test_two_bus_average():
    stats = compute_stats(record_from(np.vstack([np.full(24, 20.0), np.full(24, 40.0)])), case_for(2))
    assert np.all(stats.avg_lmp == 30.0)


def test_hourly_profile_oracle():
    rng = np.random.default_rng(0)
    lmp = rng.uniform(10, 60, (4, 48))
    stats = compute_stats(record_from(lmp), case_for(4, n_days=2))
    for h in range(24):
        # spreadsheet-style: average the four buses at hour h of each day, then the two days
        day1 = sum(lmp[b, h] for b in range(4)) / 4
        day2 = sum(lmp[b, 24 + h] for b in range(4)) / 4
        assert stats.hourly_lmp[h] == pytest.approx((day1 + day2) / 2, rel=1e-12)
    assert stats.std_dev == pytest.approx(np.sqrt(np.mean((lmp.mean(0) - lmp.mean()) ** 2)), rel=1e-12)


def test_window_mean_whole_day_is_overall():
    rng = np.random.default_rng(1)
    stats = compute_stats(record_from(rng.uniform(0, 90, (3, 72))), case_for(3, n_days=3))
    assert stats.window_mean(0, 24) == pytest.approx(stats.overall_mean, abs=1e-9)
    lmp = stats.avg_lmp.reshape(3, 24)
    assert stats.window_mean(15, 17) == pytest.approx(lmp[:, 15:17].mean(), rel=1e-12)
    with pytest.raises(ValueError):
        stats.window_mean(17, 15)


def test_samples_std_mode():
    lmp = np.vstack([np.full(24, 10.0), np.full(24, 30.0)])
    rec = record_from(lmp)
    assert compute_stats(rec, case_for(2)).std_dev == 0.0
    assert compute_stats(rec, case_for(2), std_mode="samples").std_dev == 10.0
    with pytest.raises(ValueError):
        compute_stats(rec, case_for(2), std_mode="weekly")


def test_load_weighted_mean():
    case = make_case(2, [(1, 2, 0.1, None)], [gen(1, 0, 100, 10.0)], {1: 10.0, 2: 30.0})
    rec = record_from(np.vstack([np.full(24, 20.0), np.full(24, 40.0)]))
    assert compute_stats(rec, case, weighted=True).overall_mean == pytest.approx(35.0)
    assert compute_stats(rec, case).overall_mean == 30.0


def test_published_deltas():
    row = compare(TableRow(27.18, 42.60, 11.63), TableRow(30.19, 49.10, 51.06))
    assert row.overall_delta == pytest.approx(3.01, abs=1e-9)
    assert row.peak_delta == pytest.approx(6.50, abs=1e-9)
    assert row.std_delta == pytest.approx(39.43, abs=1e-9)
    assert row.nonuniform


def test_identical_inputs_zero_deltas():
    stats = compute_stats(record_from(np.random.default_rng(2).uniform(0, 50, (2, 24))), case_for(2))
    row = compare(stats, stats)
    assert (row.overall_delta, row.peak_delta, row.std_delta) == (0.0, 0.0, 0.0)
    assert not row.nonuniform


def test_offpeak_only_increase_is_not_nonuniform():
    base = np.full((2, 24), 30.0)
    scen = base.copy()
    scen[:, :6] += 12.0
    row = compare(compute_stats(record_from(base), case_for(2)), compute_stats(record_from(scen), case_for(2)))
    assert row.overall_delta == pytest.approx(3.0)
    assert row.peak_delta == 0.0
    assert not row.nonuniform


def test_compare_rejects_mismatched_horizons():
    a = compute_stats(record_from(np.ones((2, 24))), case_for(2))
    b = compute_stats(record_from(np.ones((2, 48))), case_for(2, n_days=2))
    with pytest.raises(AnalyticsError):
        compare(a, b)


def test_county_tables():
    lmp = np.array([[10.0] * 24, [20.0] * 24, [30.0] * 24])
    rec = record_from(lmp)
    one = county_table(rec, case_for(3, {1: "x", 2: "x", 3: "x"}), 5)
    assert one == {"x": pytest.approx(compute_stats(rec, case_for(3)).avg_lmp[5])}
    two = county_table(rec, case_for(3, {1: "p", 2: "p", 3: "q"}), 0)
    assert two == {"p": 15.0, "q": 30.0}
    # bus 3 has no county and is left out
    three = county_table(rec, case_for(3, {1: "p", 2: "q"}), 0)
    assert three == {"p": 10.0, "q": 20.0}
    assert county_csv(two).splitlines() == ["county,lmp", "p,15.0", "q,30.0"]


def test_county_table_errors():
    rec = record_from(np.ones((2, 48)), statuses=[OPTIMAL, INFEASIBLE])
    with pytest.raises(AnalyticsError):
        county_table(rec, case_for(2, n_days=2), 30)
    with pytest.raises(IndexError):
        county_table(rec, case_for(2, n_days=2), 48)


def test_congested_snapshot_importing_county_is_dearer():
    case = make_case(3, [(1, 2, 0.1, 80.0), (2, 3, 0.1, None), (1, 3, 0.1, None)],
                     [gen(1, 0, 300, 10.0), gen(3, 0, 300, 50.0)], {2: 150.0},
                     counties={1: "exporter", 2: "importer", 3: "exporter"})
    table = county_table(run_horizon(case), case, 12)
    assert table["importer"] > table["exporter"]


def test_county_weighted_mean_consistency():
    rng = np.random.default_rng(4)
    counties = {b: "abc"[b % 3] for b in range(1, 10)}
    case = case_for(9, counties)
    rec = record_from(rng.uniform(0, 100, (9, 24)))
    stats = compute_stats(rec, case)
    sizes = {c: sum(1 for v in counties.values() if v == c) for c in set(counties.values())}
    weighted = sum(sizes[c] * stats.county_lmp[c] for c in sizes) / sum(sizes.values())
    np.testing.assert_allclose(weighted, stats.avg_lmp, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.permutations(range(5)))
def test_permutation_invariance(seed, perm):
    rng = np.random.default_rng(seed)
    lmp = rng.uniform(0, 100, (5, 48))
    counties = {1: "a", 2: "b", 3: "a", 4: "b", 5: "c"}
    case = case_for(5, counties, 2)
    a = compute_stats(record_from(lmp), case)
    ids = [i + 1 for i in perm]
    b = compute_stats(PriceRecord(tuple(ids), (0, 1), lmp[list(perm)], (OPTIMAL, OPTIMAL)), case)
    assert a.overall_mean == pytest.approx(b.overall_mean, rel=1e-12)
    assert a.std_dev == pytest.approx(b.std_dev, rel=1e-12)
    np.testing.assert_allclose(a.hourly_lmp, b.hourly_lmp, rtol=1e-12)
    for c in a.county_lmp:
        np.testing.assert_allclose(a.county_lmp[c], b.county_lmp[c], rtol=1e-12)


def test_infeasible_day_only_shrinks_divisor():
    lmp = np.vstack([np.r_[np.full(24, 10.0), np.full(24, 50.0)]] * 2)
    full = compute_stats(record_from(lmp), case_for(2, n_days=2))
    cut = compute_stats(record_from(lmp, statuses=[OPTIMAL, INFEASIBLE]), case_for(2, n_days=2))
    assert full.overall_mean == 30.0
    assert cut.overall_mean == 10.0
    assert np.isnan(cut.avg_lmp[24:]).all()
    assert np.all(cut.hourly_lmp == 10.0)


def test_all_infeasible_raises():
    rec = record_from(np.ones((2, 24)), statuses=[INFEASIBLE])
    with pytest.raises(AnalyticsError):
        compute_stats(rec, case_for(2))
    assert np.isnan(average_lmp(rec)).all()


def test_csv_exports():
    rec = record_from(np.vstack([np.full(48, 20.0), np.full(48, 40.0)]), statuses=[OPTIMAL, INFEASIBLE])
    stats = compute_stats(rec, case_for(2, {1: "a", 2: "b"}, 2))
    rows = stats_csv(stats).splitlines()
    assert rows[0] == "interval,avg_lmp,county:a,county:b"
    assert rows[1] == "0,30.0,20.0,40.0"
    assert rows[-1] == "47,,,"
    assert len(hourly_csv(stats).splitlines()) == 25
    row = compare(stats, stats)
    table = comparison_csv({"same": row}).splitlines()
    assert table[0].startswith("setting,overall_mean,peak_mean,std_dev,delta_overall")
    assert table[1].endswith(",0.0,0.0,0.0,0")
