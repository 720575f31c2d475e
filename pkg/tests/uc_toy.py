"""Single-bus unit commitment toys and an LP-free oracle for them."""

import itertools
import math

import numpy as np

from gridflex.bnb import MixedBinaryProgram
from gridflex.lp import LpBuilder


def random_uc(seed, n_gen=4, hours=6, ramp=False):
    rng = np.random.default_rng(seed)
    p_min = np.round(rng.uniform(0, 60, n_gen), 1)
    p_max = p_min + np.round(rng.uniform(40, 150, n_gen), 1)
    units = {
        "p_min": p_min,
        "p_max": p_max,
        "cost": np.round(rng.uniform(10, 60, n_gen), 2),
        "no_load": np.round(rng.uniform(0, 400, n_gen), 1),
        "startup": np.round(rng.uniform(0, 1500, n_gen), 1),
        "ramp": np.round(rng.uniform(20, 80, n_gen), 1) if ramp else np.full(n_gen, math.inf),
    }
    demand = np.round(rng.uniform(0.2, 0.8, hours) * p_max.sum(), 1)
    return units, demand


def build_uc(units, demand):
    n_gen, hours = len(units["p_min"]), len(demand)
    b = LpBuilder()
    u = [[b.add_var(f"u{g}_{t}", 0, 1, units["no_load"][g]) for t in range(hours)] for g in range(n_gen)]
    s = [[b.add_var(f"s{g}_{t}", 0, 1, units["startup"][g]) for t in range(hours)] for g in range(n_gen)]
    p = [[b.add_var(f"p{g}_{t}", 0, math.inf, units["cost"][g]) for t in range(hours)] for g in range(n_gen)]
    for t in range(hours):
        b.add_row(f"bal{t}", [p[g][t] for g in range(n_gen)], [1.0] * n_gen, "=", demand[t])
        for g in range(n_gen):
            b.add_row(f"hi{g}_{t}", [p[g][t], u[g][t]], [1.0, -units["p_max"][g]], "<=", 0.0)
            b.add_row(f"lo{g}_{t}", [p[g][t], u[g][t]], [1.0, -units["p_min"][g]], ">=", 0.0)
            if t == 0:
                b.add_row(f"su{g}_{t}", [s[g][t], u[g][t]], [1.0, -1.0], ">=", 0.0)
            else:
                b.add_row(f"su{g}_{t}", [s[g][t], u[g][t], u[g][t - 1]], [1.0, -1.0, 1.0], ">=", 0.0)
                if math.isfinite(units["ramp"][g]):
                    b.add_row(f"ru{g}_{t}", [p[g][t], p[g][t - 1]], [1.0, -1.0], "<=", units["ramp"][g])
                    b.add_row(f"rd{g}_{t}", [p[g][t], p[g][t - 1]], [1.0, -1.0], ">=", -units["ramp"][g])
    lp = b.build()
    return MixedBinaryProgram(lp, tuple(j for row in u for j in row))


def hour_cost(units, on, demand):
    """Merit-order dispatch cost for one hour and one commitment pattern."""
    on = np.asarray(on, dtype=bool)
    lo, hi = units["p_min"][on].sum(), units["p_max"][on].sum()
    if demand < lo - 1e-9 or demand > hi + 1e-9:
        return math.inf
    total = float(np.sum(units["no_load"][on] + units["cost"][on] * units["p_min"][on]))
    rest = demand - lo
    for g in sorted(np.flatnonzero(on), key=lambda g: (units["cost"][g], g)):
        take = min(rest, units["p_max"][g] - units["p_min"][g])
        total += take * units["cost"][g]
        rest -= take
    return total


def commitment_oracle(units, demand):
    """Exact minimum over every commitment sequence (no ramp limits).

    Hours interact only through startup costs, so a recursion over the
    2^G patterns per hour covers all 2^(G*H) sequences exactly.
    """
    n_gen = len(units["p_min"])
    patterns = [np.array(bits) for bits in itertools.product((0, 1), repeat=n_gen)]
    # hour -1 is "all off", so every unit running at hour 0 pays a startup
    prev = {k: (0.0 if k == 0 else math.inf) for k in range(len(patterns))}
    for d in demand:
        cur = {}
        for k, pat in enumerate(patterns):
            h = hour_cost(units, pat, d)
            best = math.inf
            for j, old in enumerate(patterns):
                if prev[j] < math.inf:
                    best = min(best, prev[j] + float(np.sum(units["startup"] * np.maximum(pat - old, 0))))
            cur[k] = h + best
        prev = cur
    return min(prev.values())
