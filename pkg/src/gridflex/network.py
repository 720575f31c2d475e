"""DC network model and shift-factor (PTDF) matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .case import Branch, GridCase

DENSE_BUS_LIMIT = 3000
RESIDUAL_TOL = 1e-10
BALANCE_TOL = 1e-6


class NetworkError(RuntimeError):
    """Structural problem in the network (e.g. a singular reduced susceptance matrix)."""


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """Reference-reduced DC network.

    ``ptdf[l, n]`` is the MW flow on monitored line ``l`` (positive from-bus to
    to-bus) per MW injected at bus ``bus_index[n]`` and withdrawn at the
    reference bus.
    """

    reference_bus: int
    bus_index: tuple[int, ...]
    ptdf: np.ndarray
    line_limits: np.ndarray
    lines: tuple[Branch, ...]

    @property
    def n_buses(self) -> int:
        return len(self.bus_index)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    def column(self, bus_id: int) -> np.ndarray:
        return self.ptdf[:, self.bus_index.index(bus_id)]


def choose_reference(case: GridCase) -> int:
    """Bus hosting the most in-service generating capacity; lowest id on ties."""
    capacity: dict[int, float] = {}
    for g in case.generators:
        if g.in_service:
            capacity[g.bus] = capacity.get(g.bus, 0.0) + g.p_max
    if not capacity:
        return min(case.bus_ids)
    best = max(capacity.values())
    return min(b for b, cap in capacity.items() if cap == best)


def build_network(case: GridCase, reference: int | str = "auto") -> NetworkModel:
    bus_ids = case.bus_ids
    index = {b: i for i, b in enumerate(bus_ids)}
    ref = choose_reference(case) if reference == "auto" else int(reference)
    if ref not in index:
        raise NetworkError(f"reference bus {ref} is not in the case")

    live = [br for br in case.branches if br.in_service]
    n, m = len(bus_ids), len(live)
    rows = np.repeat(np.arange(m), 2)
    cols = np.array([[index[br.from_bus], index[br.to_bus]] for br in live], dtype=int).reshape(-1)
    vals = np.tile([1.0, -1.0], m)
    incidence = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    b_line = 1.0 / np.array([br.reactance for br in live])
    b_bus = (incidence.T @ sp.diags(b_line) @ incidence).tocsc()

    keep = np.array([i for i in range(n) if i != index[ref]], dtype=int)
    b_red = b_bus[keep][:, keep]

    monitored = [k for k, br in enumerate(live) if br.flow_limit is not None]
    lines = tuple(live[k] for k in monitored)
    # rows of B_line * A restricted to the monitored lines and non-reference buses
    flow_map = (sp.diags(b_line) @ incidence)[monitored][:, keep]

    ptdf = np.zeros((len(monitored), n))
    if len(monitored) and len(keep):
        ptdf[:, keep] = _solve_transposed(b_red, flow_map, n)
    ptdf.setflags(write=False)
    limits = np.array([br.flow_limit for br in lines], dtype=float)
    limits.setflags(write=False)
    return NetworkModel(ref, tuple(bus_ids), ptdf, limits, lines)


def _solve_transposed(b_red: sp.csc_matrix, flow_map: sp.csr_matrix, n_buses: int) -> np.ndarray:
    # PTDF_red = flow_map @ inv(B_red); B_red is symmetric so solve B_red X = flow_map^T
    rhs = flow_map.T.toarray()
    if n_buses <= DENSE_BUS_LIMIT:
        dense = b_red.toarray()
        lu, piv = sla.lu_factor(dense, check_finite=True)
        if np.any(np.abs(np.diag(lu)) < 1e-12 * max(1.0, np.abs(dense).max())):
            raise NetworkError("reduced susceptance matrix is singular (disconnected network?)")
        sol = sla.lu_solve((lu, piv), rhs)
    else:
        try:
            sol = spla.splu(b_red).solve(rhs)
        except RuntimeError as exc:
            raise NetworkError(f"reduced susceptance matrix is singular: {exc}") from None
        dense = b_red
    resid = np.abs(dense @ sol - rhs).max() if rhs.size else 0.0
    if not np.isfinite(resid) or resid > RESIDUAL_TOL * max(1.0, np.abs(rhs).max()) * max(1.0, np.abs(sol).max()):
        raise NetworkError(f"PTDF solve residual {resid:.3g} exceeds tolerance")
    return sol.T


def line_flows(model: NetworkModel, injections) -> np.ndarray:
    """Monitored-line flows (MW) for a balanced nodal injection vector.

    ``injections`` is ordered like ``model.bus_index`` or given as a
    ``{bus_id: MW}`` mapping.
    """
    if isinstance(injections, dict):
        vec = np.zeros(model.n_buses)
        for b, v in injections.items():
            vec[model.bus_index.index(b)] = v
    else:
        vec = np.asarray(injections, dtype=float)
    if vec.shape[0] != model.n_buses:
        raise ValueError(f"expected {model.n_buses} injections, got {vec.shape[0]}")
    imbalance = vec.sum(axis=0)
    if np.any(np.abs(imbalance) > BALANCE_TOL):
        raise ValueError(f"injections are unbalanced by {np.max(np.abs(imbalance)):.3g} MW")
    return model.ptdf @ vec
