"""Linear programs with dual extraction.

Two interchangeable backends:

``"simplex"``
    A dense two-phase primal revised simplex with Bland's rule. Exact pivot
    choice is fixed (lowest index), so the same input always lands on the same
    basis. Intended for small problems and as a cross-check.
``"highs"``
    HiGHS dual simplex through ``highspy``, used for the market-clearing
    LPs where the dense method is too slow. :class:`HighsSession` keeps a
    model loaded so bound changes re-solve from the last basis.

Duals are reported as shadow prices in the sign convention
``duals[r] = d(objective) / d(rhs[r])`` for a minimization, whatever the row
relation. Reduced costs are ``c - A^T y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import highspy
import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<=", "=", ">="

PRIMAL_TOL = 1e-7
SLACK_TOL = 1e-6
DUALITY_TOL = 1e-6
DEFAULT_MAX_ITER = 50_000


class SolverFailure(RuntimeError):
    """The solver stopped without a verdict (iteration cap, numerical trouble)."""

    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min c.x + offset`` subject to ``A x (rel) b`` and ``lo <= x <= hi``."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: tuple[str, ...]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    row_names: tuple[str, ...] = ()
    var_names: tuple[str, ...] = ()
    offset: float = 0.0
    _row_lookup: dict = field(default=None, repr=False)
    _var_lookup: dict = field(default=None, repr=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.A, dtype=float)
        object.__setattr__(self, "A", A)
        for name in ("c", "b", "lo", "hi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        m, n = A.shape
        if self.c.shape != (n,) or self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("objective and bounds must have one entry per variable")
        if self.b.shape != (m,) or len(self.senses) != m:
            raise ValueError("rhs and senses must have one entry per row")
        if any(s not in (LE, EQ, GE) for s in self.senses):
            raise ValueError("row relations must be '<=', '=' or '>='")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(A.data))):
            raise ValueError("objective, rhs and coefficients must be finite")
        if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)) or np.any(self.lo > self.hi):
            raise ValueError("variable bounds must satisfy lo <= hi")
        if self.row_names:
            if len(self.row_names) != m or len(set(self.row_names)) != m:
                raise ValueError("row names must be unique, one per row")
            object.__setattr__(self, "_row_lookup", {k: i for i, k in enumerate(self.row_names)})
        if self.var_names:
            if len(self.var_names) != n or len(set(self.var_names)) != n:
                raise ValueError("variable names must be unique, one per variable")
            object.__setattr__(self, "_var_lookup", {k: i for i, k in enumerate(self.var_names)})

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def row(self, name: str) -> int:
        return self._row_lookup[name]

    def var(self, name: str) -> int:
        return self._var_lookup[name]

    def with_bounds(self, lo: np.ndarray, hi: np.ndarray) -> "LinearProgram":
        return replace(self, lo=lo, hi=hi, _row_lookup=None, _var_lookup=None)

    def with_rhs(self, b: np.ndarray) -> "LinearProgram":
        return replace(self, b=b, _row_lookup=None, _var_lookup=None)

    def to_lp_text(self) -> str:
        """CPLEX LP-format dump, for debugging."""
        vname = self.var_names or tuple(f"x{j}" for j in range(self.shape[1]))
        rname = self.row_names or tuple(f"r{i}" for i in range(self.shape[0]))
        clean = lambda s: "".join(ch if ch.isalnum() or ch in "_.[]" else "_" for ch in s)  # noqa: E731
        terms = lambda coefs, idx: " ".join(f"{v:+.17g} {clean(vname[j])}" for v, j in zip(coefs, idx)) or "0 " + clean(vname[0])  # noqa: E731
        out = ["Minimize", " obj: " + terms(self.c[self.c != 0], np.flatnonzero(self.c)), "Subject To"]
        for i in range(self.shape[0]):
            lo_, hi_ = self.A.indptr[i], self.A.indptr[i + 1]
            out.append(f" {clean(rname[i])}: {terms(self.A.data[lo_:hi_], self.A.indices[lo_:hi_])} {self.senses[i]} {self.b[i]:.17g}")
        out.append("Bounds")
        for j in range(self.shape[1]):
            lo_ = "-inf" if math.isinf(self.lo[j]) else f"{self.lo[j]:.17g}"
            hi_ = "+inf" if math.isinf(self.hi[j]) else f"{self.hi[j]:.17g}"
            out.append(f" {lo_} <= {clean(vname[j])} <= {hi_}")
        out.append("End")
        return "\n".join(out) + "\n"


@dataclass(eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    objective_value: float = math.nan
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class LpBuilder:
    """Incremental assembly of a :class:`LinearProgram` from named variables and rows."""

    def __init__(self):
        self._c: list[float] = []
        self._lo: list[float] = []
        self._hi: list[float] = []
        self._vnames: list[str] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self._rnames: list[str] = []
        self.offset = 0.0

    @property
    def n_vars(self) -> int:
        return len(self._c)

    @property
    def n_rows(self) -> int:
        return len(self._rhs)

    def add_var(self, name: str, lo: float = 0.0, hi: float = math.inf, cost: float = 0.0) -> int:
        self._c.append(float(cost))
        self._lo.append(float(lo))
        self._hi.append(float(hi))
        self._vnames.append(name)
        return len(self._c) - 1

    def add_row(self, name: str, index: Sequence[int], coefs: Sequence[float], sense: str, rhs: float) -> int:
        i = len(self._rhs)
        for j, v in zip(index, coefs):
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(int(j))
                self._vals.append(float(v))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        self._rnames.append(name)
        return i

    def build(self) -> LinearProgram:
        m, n = len(self._rhs), len(self._c)
        A = sp.coo_matrix((self._vals, (self._rows, self._cols)), shape=(m, n)).tocsr()
        return LinearProgram(
            c=np.array(self._c),
            A=A,
            senses=tuple(self._senses),
            b=np.array(self._rhs),
            lo=np.array(self._lo),
            hi=np.array(self._hi),
            row_names=tuple(self._rnames),
            var_names=tuple(self._vnames),
            offset=self.offset,
        )


def lp_from_dense(c, rows: Iterable[tuple[Sequence[float], str, float]], bounds=None, **kw) -> LinearProgram:
    """Convenience constructor: ``rows`` is a list of ``(coefficients, relation, rhs)``."""
    rows = list(rows)
    c = np.asarray(c, dtype=float)
    A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), len(c))
    lo = np.zeros(len(c)) if bounds is None else np.array([b[0] for b in bounds], dtype=float)
    hi = np.full(len(c), math.inf) if bounds is None else np.array([b[1] for b in bounds], dtype=float)
    return LinearProgram(c, A, tuple(r[1] for r in rows), np.array([r[2] for r in rows], dtype=float), lo, hi, **kw)


def solve_lp(lp: LinearProgram, method: str = "simplex", max_iter: int = DEFAULT_MAX_ITER) -> LpSolution:
    """Solve ``lp``; infeasible/unbounded come back as a status, never an exception."""
    if method == "highs":
        return _solve_highs(lp, max_iter)
    if method != "simplex":
        raise ValueError(f"unknown LP method {method!r}")
    sol = _RevisedSimplex(lp, max_iter).solve()
    if sol.optimal:
        _check_certificate(lp, sol)
    return sol


def _row_activity(lp: LinearProgram, x: np.ndarray) -> np.ndarray:
    return lp.A @ x


def _check_certificate(lp: LinearProgram, sol: LpSolution, lo=None, hi=None, senses=None) -> None:
    x, y = sol.x, sol.duals
    lo = lp.lo if lo is None else lo
    hi = lp.hi if hi is None else hi
    scale = 1.0 + np.abs(lp.b)
    ax = _row_activity(lp, x)
    senses = np.array(lp.senses) if senses is None else senses
    viol = np.where(senses == LE, ax - lp.b, np.where(senses == GE, lp.b - ax, np.abs(ax - lp.b)))
    bound_viol = np.maximum(lo - x, x - hi)
    if np.any(viol > PRIMAL_TOL * scale) or np.any(bound_viol > PRIMAL_TOL * (1.0 + np.abs(x))):
        raise SolverFailure("optimal point violates primal feasibility", sol.iterations)
    cx = float(lp.c @ x)
    dual_obj = float(y @ lp.b + sol.reduced_costs @ x)
    if abs(cx - dual_obj) > DUALITY_TOL * (1.0 + abs(cx)):
        raise SolverFailure(f"duality gap {abs(cx - dual_obj):.3g} exceeds tolerance", sol.iterations)


# -- HiGHS backend ----------------------------------------------------------------


def _solve_highs(lp: LinearProgram, max_iter: int) -> LpSolution:
    return HighsSession(lp, max_iter).solve()


class HighsSession:
    """A HiGHS instance holding one program.

    :meth:`solve` accepts replacement variable bounds; the previous basis is
    kept, so a sequence of closely related solves (branch-and-bound nodes)
    hot-starts from the last optimum.
    """

    def __init__(self, lp: LinearProgram, max_iter: int = DEFAULT_MAX_ITER):
        self.lp = lp
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("simplex_strategy", 1)
        h.setOptionValue("threads", 1)
        h.setOptionValue("simplex_iteration_limit", int(max_iter))
        inf = highspy.kHighsInf
        senses = np.array(lp.senses)
        row_lo = np.where(senses == LE, -inf, lp.b)
        row_hi = np.where(senses == GE, inf, lp.b)
        model = highspy.HighsLp()
        n_rows, n_cols = lp.shape
        model.num_col_ = n_cols
        model.num_row_ = n_rows
        model.col_cost_ = np.asarray(lp.c, dtype=float)
        model.col_lower_ = _hinf(lp.lo)
        model.col_upper_ = _hinf(lp.hi)
        model.row_lower_ = _hinf(row_lo)
        model.row_upper_ = _hinf(row_hi)
        A = lp.A.tocsr()
        model.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
        model.a_matrix_.start_ = A.indptr.astype(np.int32)
        model.a_matrix_.index_ = A.indices.astype(np.int32)
        model.a_matrix_.value_ = A.data.astype(float)
        h.passModel(model)
        self._h = h
        self._cols = np.arange(n_cols, dtype=np.int32)
        self._senses = senses
        self._AT = A.T.tocsr()
        self._lo, self._hi = lp.lo, lp.hi

    def solve(self, lo: np.ndarray | None = None, hi: np.ndarray | None = None) -> LpSolution:
        lp = self.lp
        lo = lp.lo if lo is None else np.asarray(lo, dtype=float)
        hi = lp.hi if hi is None else np.asarray(hi, dtype=float)
        if lo.shape != lp.lo.shape or hi.shape != lp.hi.shape:
            raise ValueError("bound vectors do not match the program")
        if np.any(lo > hi):
            return LpSolution("infeasible")
        # only push the columns whose bounds moved since the last solve
        moved = np.flatnonzero((lo != self._lo) | (hi != self._hi)).astype(np.int32)
        if moved.size:
            self._h.changeColsBounds(len(moved), moved, _hinf(lo[moved]), _hinf(hi[moved]))
            self._lo, self._hi = lo, hi
        h = self._h
        h.run()
        status = h.getModelStatus()
        iters = int(h.getInfo().simplex_iteration_count)
        ms = highspy.HighsModelStatus
        if status == ms.kUnboundedOrInfeasible:
            status = self._feasibility_status()
        if status == ms.kInfeasible:
            return LpSolution("infeasible", iterations=iters)
        if status == ms.kUnbounded:
            return LpSolution("unbounded", iterations=iters)
        if status != ms.kOptimal:
            raise SolverFailure(f"HiGHS stopped: {h.modelStatusToString(status)}", iters)
        sol = h.getSolution()
        x = np.asarray(sol.col_value, dtype=float)
        y = np.asarray(sol.row_dual, dtype=float)
        rc = lp.c - self._AT @ y
        out = LpSolution("optimal", x, y, rc, float(lp.c @ x) + lp.offset, iters)
        _check_certificate(lp, out, lo, hi, self._senses)
        return out

    def _feasibility_status(self):
        # zero objective: optimal means feasible, so the original was unbounded
        h = self._h
        n = len(self._cols)
        h.changeColsCost(n, self._cols, np.zeros(n))
        h.run()
        feasible = h.getModelStatus() == highspy.HighsModelStatus.kOptimal
        h.changeColsCost(n, self._cols, np.asarray(self.lp.c, dtype=float))
        h.clearSolver()
        ms = highspy.HighsModelStatus
        return ms.kUnbounded if feasible else ms.kInfeasible


def _hinf(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.clip(v, -highspy.kHighsInf, highspy.kHighsInf)


# -- dense revised simplex ----------------------------------------------------------


class _RevisedSimplex:
    """Two-phase primal revised simplex, Bland's rule, explicit basis inverse.

    Variable bounds are folded in by shifting (``x = lo + x'``), reflecting
    (``x = hi - x'``) or splitting free variables; finite upper bounds become
    extra rows. Artificial variables that stay basic at zero after phase one
    are never allowed to move off zero.
    """

    REFACTOR_EVERY = 50
    PIVOT_TOL = 1e-9
    COST_TOL = 1e-9

    def __init__(self, lp: LinearProgram, max_iter: int):
        self.lp = lp
        self.max_iter = max_iter
        self.iterations = 0

    def _standardize(self):
        lp = self.lp
        m, n = lp.shape
        A = lp.A.toarray()
        shift = np.zeros(n)
        # x = shift + M x_std
        cols: list[tuple[int, float]] = []
        upper_rows: list[tuple[int, float]] = []
        for j in range(n):
            lo, hi = lp.lo[j], lp.hi[j]
            if lo == hi:
                shift[j] = lo
            elif math.isfinite(lo):
                shift[j] = lo
                cols.append((j, 1.0))
                if math.isfinite(hi):
                    upper_rows.append((len(cols) - 1, hi - lo))
            elif math.isfinite(hi):
                shift[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        n_std = len(cols)
        M = np.zeros((n, n_std))
        for k, (j, s) in enumerate(cols):
            M[j, k] = s
        A_std = A @ M
        b_std = lp.b - A @ shift
        c_std = M.T @ lp.c
        senses = list(lp.senses)
        if upper_rows:
            extra = np.zeros((len(upper_rows), n_std))
            for r, (k, u) in enumerate(upper_rows):
                extra[r, k] = 1.0
            A_std = np.vstack([A_std, extra])
            b_std = np.concatenate([b_std, [u for _, u in upper_rows]])
            senses += [LE] * len(upper_rows)
        flip = b_std < 0
        A_std[flip] *= -1.0
        b_std = np.where(flip, -b_std, b_std)
        senses = [
            (GE if s == LE else LE if s == GE else EQ) if f else s for s, f in zip(senses, flip)
        ]
        return A_std, b_std, c_std, senses, flip, shift, M

    def solve(self) -> LpSolution:
        lp = self.lp
        m0, n0 = lp.shape
        A_std, b, c_std, senses, flip, shift, M = self._standardize()
        m, n_std = A_std.shape

        n_slack = sum(1 for s in senses if s != EQ)
        n_art = sum(1 for s in senses if s != LE)
        width = n_std + n_slack + n_art
        A = np.zeros((m, width))
        A[:, :n_std] = A_std
        basis = np.empty(m, dtype=int)
        art_start = n_std + n_slack
        k_slack, k_art = n_std, art_start
        for i, s in enumerate(senses):
            if s == LE:
                A[i, k_slack] = 1.0
                basis[i] = k_slack
                k_slack += 1
            elif s == GE:
                A[i, k_slack] = -1.0
                k_slack += 1
                A[i, k_art] = 1.0
                basis[i] = k_art
                k_art += 1
            else:
                A[i, k_art] = 1.0
                basis[i] = k_art
                k_art += 1
        self.A, self.b, self.art_start = A, b, art_start

        binv = np.eye(m)
        if n_art:
            cost1 = np.zeros(width)
            cost1[art_start:] = 1.0
            status, basis, binv = self._run(cost1, basis, binv, allow_art=True)
            xb = binv @ b
            infeas = float(cost1[basis] @ xb)
            if infeas > PRIMAL_TOL * max(1.0, np.abs(b).max(initial=0.0)):
                return LpSolution("infeasible", iterations=self.iterations)

        cost2 = np.zeros(width)
        cost2[:n_std] = c_std
        status, basis, binv = self._run(cost2, basis, binv, allow_art=False)
        if status == "unbounded":
            return LpSolution("unbounded", iterations=self.iterations)

        binv = np.linalg.inv(A[:, basis])
        xb = binv @ b
        x_full = np.zeros(width)
        x_full[basis] = np.maximum(xb, 0.0)
        x = shift + M @ x_full[:n_std]
        x = np.clip(x, lp.lo, lp.hi)
        y_std = cost2[basis] @ binv
        y = np.where(flip[:m0], -y_std[:m0], y_std[:m0])
        rc = lp.c - lp.A.T @ y
        return LpSolution("optimal", x, y, rc, float(lp.c @ x) + lp.offset, self.iterations)

    def _run(self, cost, basis, binv, allow_art):
        A, b = self.A, self.b
        m, width = A.shape
        eligible = np.ones(width, dtype=bool)
        if not allow_art:
            eligible[self.art_start :] = False
        since_refactor = 0
        while True:
            if since_refactor >= self.REFACTOR_EVERY:
                binv = np.linalg.inv(A[:, basis])
                since_refactor = 0
            xb = binv @ b
            y = cost[basis] @ binv
            d = cost - y @ A
            d[basis] = 0.0
            candidates = np.flatnonzero((d < -self.COST_TOL) & eligible)
            if candidates.size == 0:
                return "optimal", basis, binv
            if self.iterations >= self.max_iter:
                raise SolverFailure(f"simplex iteration cap reached after {self.iterations} iterations", self.iterations)
            self.iterations += 1
            since_refactor += 1
            enter = int(candidates[0])
            alpha = binv @ A[:, enter]
            ratios = np.full(m, math.inf)
            pos = alpha > self.PIVOT_TOL
            ratios[pos] = np.maximum(xb[pos], 0.0) / alpha[pos]
            if not allow_art:
                stuck = (basis >= self.art_start) & (np.abs(alpha) > self.PIVOT_TOL)
                ratios[stuck] = 0.0
            best = ratios.min()
            if math.isinf(best):
                return "unbounded", basis, binv
            tied = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))
            leave = int(tied[np.argmin(basis[tied])])
            piv = alpha[leave]
            binv[leave] /= piv
            others = np.arange(m) != leave
            binv[others] -= np.outer(alpha[others], binv[leave])
            basis[leave] = enter
