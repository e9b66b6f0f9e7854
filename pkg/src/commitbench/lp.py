"""Dense linear programs and a bundled two-phase bounded simplex solver.

Problems have the form::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lb <= x <= ub        (lb finite, ub may be +inf)

``solve_lp(lp, solver="highs")`` hands the same problem to scipy's HiGHS
instead, which is how external solvers plug in.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import SolverError

STATUS_NAMES = {
    _kernels.OPTIMAL: "optimal",
    _kernels.INFEASIBLE: "infeasible",
    _kernels.UNBOUNDED: "unbounded",
    _kernels.ITERATION_LIMIT: "iteration-limit",
}


@dataclass
class LinearProgram:
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        n = self.c.shape[0]
        self.A_ub = np.asarray(self.A_ub, dtype=np.float64).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=np.float64).reshape(-1)
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        self.A_eq = np.asarray(self.A_eq, dtype=np.float64).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=np.float64).reshape(-1)
        self.lb = np.broadcast_to(np.asarray(self.lb, dtype=np.float64), (n,)).copy()
        self.ub = np.broadcast_to(np.asarray(self.ub, dtype=np.float64), (n,)).copy()
        if self.A_ub.shape[0] != self.b_ub.shape[0] or self.A_eq.shape[0] != self.b_eq.shape[0]:
            raise ValueError("constraint matrix and right-hand side sizes differ")
        if not np.all(np.isfinite(self.lb)):
            raise ValueError("lower bounds must be finite")
        if np.any(self.ub < self.lb):
            raise ValueError("upper bound below lower bound")

    @property
    def n_vars(self):
        return self.c.shape[0]

    @property
    def n_rows(self):
        return self.A_ub.shape[0] + self.A_eq.shape[0]

    def block(self, x, name):
        return x[self.blocks[name]]

    def objective(self, x):
        return float(self.c @ x)

    def residual(self, x):
        """Largest constraint or bound violation at ``x``."""
        viol = [0.0]
        if self.A_ub.shape[0]:
            viol.append(float(np.max(self.A_ub @ x - self.b_ub)))
        if self.A_eq.shape[0]:
            viol.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        viol.append(float(np.max(self.lb - x)))
        finite = np.isfinite(self.ub)
        if finite.any():
            viol.append(float(np.max(x[finite] - self.ub[finite])))
        return max(viol)


@dataclass
class LpSolution:
    x: np.ndarray | None
    objective: float
    status: str
    iterations: int = 0
    residual: float = 0.0

    @property
    def ok(self):
        return self.status == "optimal"


def _initial_tableau(lp, tol):
    """Slack basis for ``y = x - lb``, crashed towards feasibility.

    Inequality rows whose slack would start negative first try a crash
    pivot on a structural column; rows that stay infeasible, and all
    equality rows, get an artificial variable for phase 1.
    """
    n = lp.n_vars
    m_ub = lp.A_ub.shape[0]
    m_eq = lp.A_eq.shape[0]
    m = m_ub + m_eq
    rhs = np.concatenate([lp.b_ub - lp.A_ub @ lp.lb, lp.b_eq - lp.A_eq @ lp.lb])
    ncol = n + m_ub + m
    tab = np.zeros((m, ncol))
    tab[:m_ub, :n] = lp.A_ub
    tab[m_ub:, :n] = lp.A_eq
    tab[np.arange(m_ub), n + np.arange(m_ub)] = 1.0
    upper = np.full(ncol, np.inf)
    upper[:n] = lp.ub - lp.lb
    xb = rhs.copy()
    basis = np.empty(m, dtype=np.int64)
    basis[:m_ub] = n + np.arange(m_ub)
    basis[m_ub:] = n + m_ub + np.arange(m_ub, m)
    is_basic = np.zeros(ncol, dtype=bool)
    is_basic[basis[:m_ub]] = True

    if m_ub and np.any(xb[:m_ub] < -tol):
        _kernels.crash_basis(tab, xb, basis, is_basic, upper, n, m_ub, tol)

    need_art = np.zeros(m, dtype=bool)
    need_art[:m_ub] = xb[:m_ub] < -tol
    need_art[m_ub:] = True
    for i in np.flatnonzero(need_art):
        if xb[i] < 0:
            tab[i] *= -1.0
            xb[i] = -xb[i]
        tab[i, n + m_ub + i] = 1.0
        basis[i] = n + m_ub + i
    is_basic[:] = False
    is_basic[basis] = True
    art_cols = n + m_ub + np.flatnonzero(need_art)
    return tab, xb, basis, is_basic, upper, n + m_ub, art_cols


def _reduced_costs(tab, basis, cost):
    return cost - cost[basis] @ tab


def solve_lp(lp: LinearProgram, tol=1e-9, max_iter=None, pivot_rule="dantzig", solver="simplex"):
    """Solve ``lp``; never returns a non-optimal point as optimal.

    ``pivot_rule`` is ``"bland"`` (Bland's rule throughout) or ``"dantzig"``
    (largest reduced cost, switching to Bland's rule after a run of
    degenerate pivots so cycling cannot occur). Both are deterministic.
    """
    if solver == "highs":
        return _solve_highs(lp, tol)
    if solver != "simplex":
        raise ValueError(f"unknown solver {solver!r}")
    if pivot_rule not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {pivot_rule!r}")
    bland = pivot_rule == "bland"
    n = lp.n_vars
    tab, xb, basis, is_basic, upper, n_real, art_cols = _initial_tableau(lp, tol)
    m, ncol = tab.shape
    if max_iter is None:
        max_iter = 50 * (m + ncol) + 1000
    at_upper = np.zeros(ncol, dtype=bool)
    allowed = np.zeros(ncol, dtype=bool)
    allowed[:n_real] = True
    upper[n_real:] = 0.0
    upper[art_cols] = np.inf
    iters = 0

    if art_cols.size:
        cost1 = np.zeros(ncol)
        cost1[art_cols] = 1.0
        d = _reduced_costs(tab, basis, cost1)
        allowed[art_cols] = True
        status, it = _kernels.simplex_iterate(tab, xb, basis, is_basic, at_upper, upper, d,
                                              allowed, bland, tol, max_iter, 64)
        iters += it
        if status == _kernels.ITERATION_LIMIT:
            return LpSolution(None, np.nan, "iteration-limit", iters)
        infeas = float(np.sum(xb[basis >= n_real]))
        scale = max(1.0, float(np.max(np.abs(xb))) if m else 1.0)
        if infeas > 1e3 * tol * scale:
            return LpSolution(None, np.nan, "infeasible", iters)
        # artificials are pinned at zero for phase 2
        upper[n_real:] = 0.0
        allowed[n_real:] = False

    cost2 = np.zeros(ncol)
    cost2[:n] = lp.c
    d = _reduced_costs(tab, basis, cost2)
    status, it = _kernels.simplex_iterate(tab, xb, basis, is_basic, at_upper, upper, d,
                                          allowed, bland, tol, max_iter, 64)
    iters += it
    if status != _kernels.OPTIMAL:
        return LpSolution(None, np.nan, STATUS_NAMES[status], iters)
    y = np.where(at_upper, upper, 0.0)
    y[basis] = xb
    x = y[:n] + lp.lb
    # snap bound noise from the tableau updates
    x = np.minimum(np.maximum(x, lp.lb), lp.ub)
    return LpSolution(x, lp.objective(x), "optimal", iters, lp.residual(x))


def _solve_highs(lp, tol):
    from scipy.optimize import linprog

    bounds = list(zip(lp.lb, [None if not np.isfinite(u) else u for u in lp.ub]))
    res = linprog(lp.c,
                  A_ub=lp.A_ub if lp.A_ub.shape[0] else None,
                  b_ub=lp.b_ub if lp.A_ub.shape[0] else None,
                  A_eq=lp.A_eq if lp.A_eq.shape[0] else None,
                  b_eq=lp.b_eq if lp.A_eq.shape[0] else None,
                  bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": max(tol, 1e-10),
                           "dual_feasibility_tolerance": max(tol, 1e-10)})
    status = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}.get(res.status)
    if status is None:
        raise SolverError(f"HiGHS failed: {res.message}")
    if status != "optimal":
        return LpSolution(None, np.nan, status, int(getattr(res, "nit", 0)))
    x = np.asarray(res.x)
    return LpSolution(x, lp.objective(x), "optimal", int(res.nit), lp.residual(x))
