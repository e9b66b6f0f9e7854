"""Lookahead battery scheduling as a linear program.

For scenarios ``i`` (equal weights ``1/N``) and lookahead hours ``k`` the LP
minimizes::

    sum_i W_i sum_k [ u_ik + beta * s_ik ]

    u_ik >= e_ik * (price_k + w_co2 * carbon_k),  u_ik >= 0
    s_ik >= |e_ik - e_i,k-1|                      (first hour vs prev_net_load)
    e_ik  = sum_b (base_ibk + xpos_bk + xneg_bk)

with SOC bounds enforced through the running sum of
``eta_c * xpos + xneg / eta_d``. Battery actions are shared by all
scenarios; only the cost auxiliaries are per scenario.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .battery import Plan
from .errors import CommitmentError, ConfigError
from .lp import LinearProgram, solve_lp

# Tie-breaker against simultaneous charge and discharge; keeps the LP's
# SOC prediction equal to what executing the net action produces.
THROUGHPUT_PENALTY = 1e-7


@dataclass
class LookaheadProblem:
    origin: int
    batteries: list
    soc0: np.ndarray
    base: np.ndarray          # (N, B, H) net base load per scenario and building
    price: np.ndarray         # (H,)
    carbon: np.ndarray        # (H,)
    beta: float = 0.0
    w_co2: float = 1.0
    prev_net_load: float | None = None

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=np.float64)
        if self.base.ndim == 2:
            self.base = self.base[np.newaxis]
        self.price = np.asarray(self.price, dtype=np.float64).reshape(-1)
        self.carbon = np.asarray(self.carbon, dtype=np.float64).reshape(-1)
        self.soc0 = np.asarray(self.soc0, dtype=np.float64).reshape(-1)
        n, b, h = self.base.shape
        if n < 1 or h < 1:
            raise ConfigError("lookahead needs at least one scenario and one hour")
        if b != len(self.batteries) or self.soc0.shape[0] != b:
            raise ConfigError("base loads, batteries and initial SOC disagree on building count")
        if self.price.shape[0] != h or self.carbon.shape[0] != h:
            raise ConfigError("price/carbon length differs from the lookahead horizon")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")

    @property
    def n_scenarios(self):
        return self.base.shape[0]

    @property
    def n_buildings(self):
        return self.base.shape[1]

    @property
    def horizon(self):
        return self.base.shape[2]

    @property
    def weights(self):
        return np.full(self.n_scenarios, 1.0 / self.n_scenarios)


def build_lp(problem: LookaheadProblem, throughput_penalty=THROUGHPUT_PENALTY):
    N, B, H = problem.base.shape
    bats = problem.batteries
    anchored = problem.prev_net_load is not None
    n_s_hours = (H if anchored else H - 1) if problem.beta > 0 else 0
    k0 = 0 if anchored else 1

    n_x = B * H
    i_pos = 0
    i_neg = n_x
    i_u = 2 * n_x
    i_s = i_u + N * H
    n = i_s + N * n_s_hours
    blocks = {"xpos": slice(i_pos, i_neg), "xneg": slice(i_neg, i_u),
              "u": slice(i_u, i_s), "s": slice(i_s, n)}

    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    for b, bat in enumerate(bats):
        ub[i_pos + b * H:i_pos + (b + 1) * H] = bat.p_max
        lb[i_neg + b * H:i_neg + (b + 1) * H] = -bat.p_max
        ub[i_neg + b * H:i_neg + (b + 1) * H] = 0.0

    w = 1.0 / N
    c = np.zeros(n)
    c[i_u:i_s] = w
    c[i_s:n] = w * problem.beta
    c[i_pos:i_neg] = throughput_penalty
    c[i_neg:i_u] = -throughput_penalty

    n_rows = 2 * B * H + N * H + 2 * N * n_s_hours
    A = np.zeros((n_rows, n))
    rhs = np.zeros(n_rows)
    row = 0
    tri = np.tril(np.ones((H, H)))
    for b, bat in enumerate(bats):
        pos = slice(i_pos + b * H, i_pos + (b + 1) * H)
        neg = slice(i_neg + b * H, i_neg + (b + 1) * H)
        # running SOC change <= headroom, and >= -(available energy)
        A[row:row + H, pos] = bat.eta_charge * tri
        A[row:row + H, neg] = tri / bat.eta_discharge
        rhs[row:row + H] = bat.soc_max - problem.soc0[b]
        row += H
        A[row:row + H, pos] = -bat.eta_charge * tri
        A[row:row + H, neg] = -tri / bat.eta_discharge
        rhs[row:row + H] = problem.soc0[b] - bat.soc_min
        row += H

    unit = problem.price + problem.w_co2 * problem.carbon
    district = problem.base.sum(axis=1)          # (N, H)
    eye = np.eye(H)
    for i in range(N):
        rows = slice(row, row + H)
        for b in range(B):
            A[rows, i_pos + b * H:i_pos + (b + 1) * H] = eye * unit
            A[rows, i_neg + b * H:i_neg + (b + 1) * H] = eye * unit
        A[rows, i_u + i * H:i_u + (i + 1) * H] = -eye
        rhs[rows] = -unit * district[i]
        row += H

    if n_s_hours:
        # d_k = x_k - x_{k-1} summed over buildings, for k = k0 .. H-1
        diff = eye[k0:] - np.eye(H, k=-1)[k0:]
        base_prev = np.empty((N, H))
        base_prev[:, 1:] = district[:, :-1]
        base_prev[:, 0] = problem.prev_net_load if anchored else 0.0
        ramp_base = (district - base_prev)[:, k0:]
        for i in range(N):
            s_cols = slice(i_s + i * n_s_hours, i_s + (i + 1) * n_s_hours)
            for sign in (1.0, -1.0):
                rows = slice(row, row + n_s_hours)
                for b in range(B):
                    A[rows, i_pos + b * H:i_pos + (b + 1) * H] = sign * diff
                    A[rows, i_neg + b * H:i_neg + (b + 1) * H] = sign * diff
                A[rows, s_cols] = -np.eye(n_s_hours)
                rhs[rows] = -sign * ramp_base[i]
                row += n_s_hours
    return LinearProgram(c, A, rhs, lb, ub, blocks=blocks)


@dataclass
class LookaheadSolution:
    actions: np.ndarray | None    # (B, H) net grid-side battery energy
    x_pos: np.ndarray | None
    x_neg: np.ndarray | None
    objective: float
    status: str
    iterations: int = 0
    residual: float = 0.0

    @property
    def ok(self):
        return self.status == "optimal"


def solve_lookahead(problem: LookaheadProblem, tol=1e-9, solver="simplex", pivot_rule="dantzig",
                    throughput_penalty=THROUGHPUT_PENALTY):
    lp = build_lp(problem, throughput_penalty)
    sol = solve_lp(lp, tol=tol, solver=solver, pivot_rule=pivot_rule)
    if not sol.ok:
        return LookaheadSolution(None, None, None, np.nan, sol.status, sol.iterations)
    B, H = problem.n_buildings, problem.horizon
    x_pos = lp.block(sol.x, "xpos").reshape(B, H)
    x_neg = lp.block(sol.x, "xneg").reshape(B, H)
    # report the cost part only, without the tie-break penalty
    cost = float(lp.c[lp.blocks["u"]] @ lp.block(sol.x, "u") + lp.c[lp.blocks["s"]] @ lp.block(sol.x, "s"))
    return LookaheadSolution(x_pos + x_neg, x_pos, x_neg, cost, "optimal",
                             sol.iterations, sol.residual)


def plan_from_solution(problem: LookaheadProblem, solution: LookaheadSolution, commit_v):
    """Commit the first ``commit_v`` hours of the solution as an executable plan."""
    if not 1 <= commit_v <= problem.horizon:
        raise CommitmentError(
            f"commitment {commit_v} outside 1..{problem.horizon} (lookahead length)")
    if not solution.ok:
        raise ConfigError(f"cannot commit a {solution.status} solution")
    return Plan(problem.origin + 1, solution.actions[:, :commit_v])
