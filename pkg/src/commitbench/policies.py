"""Online control loops: FHC with separate forecast/plan commitments, and AFHC.

Timing: the controller acts at the end of hour ``t`` having observed it.
A decision at ``t`` plans hours ``t+1 ..``; the first decision happens at
``env.start - 1``. With forecast commitment ``v_F`` and plan commitment
``v_O`` a new plan is made every ``v_O`` hours from the newest forecast
window available at that hour, which may be up to ``v_F - 1`` hours old.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .battery import EnvironmentSeries, Plan, SimulationTrace, execute, realized_cost, score
from .errors import ConfigError, CoverageError, SolverError
from .forecast import NoiseModel, ScenarioGenConfig, generate_point_archive, generate_scenario_archive, substream
from .metrics import POINT_METRICS, SCENARIO_METRICS, archive_metric, in_use_metrics
from .mpc import LookaheadProblem, plan_from_solution, solve_lookahead
from .series import ForecastArchive, TimeSeries

FHC = "fhc"
AFHC = "afhc"


@dataclass(frozen=True)
class PolicyConfig:
    algorithm: str = FHC
    v_F: int = 1
    v_O: int = 1
    horizon: int = 24
    beta: float = 0.0
    w_co2: float = 1.0
    stochastic: bool = False
    scenarios: ScenarioGenConfig = field(default_factory=ScenarioGenConfig)
    solver: str = "simplex"
    pivot_rule: str = "dantzig"
    tol: float = 1e-9

    def __post_init__(self):
        if self.algorithm not in (FHC, AFHC):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not 1 <= self.v_O <= self.v_F <= self.horizon:
            raise ConfigError(
                f"need 1 <= v_O <= v_F <= H, got v_O={self.v_O}, v_F={self.v_F}, H={self.horizon}")
        if self.algorithm == AFHC and self.v_O != self.v_F:
            raise ConfigError("AFHC uses a single commitment: set v_O = v_F")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")


def _as_list(archives, env):
    if isinstance(archives, ForecastArchive):
        archives = [archives]
    archives = list(archives)
    if len(archives) != env.n_buildings:
        raise ConfigError(f"{len(archives)} forecast archives for {env.n_buildings} buildings")
    return archives


def _check_archives(archives, cfg):
    kinds = {a.kind for a in archives}
    if len(kinds) != 1 or len({a.n_scenarios for a in archives}) != 1:
        raise ConfigError("per-building archives must agree on kind and scenario count")
    for a in archives:
        if a.revision_interval != cfg.v_F:
            raise ConfigError(f"archive revision interval {a.revision_interval} != v_F={cfg.v_F}")
        if a.horizon != cfg.horizon:
            raise ConfigError(f"archive horizon {a.horizon} != H={cfg.horizon}")
    expected = "scenario" if cfg.stochastic else "point"
    if archives[0].kind != expected:
        raise ConfigError(f"stochastic={cfg.stochastic} needs {expected} archives")


def decision_hours(env: EnvironmentSeries, every, phase=0):
    """Hours at which a plan is made: the first origin, then ``phase + k * every`` after it."""
    t0 = env.start - 1
    last = env.score_end - 1
    hours = [t0]
    t = t0 + (phase if phase else every)
    while t < last:
        hours.append(t)
        t += every
    return hours


def _lookahead(env, archives, cfg, t, soc, prev_net_load):
    windows = [a.latest(t) for a in archives]
    origin = windows[0].origin
    stale = t - origin
    h = min(cfg.horizon - stale, env.score_end - 1 - t)
    if h < 1:
        raise CoverageError(f"the newest forecast at hour {t} (origin {origin}) no longer covers hour {t + 1}")
    # (N, B, h)
    base = np.stack([w.as_matrix()[:, stale:stale + h] for w in windows], axis=1)
    return LookaheadProblem(
        origin=t, batteries=env.batteries(), soc0=soc, base=base,
        price=env.price.slice(t + 1, h), carbon=env.carbon.slice(t + 1, h),
        beta=cfg.beta, w_co2=cfg.w_co2, prev_net_load=prev_net_load)


def run_fhc(env: EnvironmentSeries, archives, cfg: PolicyConfig, phase=0, log=None):
    """Simulate FHC over the scored period of ``env``.

    ``phase`` shifts the regular decision grid (used by AFHC); the first
    plan then only covers the hours up to the first shifted decision.
    ``log``, if a list, receives ``(hour, horizon, iterations)`` per solve.
    """
    archives = _as_list(archives, env)
    _check_archives(archives, cfg)
    hours = decision_hours(env, cfg.v_O, phase)
    soc = env.soc_init()
    prev = None
    parts = []
    for k, t in enumerate(hours):
        nxt = hours[k + 1] if k + 1 < len(hours) else env.score_end - 1
        problem = _lookahead(env, archives, cfg, t, soc, prev)
        sol = solve_lookahead(problem, tol=cfg.tol, solver=cfg.solver, pivot_rule=cfg.pivot_rule)
        if not sol.ok:
            raise SolverError(f"lookahead at hour {t} ended {sol.status}")
        if log is not None:
            log.append((t, problem.horizon, sol.iterations))
        commit = min(nxt - t, problem.horizon)
        part = execute(env, plan_from_solution(problem, sol, commit), soc)
        soc = part.soc[:, -1]
        prev = float(part.net_load.values[-1])
        parts.append(part)
    return SimulationTrace.concat(parts)


@dataclass
class AfhcResult:
    trace: SimulationTrace
    constituents: list
    cost: float
    constituent_costs: list

    @property
    def jensen_gap(self):
        """Mean constituent cost minus AFHC cost; non-negative barring clips."""
        return float(np.mean(self.constituent_costs)) - self.cost


def run_afhc(env: EnvironmentSeries, archives, cfg: PolicyConfig):
    """Average the actions of ``v`` phase-shifted FHC(v) runs.

    Each constituent is a full FHC simulation with its own SOC, so it
    replans from the state its own actions produced. The executed action
    for every hour is the equal-weight mean of the constituents' actions,
    run on a separate battery that is used for scoring.
    """
    if cfg.v_O != cfg.v_F:
        raise ConfigError("AFHC uses a single commitment: set v_O = v_F")
    v = cfg.v_F
    fhc_cfg = replace(cfg, algorithm=FHC)
    constituents = [run_fhc(env, archives, fhc_cfg, phase=k) for k in range(v)]
    mean_actions = np.mean([c.actions for c in constituents], axis=0)
    trace = execute(env, Plan(env.start, mean_actions), env.soc_init())
    costs = [realized_cost(c, env, cfg.beta, cfg.w_co2) for c in constituents]
    return AfhcResult(trace, constituents, realized_cost(trace, env, cfg.beta, cfg.w_co2), costs)


def run_policy(env, archives, cfg: PolicyConfig):
    if cfg.algorithm == AFHC:
        return run_afhc(env, archives, cfg).trace
    return run_fhc(env, archives, cfg)


def building_truths(env: EnvironmentSeries):
    """Per-building net base load over the whole env, the series being forecast."""
    return [TimeSeries(env.start, b.load.values - b.pv.values) for b in env.buildings]


def make_archives(env, horizon, v_F, noise: NoiseModel, stochastic=False,
                  scenarios: ScenarioGenConfig | None = None):
    """One archive per building; each building gets its own named noise substream."""
    out = []
    for b, truth in enumerate(building_truths(env)):
        seed = int(substream(noise.seed, f"forecast/building{b}").integers(2 ** 62))
        point = generate_point_archive(truth, horizon, v_F, replace(noise, seed=seed))
        if stochastic:
            sc = scenarios or ScenarioGenConfig()
            sc_seed = int(substream(sc.seed, f"scenarios/building{b}").integers(2 ** 62))
            point = generate_scenario_archive(point, replace(sc, seed=sc_seed))
        out.append(point)
    return out


def forecast_metrics(env, archives):
    """Archive-level and in-use accuracy/stability metrics, averaged over buildings."""
    truths = building_truths(env)
    names = SCENARIO_METRICS if archives[0].kind == "scenario" else POINT_METRICS
    out = {}
    for name in names:
        vals = []
        for a, y in zip(archives, truths):
            if name in ("mac_v", "emd_v") and a.revision_interval >= a.horizon:
                vals = None
                break
            vals.append(archive_metric(a, y, name))
        out[f"archive_{name}"] = None if vals is None else float(np.mean(vals))
    in_use = [in_use_metrics(a, y, env.start - 1, env.score_end - 1) for a, y in zip(archives, truths)]
    for name in names:
        out[name] = float(np.mean([m[name] for m in in_use]))
    return out


@dataclass
class GridCell:
    v_F: int
    v_O: int
    kpi: object
    metrics: dict
    clips: int
    solves: int

    @property
    def avg_score(self):
        return self.kpi.avg_score

    @property
    def avg_score_with_grid(self):
        return self.kpi.avg_score_with_grid


def grid_pairs(v_max, v_min=1):
    return [(vf, vo) for vf in range(v_min, v_max + 1) for vo in range(v_min, vf + 1)]


def run_cell(env, archives, cfg: PolicyConfig, metrics=None, include_grid=True):
    log = []
    if cfg.algorithm == AFHC:
        trace = run_afhc(env, archives, cfg).trace
    else:
        trace = run_fhc(env, archives, cfg, log=log)
    kpi = score(trace, env, include_grid=include_grid)
    return GridCell(cfg.v_F, cfg.v_O, kpi, metrics if metrics is not None else forecast_metrics(env, archives),
                    int(trace.n_clips), len(log))


def run_decision_grid(env, noise: NoiseModel, base_cfg: PolicyConfig, v_max=12, v_min=1,
                      pairs=None, diagonal_only=False, include_grid=True):
    """Run every (v_F, v_O) cell with v_O <= v_F.

    Archives are regenerated per v_F from the same hourly error draws, so
    cells differ only in how often forecasts and plans are revised.
    Cells are returned in (v_F, v_O) order.
    """
    if pairs is None:
        pairs = [(v, v) for v in range(v_min, v_max + 1)] if diagonal_only else grid_pairs(v_max, v_min)
    cells = []
    cache = {}
    for v_F, v_O in pairs:
        if v_F not in cache:
            archives = make_archives(env, base_cfg.horizon, v_F, noise, base_cfg.stochastic,
                                     base_cfg.scenarios)
            cache = {v_F: (archives, forecast_metrics(env, archives))}
        archives, metrics = cache[v_F]
        cfg = replace(base_cfg, v_F=v_F, v_O=v_O)
        cells.append(run_cell(env, archives, cfg, metrics, include_grid))
    return cells
