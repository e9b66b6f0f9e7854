"""District environment: battery dynamics, plan execution and KPI scoring.

Sign convention: a battery action ``x`` is grid-side energy in kWh for one
hour, ``x > 0`` charges and ``x < 0`` discharges. The state of charge moves
by ``eta_charge * x`` when charging and by ``x / eta_discharge`` when
discharging, so discharging always lowers it.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConfigError, CoverageError, FormatError, NumericDomainError, PeriodError, SpecError
from .forecast import substream
from .series import TimeSeries

MONTH_HOURS = 730


@dataclass(frozen=True)
class BatterySpec:
    capacity: float = 6.4
    soc_min: float = 0.0
    soc_max: float = 6.4
    p_max: float = 5.0
    eta_charge: float = 0.95
    eta_discharge: float = 0.95
    soc_init: float = 0.0

    def __post_init__(self):
        if not self.capacity > 0:
            raise SpecError("capacity must be > 0")
        if not 0 <= self.soc_min < self.soc_max <= self.capacity:
            raise SpecError("need 0 <= soc_min < soc_max <= capacity")
        if not self.p_max > 0:
            raise SpecError("p_max must be > 0")
        for eta in (self.eta_charge, self.eta_discharge):
            if not 0 < eta <= 1:
                raise SpecError("efficiencies must lie in (0, 1]")
        if not self.soc_min <= self.soc_init <= self.soc_max:
            raise SpecError("initial SOC outside [soc_min, soc_max]")


@dataclass(frozen=True)
class Building:
    load: TimeSeries
    pv: TimeSeries
    battery: BatterySpec = BatterySpec()

    @property
    def base_net_load(self):
        return self.load - self.pv


@dataclass(frozen=True)
class EnvironmentSeries:
    """Aligned building and district series.

    ``scored_hours`` is the length of the evaluation period, counted from
    ``start``; any hours after it are lookahead data for the forecasts.
    """
    buildings: tuple
    price: TimeSeries
    carbon: TimeSeries
    scored_hours: int | None = None

    def __post_init__(self):
        buildings = tuple(self.buildings)
        object.__setattr__(self, "buildings", buildings)
        if not buildings:
            raise SpecError("environment needs at least one building")
        ref = self.price
        for s in [self.carbon] + [x for b in buildings for x in (b.load, b.pv)]:
            if s.start != ref.start or len(s) != len(ref):
                raise SpecError("all environment series must cover the same hours")
        for name, s in [("price", self.price), ("carbon", self.carbon)] + \
                [(f"building {i} load", b.load) for i, b in enumerate(buildings)] + \
                [(f"building {i} pv", b.pv) for i, b in enumerate(buildings)]:
            if np.any(s.values < 0):
                raise SpecError(f"{name} has negative values")
        scored = len(ref) if self.scored_hours is None else int(self.scored_hours)
        if not 1 <= scored <= len(ref):
            raise SpecError("scored_hours must lie within the series length")
        object.__setattr__(self, "scored_hours", scored)

    @property
    def start(self):
        return self.price.start

    @property
    def end(self):
        return self.price.end

    @property
    def score_end(self):
        return self.start + self.scored_hours

    @property
    def n_buildings(self):
        return len(self.buildings)

    def batteries(self):
        return [b.battery for b in self.buildings]

    def base_matrix(self, hour, length):
        """Per-building ``load - pv`` for ``[hour, hour + length)``, shape ``(B, length)``."""
        return np.vstack([b.load.slice(hour, length) - b.pv.slice(hour, length)
                          for b in self.buildings])

    def district_base(self, hour, length):
        return self.base_matrix(hour, length).sum(axis=0)

    def soc_init(self):
        return np.array([b.battery.soc_init for b in self.buildings])


@dataclass(frozen=True)
class Plan:
    start: int
    actions: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.actions, dtype=np.float64))
        a.setflags(write=False)
        object.__setattr__(self, "actions", a)
        object.__setattr__(self, "start", int(self.start))

    @property
    def length(self):
        return self.actions.shape[1]

    @classmethod
    def zeros(cls, env, start=None, length=None):
        start = env.start if start is None else start
        length = env.scored_hours if length is None else length
        return cls(start, np.zeros((env.n_buildings, length)))


@dataclass(frozen=True)
class SimulationTrace:
    start: int
    net_load: TimeSeries
    soc: np.ndarray
    actions: np.ndarray
    requested: np.ndarray
    clips: np.ndarray
    price_cost: np.ndarray
    carbon_cost: np.ndarray

    @property
    def length(self):
        return len(self.net_load)

    @property
    def end(self):
        return self.start + self.length

    @property
    def n_clips(self):
        return int(np.sum(self.clips))

    @classmethod
    def concat(cls, parts):
        parts = list(parts)
        for a, b in zip(parts, parts[1:]):
            if b.start != a.end:
                raise CoverageError(f"trace gap between hours {a.end} and {b.start}")
        soc = np.hstack([parts[0].soc[:, :1]] + [p.soc[:, 1:] for p in parts])
        return cls(
            start=parts[0].start,
            net_load=TimeSeries(parts[0].start, np.concatenate([p.net_load.values for p in parts])),
            soc=soc,
            actions=np.hstack([p.actions for p in parts]),
            requested=np.hstack([p.requested for p in parts]),
            clips=np.sum([p.clips for p in parts], axis=0),
            price_cost=np.concatenate([p.price_cost for p in parts]),
            carbon_cost=np.concatenate([p.carbon_cost for p in parts]),
        )


def _battery_arrays(env):
    bats = env.batteries()
    return (np.array([b.soc_min for b in bats]), np.array([b.soc_max for b in bats]),
            np.array([b.p_max for b in bats]), np.array([b.eta_charge for b in bats]),
            np.array([b.eta_discharge for b in bats]))


def execute(env: EnvironmentSeries, plan: Plan, soc0=None):
    """Run ``plan`` against the real loads, clipping infeasible actions."""
    if plan.actions.shape[0] != env.n_buildings:
        raise SpecError(f"plan has {plan.actions.shape[0]} buildings, env has {env.n_buildings}")
    soc0 = env.soc_init() if soc0 is None else np.asarray(soc0, dtype=np.float64).reshape(-1)
    if soc0.shape[0] != env.n_buildings:
        raise SpecError("one initial SOC per building is required")
    if np.any(soc0 < 0):
        raise SpecError("initial SOC must be non-negative")
    soc_min, soc_max, p_max, eta_c, eta_d = _battery_arrays(env)
    if np.any(soc0 < soc_min - 1e-9) or np.any(soc0 > soc_max + 1e-9):
        raise SpecError("initial SOC outside [soc_min, soc_max]")
    base = env.base_matrix(plan.start, plan.length)
    executed, soc, clips = _kernels.battery_steps(
        np.ascontiguousarray(plan.actions), np.clip(soc0, soc_min, soc_max),
        soc_min, soc_max, p_max, eta_c, eta_d)
    net = base.sum(axis=0) + executed.sum(axis=0)
    price = env.price.slice(plan.start, plan.length)
    carbon = env.carbon.slice(plan.start, plan.length)
    return SimulationTrace(
        start=plan.start,
        net_load=TimeSeries(plan.start, net),
        soc=soc,
        actions=executed,
        requested=np.array(plan.actions),
        clips=clips,
        price_cost=net * price,
        carbon_cost=net * carbon,
    )


def _ratio(num, den):
    if den == 0.0:
        return 1.0 if num == 0.0 else math.inf
    return num / den


def ramping(net_load):
    return float(np.sum(np.abs(np.diff(np.asarray(net_load, dtype=np.float64)))))


def load_factor(net_load, month=MONTH_HOURS):
    """Mean over scoring months of (monthly mean / monthly max)."""
    e = np.asarray(net_load, dtype=np.float64)
    if e.shape[0] < month:
        raise PeriodError(f"load factor needs at least one {month}-hour month, got {e.shape[0]} hours")
    if e.shape[0] % month:
        raise PeriodError(f"trace length {e.shape[0]} is not a multiple of {month} hours")
    months = e.reshape(-1, month)
    peaks = months.max(axis=1)
    if np.any(peaks <= 0):
        raise NumericDomainError("a scoring month has non-positive peak net load")
    return float(np.mean(months.mean(axis=1) / peaks))


@dataclass
class KpiReport:
    C: float
    G: float
    R: float
    L: float | None
    D: float | None
    avg_score: float
    avg_score_with_grid: float | None
    c_entry: float
    c_baseline: float
    g_entry: float
    g_baseline: float
    r_baseline: float
    l_baseline: float | None
    clips: int = 0

    def to_dict(self):
        return asdict(self)


def score(trace: SimulationTrace, env: EnvironmentSeries, include_grid=True):
    """KPIs of ``trace`` normalized by the zero-battery baseline over the same hours."""
    e = trace.net_load.values
    base = env.district_base(trace.start, trace.length)
    price = env.price.slice(trace.start, trace.length)
    carbon = env.carbon.slice(trace.start, trace.length)

    c_e = float(np.sum(np.maximum(0.0, e * price)))
    c_b = float(np.sum(np.maximum(0.0, base * price)))
    g_e = float(np.sum(np.maximum(0.0, e * carbon)))
    g_b = float(np.sum(np.maximum(0.0, base * carbon)))
    C = _ratio(c_e, c_b)
    G = _ratio(g_e, g_b)
    r_e = ramping(e)
    r_b = ramping(base)
    L = L_b = D = avg_grid = None
    if include_grid:
        L = load_factor(e)
        L_b = load_factor(base)
        D = 0.5 * (_ratio(r_e, r_b) + _ratio(1.0 - L, 1.0 - L_b))
        avg_grid = (C + G + D) / 3.0
    return KpiReport(C=C, G=G, R=r_e, L=L, D=D, avg_score=(C + G) / 2.0,
                     avg_score_with_grid=avg_grid, c_entry=c_e, c_baseline=c_b,
                     g_entry=g_e, g_baseline=g_b, r_baseline=r_b, l_baseline=L_b,
                     clips=trace.n_clips)


def realized_cost(trace: SimulationTrace, env: EnvironmentSeries, beta=0.0, w_co2=1.0,
                  prev_net_load=None):
    """The lookahead objective evaluated on executed net load.

    ``sum(max(0, E * (price + w_co2 * carbon))) + beta * sum |E_t - E_{t-1}|``;
    the first ramp is measured against ``prev_net_load`` when given.
    """
    e = trace.net_load.values
    price = env.price.slice(trace.start, trace.length)
    carbon = env.carbon.slice(trace.start, trace.length)
    energy = float(np.sum(np.maximum(0.0, e * (price + w_co2 * carbon))))
    ramp = ramping(e)
    if prev_net_load is not None:
        ramp += abs(float(e[0]) - float(prev_net_load))
    return energy + beta * ramp


@dataclass(frozen=True)
class SyntheticConfig:
    n_buildings: int = 1
    n_days: int = 243
    tail_hours: int = 0
    seed: int = 0
    mean_load: float = 2.0
    load_amplitude: float = 0.45
    load_peak_hour: float = 19.0
    load_noise: float = 0.08
    pv_peak: float = 2.5
    pv_noise: float = 0.05
    price_offpeak: float = 0.21
    price_peak: float = 0.54
    peak_hours: tuple = (16, 21)
    carbon_mean: float = 0.45
    carbon_amplitude: float = 0.08
    battery: BatterySpec = field(default_factory=BatterySpec)

    def __post_init__(self):
        if self.n_buildings < 1 or self.n_days < 1:
            raise ConfigError("n_buildings and n_days must be positive")
        if self.tail_hours < 0:
            raise ConfigError("tail_hours must be non-negative")
        for name in ("mean_load", "pv_peak", "price_offpeak", "price_peak", "carbon_mean"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    @property
    def scored_hours(self):
        hours = self.n_days * 24
        return int(math.ceil(hours / MONTH_HOURS)) * MONTH_HOURS


def make_synthetic_env(cfg: SyntheticConfig = SyntheticConfig()):
    """Daily-sinusoid loads and PV with Gaussian perturbations.

    The scored period is padded up to a whole number of 730-hour months;
    ``tail_hours`` extra hours follow it as forecast lookahead data.
    """
    n = cfg.scored_hours + cfg.tail_hours
    h = np.arange(n, dtype=np.float64)
    hod = h % 24.0
    day = np.floor(h / 24.0)
    buildings = []
    for b in range(cfg.n_buildings):
        rng = substream(cfg.seed, f"env/building{b}")
        phase = rng.normal(0.0, 1.0)
        scale = cfg.mean_load * rng.uniform(0.8, 1.2)
        shape = (1.0
                 + cfg.load_amplitude * np.cos(2 * np.pi * (hod - cfg.load_peak_hour - phase) / 24.0)
                 + 0.5 * cfg.load_amplitude * np.cos(4 * np.pi * (hod - 8.0 - phase) / 24.0))
        load = np.maximum(0.0, scale * shape + rng.normal(0.0, cfg.load_noise * scale, n))
        clouds = rng.uniform(0.4, 1.0, int(day[-1]) + 1)[day.astype(int)]
        sun = np.maximum(0.0, np.sin(np.pi * (hod - 6.0) / 12.0))
        pv = cfg.pv_peak * sun * clouds
        pv = np.maximum(0.0, pv + sun * rng.normal(0.0, cfg.pv_noise * max(cfg.pv_peak, 1e-12), n))
        if cfg.pv_peak == 0.0:
            pv = np.zeros(n)
        buildings.append(Building(TimeSeries(0, load), TimeSeries(0, pv), cfg.battery))
    lo, hi = cfg.peak_hours
    price = np.where((hod >= lo) & (hod < hi), cfg.price_peak, cfg.price_offpeak)
    carbon = (cfg.carbon_mean
              + cfg.carbon_amplitude * np.cos(2 * np.pi * (hod - 13.0) / 24.0) * -1.0
              + 0.5 * cfg.carbon_amplitude * np.sin(2 * np.pi * h / (24.0 * 30.0)))
    carbon = np.maximum(carbon, 0.0)
    return EnvironmentSeries(tuple(buildings), TimeSeries(0, price), TimeSeries(0, carbon),
                             scored_hours=cfg.scored_hours)


BUILDING_HEADER = ("hour", "building", "load_kwh", "pv_kwh")
DISTRICT_HEADER = ("hour", "price", "carbon")


def write_env(env: EnvironmentSeries, directory):
    """Write ``buildings.csv``, ``district.csv`` and ``env.json`` (batteries, scored hours)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    n = len(env.price)
    with (d / "buildings.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BUILDING_HEADER)
        for i, b in enumerate(env.buildings):
            for k in range(n):
                w.writerow((env.start + k, i, repr(float(b.load.values[k])), repr(float(b.pv.values[k]))))
    with (d / "district.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DISTRICT_HEADER)
        for k in range(n):
            w.writerow((env.start + k, repr(float(env.price.values[k])), repr(float(env.carbon.values[k]))))
    meta = {"scored_hours": env.scored_hours,
            "batteries": [asdict(b.battery) for b in env.buildings]}
    (d / "env.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return d


def _read_rows(path, header):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or tuple(x.strip() for x in got) != header:
            raise FormatError(f"{path}: row 1: expected header {','.join(header)}")
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}: row {rowno}: expected {len(header)} fields")
            try:
                vals = [int(row[0])] + [float(x) for x in row[1:]]
            except ValueError as exc:
                raise FormatError(f"{path}: row {rowno}: {exc}") from None
            if not all(math.isfinite(v) for v in vals[1:]):
                raise FormatError(f"{path}: row {rowno}: non-finite value")
            yield rowno, vals


def read_env(directory, batteries=None):
    """Inverse of :func:`write_env`. ``batteries`` overrides the specs in ``env.json``."""
    d = Path(directory)
    per_building = {}
    for rowno, (hour, bid, load, pv) in _read_rows(d / "buildings.csv", BUILDING_HEADER):
        rows = per_building.setdefault(int(bid), [])
        if rows and hour != rows[-1][0] + 1:
            raise FormatError(f"{d / 'buildings.csv'}: row {rowno}: hours must be consecutive")
        rows.append((hour, load, pv))
    district = []
    for rowno, (hour, price, carbon) in _read_rows(d / "district.csv", DISTRICT_HEADER):
        if district and hour != district[-1][0] + 1:
            raise FormatError(f"{d / 'district.csv'}: row {rowno}: hours must be consecutive")
        district.append((hour, price, carbon))
    if not per_building or not district:
        raise FormatError(f"{d}: empty environment files")
    meta = {}
    if (d / "env.json").exists():
        meta = json.loads((d / "env.json").read_text(encoding="utf-8"))
    if batteries is None:
        specs = meta.get("batteries")
        batteries = [BatterySpec(**s) for s in specs] if specs else [BatterySpec()] * len(per_building)
    ids = sorted(per_building)
    if ids != list(range(len(ids))):
        raise FormatError(f"{d / 'buildings.csv'}: building ids must be 0..{len(ids) - 1}")
    if len(batteries) != len(ids):
        raise ConfigError(f"{len(ids)} buildings but {len(batteries)} battery specs")
    start = district[0][0]
    buildings = []
    for i in ids:
        rows = per_building[i]
        if rows[0][0] != start or len(rows) != len(district):
            raise FormatError(f"building {i} does not cover the district hours")
        buildings.append(Building(TimeSeries(start, [r[1] for r in rows]),
                                  TimeSeries(start, [r[2] for r in rows]), batteries[i]))
    return EnvironmentSeries(tuple(buildings), TimeSeries(start, [r[1] for r in district]),
                             TimeSeries(start, [r[2] for r in district]),
                             scored_hours=meta.get("scored_hours"))
