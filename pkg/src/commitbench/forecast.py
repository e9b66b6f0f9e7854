"""Rolling-origin forecast generation and the forecast-archive CSV format.

Forecasts are ground truth plus structured noise, so forecast quality is a
controlled variable. Two error models are provided:

``iid``
    independent Gaussian error for every (origin, lead) pair.
``exp_decay``
    ``err(t, i) = sum_{s<i} c * a**s * e(t+i-s)`` where ``e`` is a per-hour
    Gaussian innovation stream shared by all origins. Revisions of the same
    target hour are therefore correlated and the error shrinks as the
    origin approaches the target.

All randomness comes from numpy's PCG64 generator seeded through named
substreams (see :func:`substream`).
"""
from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, CoverageError, FormatError, WrongKindError
from .series import POINT, SCENARIO, ForecastArchive, ForecastWindow, TimeSeries

PRNG_ALGORITHM = "PCG64"
ARCHIVE_HEADER = ("origin", "target", "scenario", "value")


def substream(seed, name):
    """Independent generator for the stream ``name`` under a master ``seed``.

    The stream key is a CRC32 of the name, so it is stable across runs and
    platforms (unlike ``hash``).
    """
    key = zlib.crc32(name.encode("utf-8"))
    ss = np.random.SeedSequence(int(seed), spawn_key=(key,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "iid"
    sigma: float = 0.0
    a: float = 0.0
    c: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("iid", "exp_decay"):
            raise ConfigError(f"unknown noise model {self.kind!r}")
        if not self.sigma >= 0:
            raise ConfigError("sigma must be >= 0")
        if self.kind == "exp_decay":
            if not 0 <= self.a < 1:
                raise ConfigError("exp_decay needs 0 <= a < 1")
            if not self.c > 0:
                raise ConfigError("exp_decay needs c > 0")

    def lead_std(self, lead):
        """Error standard deviation at forecast lead ``lead`` (1-based)."""
        lead = np.asarray(lead, dtype=np.float64)
        if self.kind == "iid":
            return np.full(lead.shape, self.sigma)
        if self.a == 0.0:
            return np.full(lead.shape, self.c * self.sigma)
        a2 = self.a ** 2
        return self.c * self.sigma * np.sqrt((1.0 - a2 ** lead) / (1.0 - a2))


def sigma_for_mae(target_mae, horizon, kind="exp_decay", a=0.0, c=1.0):
    """Innovation scale that gives an expected per-window MAE of ``target_mae``.

    Uses E|N(0, s^2)| = s * sqrt(2/pi) averaged over the leads 1..horizon.
    """
    unit = NoiseModel(kind=kind, sigma=1.0, a=a, c=c)
    mean_std = float(np.mean(unit.lead_std(np.arange(1, horizon + 1))))
    return target_mae / (mean_std * math.sqrt(2.0 / math.pi))


@dataclass(frozen=True)
class ScenarioGenConfig:
    n_scenarios: int = 20
    noise_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_scenarios < 1:
            raise ConfigError("n_scenarios must be >= 1")
        if not self.noise_scale >= 0:
            raise ConfigError("noise_scale must be >= 0")


def _origin_range(truth, horizon, first_origin, last_origin):
    first = truth.start - 1 if first_origin is None else int(first_origin)
    last = truth.end - 1 - horizon if last_origin is None else int(last_origin)
    if last < first:
        raise CoverageError(
            f"truth spanning [{truth.start}, {truth.end}) cannot feed a {horizon}-hour "
            f"window at origin {first}")
    # every target hour must be covered
    truth.slice(first + 1, last + horizon - first)
    return first, last


def _error_matrix(model, first, last, horizon):
    """Errors for every hourly origin in ``[first, last]``, shape ``(n, H)``."""
    n = last - first + 1
    if model.sigma == 0.0:
        return np.zeros((n, horizon))
    if model.kind == "iid":
        rng = substream(model.seed, "forecast/iid")
        return rng.normal(0.0, model.sigma, size=(n, horizon))
    rng = substream(model.seed, "forecast/innovations")
    # innovations for hours first+1 .. last+H
    e = rng.normal(0.0, model.sigma, size=n + horizon - 1)
    err = np.empty((n, horizon))
    err[:, 0] = model.c * e[0:n]
    for i in range(1, horizon):
        err[:, i] = model.c * e[i:i + n] + model.a * err[:, i - 1]
    return err


def generate_point_archive(truth: TimeSeries, horizon: int, revision_interval: int,
                           model: NoiseModel, first_origin=None, last_origin=None):
    """Point forecasts at origins ``first_origin + k * revision_interval``.

    ``first_origin`` defaults to ``truth.start - 1`` (first window forecasts
    the first truth hour) and ``last_origin`` to the last origin whose whole
    window lies inside ``truth``. Errors are drawn on the hourly origin grid
    and subsampled, so archives built with different revision intervals
    share their errors wherever their origins coincide.
    """
    if horizon < 1 or revision_interval < 1:
        raise ConfigError("horizon and revision interval must be >= 1")
    first, last = _origin_range(truth, horizon, first_origin, last_origin)
    err = _error_matrix(model, first, last, horizon)
    windows = []
    for origin in range(first, last + 1, revision_interval):
        y = truth.slice(origin + 1, horizon)
        windows.append(ForecastWindow.point(origin, y + err[origin - first]))
    return ForecastArchive(horizon, revision_interval, tuple(windows))


def generate_scenario_archive(point: ForecastArchive, cfg: ScenarioGenConfig):
    """Scenario sets ``yhat * (1 + noise_scale * z)`` around each point window."""
    if point.kind != POINT:
        raise WrongKindError("scenario generation needs a point archive")
    rng = substream(cfg.seed, "forecast/scenarios")
    first, last = point.first_origin, point.last_origin
    n_hourly = last - first + 1
    z = rng.standard_normal(size=(n_hourly, cfg.n_scenarios, point.horizon))
    windows = []
    for w in point:
        factor = 1.0 + cfg.noise_scale * z[w.origin - first]
        windows.append(ForecastWindow.scenario(w.origin, w.point_values[np.newaxis, :] * factor))
    return ForecastArchive(point.horizon, point.revision_interval, tuple(windows))


def write_archive(archive: ForecastArchive, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ARCHIVE_HEADER)
        for w in archive:
            mat = w.as_matrix()
            for j in range(mat.shape[0]):
                for i in range(w.horizon):
                    writer.writerow((w.origin, w.origin + 1 + i, j, repr(float(mat[j, i]))))
    return path


def import_archive(path, kind=POINT):
    """Read and validate a forecast-archive CSV.

    Rows must be sorted by (origin, scenario, target), each (origin, scenario)
    block must hold the contiguous targets ``origin+1 .. origin+H``, and
    origins must be evenly spaced. Violations raise :class:`FormatError`
    naming the offending row (1-based, header is row 1).
    """
    if kind not in (POINT, SCENARIO):
        raise WrongKindError(f"unknown archive kind {kind!r}")
    path = Path(path)
    blocks = {}
    order = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ARCHIVE_HEADER:
            raise FormatError(f"{path}: row 1: expected header {','.join(ARCHIVE_HEADER)}")
        prev_key = None
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise FormatError(f"{path}: row {rowno}: expected 4 fields, got {len(row)}")
            try:
                origin, target, scen = int(row[0]), int(row[1]), int(row[2])
                value = float(row[3])
            except ValueError as exc:
                raise FormatError(f"{path}: row {rowno}: {exc}") from None
            if not math.isfinite(value):
                raise FormatError(f"{path}: row {rowno}: non-finite value {row[3]!r}")
            if kind == POINT and scen != 0:
                raise FormatError(f"{path}: row {rowno}: point archives use scenario 0 only")
            key = (origin, scen, target)
            if prev_key is not None and key <= prev_key:
                raise FormatError(f"{path}: row {rowno}: rows not sorted by (origin, scenario, target)")
            prev_key = key
            block = blocks.setdefault((origin, scen), [])
            if target != origin + 1 + len(block):
                raise FormatError(
                    f"{path}: row {rowno}: expected target {origin + 1 + len(block)}, got {target}")
            block.append((rowno, value))
            if not order or order[-1] != (origin, scen):
                order.append((origin, scen))
    if not blocks:
        raise FormatError(f"{path}: no data rows")

    first_len = len(blocks[order[0]])
    for key in order:
        if len(blocks[key]) != first_len:
            raise FormatError(
                f"{path}: row {blocks[key][-1][0]}: ragged window at origin {key[0]}, "
                f"scenario {key[1]} has {len(blocks[key])} targets, expected {first_len}")
    origins = sorted({o for o, _ in order})
    by_origin = {o: [s for oo, s in order if oo == o] for o in origins}
    n_scen = len(by_origin[origins[0]])
    windows = []
    for o in origins:
        scens = by_origin[o]
        if scens != list(range(n_scen)):
            raise FormatError(
                f"{path}: row {blocks[(o, scens[0])][0][0]}: origin {o} has scenarios {scens}, "
                f"expected 0..{n_scen - 1}")
        mat = np.array([[v for _, v in blocks[(o, s)]] for s in scens])
        if kind == POINT:
            windows.append(ForecastWindow.point(o, mat[0]))
        else:
            windows.append(ForecastWindow.scenario(o, mat))
    spacing = origins[1] - origins[0] if len(origins) > 1 else 1
    for prev, o in zip(origins, origins[1:]):
        if o - prev != spacing:
            raise FormatError(
                f"{path}: row {blocks[(o, 0)][0][0]}: origin spacing {o - prev}, expected {spacing}")
    return ForecastArchive(first_len, spacing, tuple(windows))
