"""Hour-indexed series, forecast windows and rolling-origin archives.

Hours are absolute integers. A window issued at origin ``t`` predicts
hours ``t+1 .. t+H``; the origin hour itself is observed, never forecast.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CoverageError, IncompatibleWindowError, SizeMismatchError, WrongKindError

POINT = "point"
SCENARIO = "scenario"


def _frozen_array(values, ndim):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise SizeMismatchError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if arr.size == 0:
        raise SizeMismatchError("values must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    start: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "values", _frozen_array(self.values, 1))

    def __len__(self):
        return self.values.shape[0]

    @property
    def end(self):
        """One past the last covered hour."""
        return self.start + len(self)

    def covers(self, hour, length=1):
        return self.start <= hour and hour + length <= self.end

    def slice(self, hour, length):
        """Values for the absolute hours ``[hour, hour + length)``."""
        if length < 0:
            raise ValueError("length must be non-negative")
        if not self.covers(hour, length):
            if hour < self.start:
                lo, hi = hour, min(self.start, hour + length)
            else:
                lo, hi = max(hour, self.end), hour + length
            raise CoverageError(
                f"hours [{lo}, {hi}) are not covered by series spanning [{self.start}, {self.end})"
            )
        i = hour - self.start
        return self.values[i:i + length]

    def at(self, hour):
        return float(self.slice(hour, 1)[0])

    def window(self, hour, length):
        return TimeSeries(hour, self.slice(hour, length))

    def __add__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        if other.start != self.start or len(other) != len(self):
            raise SizeMismatchError("series are not aligned")
        return TimeSeries(self.start, self.values + other.values)

    def __sub__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        if other.start != self.start or len(other) != len(self):
            raise SizeMismatchError("series are not aligned")
        return TimeSeries(self.start, self.values - other.values)


@dataclass(frozen=True)
class ForecastWindow:
    """Forecast issued at ``origin`` for the hours ``origin+1 .. origin+horizon``.

    Exactly one of ``point_values`` (shape ``(H,)``) and ``scenarios``
    (shape ``(N, H)``) is set, according to ``kind``.
    """
    origin: int
    horizon: int
    kind: str
    point_values: np.ndarray | None = None
    scenarios: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "origin", int(self.origin))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.kind == POINT:
            if self.point_values is None or self.scenarios is not None:
                raise WrongKindError("point window needs point_values and no scenarios")
            vals = _frozen_array(self.point_values, 1)
            if vals.shape[0] != self.horizon:
                raise SizeMismatchError(
                    f"point window has {vals.shape[0]} values, horizon is {self.horizon}")
            object.__setattr__(self, "point_values", vals)
        elif self.kind == SCENARIO:
            if self.scenarios is None or self.point_values is not None:
                raise WrongKindError("scenario window needs scenarios and no point_values")
            sc = _frozen_array(self.scenarios, 2)
            if sc.shape[1] != self.horizon:
                raise SizeMismatchError(
                    f"scenario rows have {sc.shape[1]} entries, horizon is {self.horizon}")
            object.__setattr__(self, "scenarios", sc)
        else:
            raise WrongKindError(f"unknown window kind {self.kind!r}")

    @classmethod
    def point(cls, origin, values):
        values = np.asarray(values, dtype=np.float64)
        return cls(origin, values.shape[0], POINT, point_values=values)

    @classmethod
    def scenario(cls, origin, scenarios):
        scenarios = np.atleast_2d(np.asarray(scenarios, dtype=np.float64))
        return cls(origin, scenarios.shape[1], SCENARIO, scenarios=scenarios)

    @property
    def n_scenarios(self):
        return 1 if self.kind == POINT else self.scenarios.shape[0]

    @property
    def first_target(self):
        return self.origin + 1

    @property
    def targets(self):
        return np.arange(self.origin + 1, self.origin + self.horizon + 1)

    def as_matrix(self):
        """Values as an ``(N, H)`` matrix; point windows give a single row."""
        if self.kind == POINT:
            return self.point_values[np.newaxis, :]
        return self.scenarios

    def values_for(self, hour, length):
        """Columns for target hours ``[hour, hour + length)`` as an ``(N, length)`` matrix."""
        i = hour - self.first_target
        if i < 0 or i + length > self.horizon:
            raise CoverageError(
                f"window at origin {self.origin} covers [{self.first_target}, "
                f"{self.first_target + self.horizon}), requested [{hour}, {hour + length})")
        return self.as_matrix()[:, i:i + length]


def overlap_region(w_prev, w_next):
    """Target hours forecast by both windows.

    Returns ``(hour, prev_value, next_value)`` triples; the values are floats
    for point windows and length-N arrays for scenario windows. The result is
    empty once the origin spacing reaches the horizon.
    """
    if w_prev.kind != w_next.kind or w_prev.horizon != w_next.horizon:
        raise IncompatibleWindowError(
            f"cannot compare {w_prev.kind}/H={w_prev.horizon} with {w_next.kind}/H={w_next.horizon}")
    if w_next.origin <= w_prev.origin:
        raise IncompatibleWindowError("w_next must have a later origin than w_prev")
    first = w_next.first_target
    last = w_prev.origin + w_prev.horizon
    if last < first:
        return []
    n = last - first + 1
    prev = w_prev.values_for(first, n)
    nxt = w_next.values_for(first, n)
    if w_prev.kind == POINT:
        return [(first + k, float(prev[0, k]), float(nxt[0, k])) for k in range(n)]
    return [(first + k, prev[:, k], nxt[:, k]) for k in range(n)]


@dataclass(frozen=True)
class ForecastArchive:
    horizon: int
    revision_interval: int
    windows: tuple = field(default_factory=tuple)

    def __post_init__(self):
        windows = tuple(self.windows)
        object.__setattr__(self, "windows", windows)
        if self.horizon < 1 or self.revision_interval < 1:
            raise ValueError("horizon and revision_interval must be >= 1")
        if not windows:
            raise ValueError("archive must contain at least one window")
        w0 = windows[0]
        for prev, w in zip(windows, windows[1:]):
            if w.origin - prev.origin != self.revision_interval:
                raise IncompatibleWindowError(
                    f"origin spacing {w.origin - prev.origin} at origin {w.origin}, "
                    f"expected {self.revision_interval}")
        for w in windows:
            if w.horizon != self.horizon or w.kind != w0.kind:
                raise IncompatibleWindowError(f"window at origin {w.origin} does not match the archive")
            if w.n_scenarios != w0.n_scenarios:
                raise IncompatibleWindowError(f"window at origin {w.origin} has a different scenario count")

    @property
    def kind(self):
        return self.windows[0].kind

    @property
    def n_scenarios(self):
        return self.windows[0].n_scenarios

    @property
    def origins(self):
        return np.array([w.origin for w in self.windows])

    @property
    def first_origin(self):
        return self.windows[0].origin

    @property
    def last_origin(self):
        return self.windows[-1].origin

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def latest(self, hour):
        """Newest window whose origin is at or before ``hour``."""
        k = (hour - self.first_origin) // self.revision_interval
        if k < 0:
            raise CoverageError(f"no forecast issued at or before hour {hour}")
        k = min(k, len(self.windows) - 1)
        return self.windows[k]

    def pairs(self):
        return list(zip(self.windows, self.windows[1:]))


def stack_series(series: Sequence[TimeSeries]):
    """Align several series on their common span and stack them row-wise."""
    start = max(s.start for s in series)
    end = min(s.end for s in series)
    if end <= start:
        raise CoverageError("series have no common span")
    return start, np.vstack([s.slice(start, end - start) for s in series])
