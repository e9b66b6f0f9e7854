"""Accuracy and stability metrics for point and scenario forecasts.

Vertical metrics compare forecasts for the same target hour issued at
different origins; horizontal metrics compare consecutive target hours of
one window. For the vertical metrics the comparison runs over whatever
target hours two windows share, so they work for any revision spacing.
"""
from __future__ import annotations

import numpy as np

from .errors import (CoverageError, NoOverlapError, NumericDomainError, SizeMismatchError,
                     UndefinedMetricError, WrongKindError)
from .series import POINT, SCENARIO, ForecastArchive, ForecastWindow, TimeSeries

POINT_METRICS = ("mae", "mac_v", "mac_h")
SCENARIO_METRICS = ("es", "emd_v", "emd_h")
VERTICAL = ("mac_v", "emd_v")


def _require(window, kind):
    if window.kind != kind:
        raise WrongKindError(f"expected a {kind} window, got {window.kind}")


def _shared(w_prev, w_next):
    """Matrices ``(N, n)`` of both windows restricted to their common target hours."""
    if w_prev.kind != w_next.kind:
        raise WrongKindError("windows differ in kind")
    first = max(w_prev.first_target, w_next.first_target)
    last = min(w_prev.origin + w_prev.horizon, w_next.origin + w_next.horizon)
    if last < first:
        raise NoOverlapError(
            f"windows at origins {w_prev.origin} and {w_next.origin} share no target hours")
    n = last - first + 1
    return w_prev.values_for(first, n), w_next.values_for(first, n)


def mae(window: ForecastWindow, truth: TimeSeries):
    _require(window, POINT)
    y = truth.slice(window.first_target, window.horizon)
    return float(np.mean(np.abs(y - window.point_values)))


def mac_v(w_prev: ForecastWindow, w_next: ForecastWindow):
    _require(w_prev, POINT)
    _require(w_next, POINT)
    prev, nxt = _shared(w_prev, w_next)
    return float(np.mean(np.abs(nxt[0] - prev[0])))


def mac_h(window: ForecastWindow):
    _require(window, POINT)
    if window.horizon < 2:
        raise UndefinedMetricError("horizontal change needs a horizon of at least 2")
    return float(np.mean(np.abs(np.diff(window.point_values))))


def emd_1d(p, q):
    """Wasserstein-1 distance between two equal-size empirical samples."""
    p = np.sort(np.asarray(p, dtype=np.float64).ravel())
    q = np.sort(np.asarray(q, dtype=np.float64).ravel())
    if p.size == 0 or q.size == 0:
        raise SizeMismatchError("samples must be non-empty")
    if p.size != q.size:
        raise SizeMismatchError(f"sample sizes differ: {p.size} vs {q.size}")
    return float(np.mean(np.abs(p - q)))


def _emd_columns(a, b):
    """Per-column EMD between two ``(N, n)`` scenario matrices."""
    return np.mean(np.abs(np.sort(a, axis=0) - np.sort(b, axis=0)), axis=0)


def emd_v(w_prev: ForecastWindow, w_next: ForecastWindow):
    _require(w_prev, SCENARIO)
    _require(w_next, SCENARIO)
    if w_prev.n_scenarios != w_next.n_scenarios:
        raise SizeMismatchError(
            f"scenario counts differ: {w_prev.n_scenarios} vs {w_next.n_scenarios}")
    prev, nxt = _shared(w_prev, w_next)
    return float(np.mean(_emd_columns(nxt, prev)))


def emd_h(window: ForecastWindow):
    _require(window, SCENARIO)
    if window.horizon < 2:
        raise UndefinedMetricError("horizontal change needs a horizon of at least 2")
    sc = window.scenarios
    return float(np.mean(_emd_columns(sc[:, 1:], sc[:, :-1])))


def energy_score(window: ForecastWindow, truth: TimeSeries, p=1.0):
    """Energy score per target hour (absolute-value norm), averaged over the window."""
    _require(window, SCENARIO)
    if p < 1:
        raise NumericDomainError("norm order p must be >= 1")
    y = truth.slice(window.first_target, window.horizon)
    sc = window.scenarios
    n = sc.shape[0]
    spread = np.abs(y[np.newaxis, :] - sc) ** p
    first = spread.mean(axis=0)
    pair = np.abs(sc[:, np.newaxis, :] - sc[np.newaxis, :, :]) ** p
    second = pair.sum(axis=(0, 1)) / (2.0 * n * n)
    inner = first - second
    scale = np.maximum(first, 1.0)
    if np.any(inner < -1e-12 * scale):
        raise NumericDomainError("energy score inner term is negative")
    inner = np.maximum(inner, 0.0)
    return float(np.mean(inner ** (1.0 / p)))


def window_metric(metric, window, truth=None, p=1.0):
    if metric == "mae":
        return mae(window, truth)
    if metric == "mac_h":
        return mac_h(window)
    if metric == "es":
        return energy_score(window, truth, p)
    if metric == "emd_h":
        return emd_h(window)
    raise ValueError(f"{metric!r} is not a per-window metric")


def pair_metric(metric, w_prev, w_next):
    if metric == "mac_v":
        return mac_v(w_prev, w_next)
    if metric == "emd_v":
        return emd_v(w_prev, w_next)
    raise ValueError(f"{metric!r} is not a vertical metric")


def archive_metric(archive: ForecastArchive, truth: TimeSeries | None, metric, p=1.0):
    """Mean per-window metric, or mean over consecutive window pairs for vertical ones."""
    if metric in VERTICAL:
        pairs = archive.pairs()
        if not pairs:
            raise NoOverlapError("a vertical metric needs at least two windows")
        if archive.revision_interval >= archive.horizon:
            raise NoOverlapError(
                f"revision interval {archive.revision_interval} >= horizon {archive.horizon}: "
                "consecutive windows do not overlap")
        return float(np.mean([pair_metric(metric, a, b) for a, b in pairs]))
    return float(np.mean([window_metric(metric, w, truth, p) for w in archive]))


def in_use_windows(archive: ForecastArchive, start, end):
    """The forecast a controller holds after observing each hour ``t`` in ``[start, end)``.

    At hour ``t`` that is the newest window issued at or before ``t``,
    re-based to origin ``t`` and cut to the target hours it still covers.
    """
    out = []
    for t in range(start, end):
        w = archive.latest(t)
        stale = t - w.origin
        remaining = w.horizon - stale
        if remaining < 1:
            raise CoverageError(f"no forecast covers hour {t + 1}")
        vals = w.as_matrix()[:, stale:]
        if w.kind == POINT:
            out.append(ForecastWindow.point(t, vals[0]))
        else:
            out.append(ForecastWindow.scenario(t, vals))
    return out


def in_use_metrics(archive: ForecastArchive, truth: TimeSeries, start, end, p=1.0):
    """Accuracy/stability of the forecasts as consumed hour by hour.

    Accuracy and horizontal stability are averaged over the hourly in-use
    windows; vertical stability is the mean change between the windows held
    at consecutive hours (zero between revisions).
    """
    wins = in_use_windows(archive, start, end)
    names = POINT_METRICS if archive.kind == POINT else SCENARIO_METRICS
    acc, vert, hor = names
    out = {acc: float(np.mean([window_metric(acc, w, truth, p) for w in wins]))}
    if len(wins) < 2:
        raise NoOverlapError("vertical stability needs at least two hours")
    out[vert] = float(np.mean([pair_metric(vert, a, b) for a, b in zip(wins, wins[1:])]))
    out[hor] = float(np.mean([window_metric(hor, w) for w in wins if w.horizon >= 2]))
    return out


def pearson(xs, ys):
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise SizeMismatchError("pearson needs two equal-length 1-d sequences")
    if x.size < 2:
        raise UndefinedMetricError("pearson needs at least two points")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise UndefinedMetricError("zero variance: correlation undefined")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))
