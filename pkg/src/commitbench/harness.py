"""Experiment recipes behind the CLI verbs and their file formats."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .battery import Plan, SimulationTrace, execute, score, write_env
from .bounds import tradeoff_curve
from .config import bound_params, build_env, noise_model, policy_config
from .errors import ConfigError, FormatError, UndefinedMetricError
from .forecast import import_archive
from .metrics import pearson
from .policies import (forecast_metrics, grid_pairs, make_archives, run_afhc, run_cell,
                       run_fhc)

SCORES = ("avg_score", "avg_score_with_grid")
POINT_COLUMNS = ("mae", "mac_v", "mac_h")
SCENARIO_COLUMNS = ("es", "emd_v", "emd_h")
CURVE_SCORES = ("score", "score_with_grid")


def dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")
    return path


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _out_dir(cfg):
    d = Path(cfg["output"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_gen_data(cfg, out=None):
    env = build_env(cfg)
    return write_env(env, out or _out_dir(cfg))


def _cell_task(args):
    cfg, stochastic, v_F, v_Os = args
    env = build_env(cfg)
    noise = noise_model(cfg, env)
    base = policy_config(cfg, stochastic=stochastic, algorithm="fhc")
    archives = make_archives(env, base.horizon, v_F, noise, stochastic, base.scenarios)
    metrics = forecast_metrics(env, archives)
    return [run_cell(env, archives, replace(base, v_F=v_F, v_O=v_O), metrics) for v_O in v_Os]


def _run_grid(cfg, stochastic, pairs):
    by_vf = {}
    for v_F, v_O in pairs:
        by_vf.setdefault(v_F, []).append(v_O)
    tasks = [(cfg, stochastic, v_F, v_Os) for v_F, v_Os in by_vf.items()]
    if cfg["workers"] > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            chunks = list(pool.map(_cell_task, tasks))
    else:
        chunks = [_cell_task(t) for t in tasks]
    return [c for chunk in chunks for c in chunk]


def _cell_record(cell):
    kpi = {k: _clean(v) for k, v in cell.kpi.to_dict().items()}
    return {"v_F": cell.v_F, "v_O": cell.v_O,
            "avg_score": _clean(cell.avg_score),
            "avg_score_with_grid": _clean(cell.avg_score_with_grid),
            "kpi": kpi, "metrics": {k: _clean(v) for k, v in cell.metrics.items()},
            "clips": cell.clips, "solves": cell.solves}


def mark_row_best(records):
    """Flag the lowest score per v_F row (first v_O wins ties)."""
    for key in SCORES:
        rows = {}
        for r in records:
            rows.setdefault(r["v_F"], []).append(r)
        for cells in rows.values():
            vals = [c[key] for c in cells if c[key] is not None]
            best = min(vals) if vals else None
            marked = False
            for c in cells:
                hit = not marked and best is not None and c[key] == best
                c[f"row_best_{key}"] = hit
                marked = marked or hit
    return records


def sweep(cfg):
    """Run the decision grid(s) and return the results document."""
    pol = cfg["policy"]
    pairs = grid_pairs(pol["v_max"], pol["v_min"])
    runs = ["deterministic"] + (["stochastic"] if pol["stochastic"] else [])
    grids = {}
    for run in runs:
        cells = _run_grid(cfg, run == "stochastic", pairs)
        grids[run] = mark_row_best([_cell_record(c) for c in cells])
    return {"version": __version__, "config": cfg, "grids": grids}


def write_grid_csv(results, path):
    """One row per (run, score, v_F) with a column per v_O, best cell named in ``best_v_O``."""
    pol = results["config"]["policy"]
    v_os = list(range(pol["v_min"], pol["v_max"] + 1))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "score", "v_F", "best_v_O"] + [str(v) for v in v_os])
        for run, cells in results["grids"].items():
            for key in SCORES:
                rows = {}
                for c in cells:
                    rows.setdefault(c["v_F"], {})[c["v_O"]] = c
                for v_F, row in rows.items():
                    best = next(vo for vo, c in row.items() if c[f"row_best_{key}"])
                    vals = ["" if vo not in row or row[vo][key] is None else repr(row[vo][key])
                            for vo in v_os]
                    w.writerow([run, key, v_F, best] + vals)
    return path


def read_grid_csv(path):
    """Inverse of :func:`write_grid_csv`: ``{(run, score): {v_F: {v_O: value}}}``."""
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        v_os = [int(v) for v in header[4:]]
        for row in reader:
            table = out.setdefault((row[0], row[1]), {})
            table[int(row[2])] = {vo: float(x) for vo, x in zip(v_os, row[4:]) if x != ""}
    return out


def cmd_sweep(cfg):
    out = _out_dir(cfg)
    results = sweep(cfg)
    dump_json(results, out / "results.json")
    write_grid_csv(results, out / "grid.csv")
    return results


def curves(cfg):
    """Rows ``v = v_F = v_O`` over the configured range: metrics and both scores."""
    pol = cfg["policy"]
    stochastic = bool(pol["stochastic"])
    pairs = [(v, v) for v in range(pol["v_min"], pol["v_max"] + 1)]
    cells = _run_grid(cfg, stochastic, pairs)
    cols = SCENARIO_COLUMNS if stochastic else POINT_COLUMNS
    rows = []
    for c in cells:
        row = {"v": c.v_F}
        row.update({k: c.metrics[k] for k in cols})
        row["score"] = c.avg_score
        row["score_with_grid"] = c.avg_score_with_grid
        rows.append(row)
    return rows


def write_curves_csv(rows, path):
    cols = list(rows[0].keys())
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([r[c] if c == "v" else repr(float(r[c])) for c in cols])
    return path


def read_curves_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "v":
            raise FormatError(f"{path}: row 1: expected a header starting with 'v'")
        rows = []
        for rowno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"{path}: row {rowno}: expected {len(header)} fields")
            try:
                rows.append({h: (int(x) if h == "v" else float(x)) for h, x in zip(header, row)})
            except ValueError as exc:
                raise FormatError(f"{path}: row {rowno}: {exc}") from None
    return rows


def cmd_curves(cfg):
    out = _out_dir(cfg)
    rows = curves(cfg)
    write_curves_csv(rows, out / "curves.csv")
    return rows


def correlate(rows):
    """Pearson correlation of every metric column with every score column.

    Zero-variance pairs come out as ``None``.
    """
    if len(rows) < 3:
        raise ConfigError(f"correlation needs at least 3 curve rows, got {len(rows)}")
    metric_cols = [k for k in rows[0] if k not in ("v",) + CURVE_SCORES]
    out = {}
    for score_col in CURVE_SCORES:
        ys = [r[score_col] for r in rows]
        table = {}
        for m in metric_cols:
            try:
                table[m] = pearson([r[m] for r in rows], ys)
            except UndefinedMetricError:
                table[m] = None
        out[score_col] = table
    return out


def cmd_correlate(curves_path, out_path):
    rows = read_curves_csv(curves_path)
    corr = correlate(rows)
    dump_json({"version": __version__, "source": str(curves_path), "correlations": corr}, out_path)
    return corr


TRADEOFF_HEADER = ("v", "bound_iid", "bound_expdecay", "argmin_iid", "argmin_expdecay")


def cmd_bounds(cfg, out=None):
    params, v_max = bound_params(cfg)
    curve = tradeoff_curve(params, v_max)
    out = Path(out) if out else _out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "tradeoff.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRADEOFF_HEADER)
        for v, b_iid, b_exp in curve.rows:
            w.writerow([v, repr(b_iid), "" if b_exp is None else repr(b_exp),
                        curve.argmin_iid, "" if curve.argmin_expdecay is None else curve.argmin_expdecay])
    dump_json({"version": __version__, **curve.metadata(),
               "qualitative": "analytic bounds; not a statement about simulator cost"},
              out / "tradeoff.json")
    return curve


def read_tradeoff_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRADEOFF_HEADER:
            raise FormatError(f"{path}: row 1: expected header {','.join(TRADEOFF_HEADER)}")
        return [{"v": int(r[0]), "bound_iid": float(r[1]),
                 "bound_expdecay": float(r[2]) if r[2] else None,
                 "argmin_iid": int(r[3]), "argmin_expdecay": int(r[4]) if r[4] else None}
                for r in reader]


def simulate(cfg):
    """Single policy run: returns (env, trace, kpi, extra)."""
    env = build_env(cfg)
    pol = cfg["policy"]
    stochastic = bool(pol["stochastic"])
    pcfg = policy_config(cfg)
    if cfg["forecast"]["archive"] is not None:
        kind = "scenario" if stochastic else "point"
        paths = cfg["forecast"]["archive"]
        paths = [paths] if isinstance(paths, str) else list(paths)
        archives = [import_archive(p, kind) for p in paths]
        pcfg = replace(pcfg, v_F=archives[0].revision_interval, horizon=archives[0].horizon,
                       v_O=min(pcfg.v_O, archives[0].revision_interval))
    else:
        archives = make_archives(env, pcfg.horizon, pcfg.v_F, noise_model(cfg, env), stochastic,
                                 pcfg.scenarios)
    extra = {}
    if pcfg.algorithm == "afhc":
        res = run_afhc(env, archives, pcfg)
        trace = res.trace
        extra = {"afhc_cost": res.cost, "constituent_costs": res.constituent_costs}
    else:
        trace = run_fhc(env, archives, pcfg)
    kpi = score(trace, env, include_grid=True)
    extra["metrics"] = forecast_metrics(env, archives)
    return env, trace, kpi, extra


def write_trace_csv(trace: SimulationTrace, path):
    B = trace.actions.shape[0]
    cols = ["hour", "net_load", "price_cost", "carbon_cost"]
    for b in range(B):
        cols += [f"soc_{b}", f"action_{b}", f"requested_{b}"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for k in range(trace.length):
            row = [trace.start + k, repr(float(trace.net_load.values[k])),
                   repr(float(trace.price_cost[k])), repr(float(trace.carbon_cost[k]))]
            for b in range(B):
                row += [repr(float(trace.soc[b, k + 1])), repr(float(trace.actions[b, k])),
                        repr(float(trace.requested[b, k]))]
            w.writerow(row)
    return path


def read_trace_actions(path):
    """Executed actions ``(B, L)`` and start hour from a trace CSV."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    idx = [i for i, h in enumerate(header) if h.startswith("action_")]
    acts = np.array([[float(r[i]) for i in idx] for r in rows]).T
    return int(rows[0][0]), acts


def cmd_simulate(cfg):
    out = _out_dir(cfg)
    env, trace, kpi, extra = simulate(cfg)
    write_trace_csv(trace, out / "trace.csv")
    dump_json({"version": __version__, "config": cfg,
               "kpi": {k: _clean(v) for k, v in kpi.to_dict().items()},
               "clips": int(trace.n_clips),
               **{k: v for k, v in extra.items()}}, out / "simulation.json")
    return kpi


def replay(env, path):
    """Re-execute the actions stored in a trace CSV (they are feasible, so nothing clips)."""
    start, acts = read_trace_actions(path)
    return execute(env, Plan(start, acts), env.soc_init())
