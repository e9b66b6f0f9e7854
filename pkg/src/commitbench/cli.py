"""``commitbench`` command line: gen-data, sweep, curves, correlate, bounds, simulate."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import CommitBenchError, ConfigError, DataError, SolverError

log = logging.getLogger("commitbench")


def _overrides(args):
    """Nested config dict from the flags that were actually given."""
    o = {}

    def put(section, key, value):
        if value is not None:
            (o.setdefault(section, {}) if section else o)[key] = value

    put(None, "seed", args.seed)
    put(None, "output", args.out)
    put(None, "workers", args.workers)
    put("env", "dir", args.env_dir)
    syn = {}
    if args.n_buildings is not None:
        syn["n_buildings"] = args.n_buildings
    if args.n_days is not None:
        syn["n_days"] = args.n_days
    if syn:
        o.setdefault("env", {})["synthetic"] = syn
    put("forecast", "kind", args.noise)
    put("forecast", "sigma", args.sigma)
    put("forecast", "a", args.a)
    put("forecast", "archive", args.archive)
    put("forecast", "n_scenarios", args.n_scenarios)
    put("policy", "algorithm", args.algorithm)
    put("policy", "horizon", args.horizon)
    put("policy", "v_min", args.v_min)
    put("policy", "v_max", args.v_max)
    put("policy", "v_F", args.v_F)
    put("policy", "v_O", args.v_O)
    put("policy", "beta", args.beta)
    put("policy", "w_co2", args.w_co2)
    put("policy", "solver", args.solver)
    if args.stochastic:
        put("policy", "stochastic", True)
    return o


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON experiment config")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--env-dir", help="environment CSV directory (default: synthetic)")
    common.add_argument("--n-buildings", type=int)
    common.add_argument("--n-days", type=int)
    common.add_argument("--noise", choices=["iid", "exp_decay"])
    common.add_argument("--sigma", type=float)
    common.add_argument("--a", type=float, help="exp-decay rate")
    common.add_argument("--archive", help="forecast-archive CSV (simulate)")
    common.add_argument("--n-scenarios", type=int)
    common.add_argument("--algorithm", choices=["fhc", "afhc"])
    common.add_argument("--horizon", type=int)
    common.add_argument("--v-min", type=int)
    common.add_argument("--v-max", type=int)
    common.add_argument("--v-F", dest="v_F", type=int)
    common.add_argument("--v-O", dest="v_O", type=int)
    common.add_argument("--beta", type=float)
    common.add_argument("--w-co2", type=float)
    common.add_argument("--solver", choices=["simplex", "highs"])
    common.add_argument("--stochastic", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="commitbench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="write a synthetic environment as CSV")
    sub.add_parser("sweep", parents=[common], help="(v_F, v_O) grid -> results.json, grid.csv")
    sub.add_parser("curves", parents=[common], help="metrics and scores for v = v_F = v_O -> curves.csv")
    c = sub.add_parser("correlate", parents=[common], help="curves.csv -> corr.json")
    c.add_argument("--curves", required=True, help="curves.csv to read")
    sub.add_parser("bounds", parents=[common], help="bound trade-off over v -> tradeoff.csv")
    sub.add_parser("simulate", parents=[common], help="one policy run -> trace.csv, simulation.json")
    return p


def run(argv=None):
    from pathlib import Path

    from . import harness
    from .config import load_config

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = load_config(args.config, _overrides(args))
    cmd = args.command
    if cmd == "gen-data":
        path = harness.cmd_gen_data(cfg)
        print(f"wrote environment to {path}")
    elif cmd == "sweep":
        harness.cmd_sweep(cfg)
        print(f"wrote {Path(cfg['output']) / 'results.json'} and grid.csv")
    elif cmd == "curves":
        harness.cmd_curves(cfg)
        print(f"wrote {Path(cfg['output']) / 'curves.csv'}")
    elif cmd == "correlate":
        out = Path(cfg["output"])
        out.mkdir(parents=True, exist_ok=True)
        harness.cmd_correlate(args.curves, out / "corr.json")
        print(f"wrote {out / 'corr.json'}")
    elif cmd == "bounds":
        curve = harness.cmd_bounds(cfg)
        print(f"wrote {Path(cfg['output']) / 'tradeoff.csv'} "
              f"(argmin iid v={curve.argmin_iid}, exp-decay v={curve.argmin_expdecay})")
    elif cmd == "simulate":
        kpi = harness.cmd_simulate(cfg)
        print(f"avg_score={kpi.avg_score:.6f} avg_score_with_grid={kpi.avg_score_with_grid:.6f}")
    return 0


def main(argv=None):
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4
    except CommitBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
