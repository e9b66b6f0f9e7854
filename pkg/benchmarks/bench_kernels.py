"""Compare the numba kernels with their pure-numpy/Python counterparts.

    python benchmarks/bench_kernels.py [--repeat 5]

Times a batch of 24-hour lookahead solves with each simplex kernel pair and
a year of battery stepping with the compiled and interpreted step loop.
Both simplex paths must reach the same objective on every problem.
"""
import argparse
from timeit import default_timer as timer

import numpy as np

from commitbench import _kernels
from commitbench._accel import USE_NUMBA
from commitbench.battery import SyntheticConfig, make_synthetic_env
from commitbench.mpc import LookaheadProblem, solve_lookahead

PATHS = {
    "numba": (_kernels._iterate_loop, _kernels._crash_loop),
    "numpy": (_kernels._iterate_vec, _kernels._crash_vec),
}


def problems(n, n_scenarios, beta):
    env = make_synthetic_env(SyntheticConfig(n_days=30, tail_hours=24))
    rng = np.random.default_rng(0)
    out = []
    for t in range(n):
        base = env.base_matrix(t, 24)[np.newaxis] + rng.normal(0, 0.2, (n_scenarios, 1, 24))
        out.append(LookaheadProblem(t - 1, env.batteries(), [rng.uniform(0, 6.4)], base,
                                    env.price.slice(t, 24), env.carbon.slice(t, 24),
                                    beta=beta, prev_net_load=1.0))
    return out


def time_solves(path, probs, repeat):
    _kernels.simplex_iterate, _kernels.crash_basis = PATHS[path]
    objs = [solve_lookahead(p).objective for p in probs[:2]]  # warm-up / compile
    best = np.inf
    for _ in range(repeat):
        t0 = timer()
        objs = [solve_lookahead(p).objective for p in probs]
        best = min(best, timer() - t0)
    return best / len(probs), np.array(objs)


def time_battery(repeat):
    req = np.random.default_rng(1).normal(0, 3, (1, 8760))
    args = (np.zeros(1), np.zeros(1), np.full(1, 6.4), np.full(1, 5.0), np.full(1, 0.95), np.full(1, 0.95))
    fns = {"numba": _kernels.battery_steps, "python": _kernels.battery_steps.py_func}
    out = {}
    for name, fn in fns.items():
        fn(req, *args)
        best = min(_timed(fn, req, args) for _ in range(repeat))
        out[name] = best
    return out


def _timed(fn, req, args):
    t0 = timer()
    fn(req, *args)
    return timer() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=100)
    args = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled: the 'numba' rows run interpreted loops and will be slow")
    saved = _kernels.simplex_iterate, _kernels.crash_basis
    for n_scen, beta in [(1, 0.0), (1, 0.5), (5, 0.5)]:
        probs = problems(args.n, n_scen, beta)
        res = {p: time_solves(p, probs, args.repeat) for p in PATHS}
        gap = float(np.max(np.abs(res["numba"][1] - res["numpy"][1])))
        print(f"simplex N={n_scen} beta={beta}: "
              + "  ".join(f"{p} {1e3 * t:.3f} ms/solve" for p, (t, _) in res.items())
              + f"  speedup x{res['numpy'][0] / res['numba'][0]:.1f}  max |dobj| {gap:.1e}")
    _kernels.simplex_iterate, _kernels.crash_basis = saved
    bt = time_battery(args.repeat)
    print(f"battery 8760 h: numba {1e3 * bt['numba']:.3f} ms  python {1e3 * bt['python']:.3f} ms"
          f"  speedup x{bt['python'] / bt['numba']:.0f}")


if __name__ == "__main__":
    main()
