import os
import subprocess
import sys

import numpy as np
import pytest

from commitbench import _accel, _kernels
from commitbench.battery import SyntheticConfig, make_synthetic_env
from commitbench.mpc import LookaheadProblem, solve_lookahead


@pytest.mark.parametrize("flag,expected", [("", True), ("0", True), ("1", False), ("TRUE", False),
                                           ("yes", False), ("off", True)])
def test_disable_flag(monkeypatch, flag, expected):
    monkeypatch.setenv(_accel.DISABLE_ENV, flag)
    assert _accel.numba_enabled() is (expected and _accel.HAS_NUMBA)


def test_flag_selects_numpy_path_at_import():
    code = ("from commitbench import _accel, _kernels;"
            "print(_accel.USE_NUMBA, _kernels.simplex_iterate is _kernels._iterate_vec)")
    env = dict(os.environ, **{_accel.DISABLE_ENV: "1"})
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]


@pytest.fixture(scope="module")
def lookaheads():
    env = make_synthetic_env(SyntheticConfig(n_days=30, tail_hours=24, seed=8))
    rng = np.random.default_rng(3)
    probs = []
    for t in range(1, 40, 3):
        n = 1 + t % 3
        base = env.base_matrix(t, 12)[np.newaxis] + rng.normal(0, 0.3, (n, 1, 12))
        probs.append(LookaheadProblem(t - 1, env.batteries(), [rng.uniform(0, 6.4)], base,
                                      env.price.slice(t, 12), env.carbon.slice(t, 12),
                                      beta=float(rng.choice([0.0, 0.3])),
                                      prev_net_load=None if t == 1 else 1.0))
    return probs


def test_loop_and_vector_kernels_agree(lookaheads, monkeypatch):
    results = {}
    for name, pair in {"loop": (_kernels._iterate_loop, _kernels._crash_loop),
                       "vec": (_kernels._iterate_vec, _kernels._crash_vec)}.items():
        monkeypatch.setattr(_kernels, "simplex_iterate", pair[0])
        monkeypatch.setattr(_kernels, "crash_basis", pair[1])
        results[name] = [solve_lookahead(p) for p in lookaheads]
    for a, b in zip(results["loop"], results["vec"]):
        assert a.ok and b.ok
        assert a.objective == pytest.approx(b.objective, rel=1e-9, abs=1e-9)


def test_battery_kernel_matches_interpreted():
    req = np.random.default_rng(2).normal(0, 3, (2, 500))
    args = (np.array([0.0, 3.0]), np.zeros(2), np.full(2, 6.4), np.array([5.0, 2.0]),
            np.full(2, 0.95), np.array([0.95, 0.9]))
    fast = _kernels.battery_steps(req, *args)
    slow = _kernels.battery_steps.py_func(req, *args)
    for x, y in zip(fast, slow):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)
    assert fast[2].sum() > 0
