import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from commitbench.battery import (MONTH_HOURS, BatterySpec, Building, EnvironmentSeries, Plan,
                                 SyntheticConfig, execute, load_factor, make_synthetic_env,
                                 ramping, read_env, realized_cost, score, write_env)
from commitbench.errors import ConfigError, NumericDomainError, PeriodError, SpecError
from commitbench.series import TimeSeries


def flat_env(n=4, load=2.0, pv=0.0, battery=BatterySpec(), price=1.0, carbon=0.5):
    b = Building(TimeSeries(0, np.full(n, load)), TimeSeries(0, np.full(n, pv)), battery)
    return EnvironmentSeries((b,), TimeSeries(0, np.full(n, price)), TimeSeries(0, np.full(n, carbon)))


def test_charge_lossless():
    env = flat_env(battery=BatterySpec(eta_charge=1.0, eta_discharge=1.0))
    tr = execute(env, Plan(0, [[1.0]]), [0.0])
    assert tr.soc[0, -1] == 1.0
    assert tr.net_load.values[0] == 3.0


def test_discharge_efficiency():
    bat = BatterySpec(eta_discharge=0.9, soc_init=3.0)
    tr = execute(flat_env(battery=bat), Plan(0, [[-0.9]]), [3.0])
    assert tr.soc[0, 0] - tr.soc[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert tr.net_load.values[0] == pytest.approx(1.1)


def test_zero_plan_is_baseline():
    env = make_synthetic_env(SyntheticConfig(n_days=3, seed=2))
    tr = execute(env, Plan.zeros(env))
    assert np.array_equal(tr.net_load.values, env.district_base(env.start, env.scored_hours))


def test_clipping_is_recorded():
    env = flat_env(battery=BatterySpec(capacity=2.0, soc_max=2.0, p_max=1.5, eta_charge=1.0))
    tr = execute(env, Plan(0, [[1.5, 1.5, -5.0]]), [0.0])
    assert tr.actions[0].tolist() == [1.5, 0.5, -1.5]
    assert tr.soc[0, -1] == pytest.approx(2.0 - 1.5 / 0.95)
    assert tr.n_clips == 2
    assert np.all(tr.soc >= 0) and np.all(tr.soc <= 2.0)


def test_execute_rejects_bad_soc0():
    with pytest.raises(SpecError):
        execute(flat_env(), Plan(0, [[0.0]]), [-1.0])


@given(arrays(float, 30, elements=st.floats(-5, 5, allow_nan=False)))
def test_energy_accounting_lossless(req):
    env = flat_env(n=30, battery=BatterySpec(eta_charge=1.0, eta_discharge=1.0, soc_init=3.0))
    tr = execute(env, Plan(0, req[np.newaxis]), [3.0])
    a = tr.actions[0]
    assert a[a > 0].sum() + a[a < 0].sum() == pytest.approx(tr.soc[0, -1] - tr.soc[0, 0], abs=1e-9)
    assert np.all(tr.soc >= 0) and np.all(tr.soc <= 6.4 + 1e-12)


def test_ramping_example():
    assert ramping([1.0, 3.0, 2.0]) == 3.0


@given(arrays(float, 20, elements=st.floats(-50, 50, allow_nan=False)), st.floats(-10, 10))
def test_ramping_shift_invariant(e, k):
    assert ramping(e + k) == pytest.approx(ramping(e), abs=1e-9)


def test_load_factor():
    assert load_factor(np.full(MONTH_HOURS, 2.5)) == 1.0
    e = np.r_[np.full(MONTH_HOURS, 1.0), np.r_[np.full(MONTH_HOURS - 1, 1.0), 4.0]]
    assert load_factor(e) == pytest.approx((1.0 + (MONTH_HOURS + 3) / MONTH_HOURS / 4.0) / 2)
    with pytest.raises(PeriodError):
        load_factor(np.ones(100))
    with pytest.raises(PeriodError):
        load_factor(np.ones(MONTH_HOURS + 1))
    with pytest.raises(NumericDomainError):
        load_factor(np.full(MONTH_HOURS, -1.0))


def test_score_without_grid_on_short_trace():
    env = flat_env(n=3)
    k = score(execute(env, Plan(0, [[1.0, 0.0, -0.5]]), [0.0]), env, include_grid=False)
    assert k.D is None and k.avg_score_with_grid is None
    assert k.c_baseline == 6.0
    assert k.C == pytest.approx(k.c_entry / 6.0)
    with pytest.raises(PeriodError):
        score(execute(env, Plan(0, [[0.0]]), [0.0]), env)


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_zero_action_scores_exactly_one(seed, n_buildings):
    env = make_synthetic_env(SyntheticConfig(n_buildings=n_buildings, n_days=20, seed=seed))
    k = score(execute(env, Plan.zeros(env)), env)
    assert (k.C, k.G, k.D, k.avg_score, k.avg_score_with_grid) == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_realized_cost_anchor():
    env = flat_env(n=2)
    tr = execute(env, Plan(0, [[0.0, 1.0]]), [0.0])
    assert realized_cost(tr, env, beta=2.0) == pytest.approx(2 * 1.5 + 3 * 1.5 + 2.0)
    assert realized_cost(tr, env, beta=2.0, prev_net_load=0.0) == pytest.approx(7.5 + 2.0 + 4.0)


def test_synthetic_env_examples():
    cfg = SyntheticConfig(n_days=30, seed=5)
    a, b = make_synthetic_env(cfg), make_synthetic_env(cfg)
    assert np.array_equal(a.buildings[0].load.values, b.buildings[0].load.values)
    assert len(a.price) == MONTH_HOURS and a.scored_hours == MONTH_HOURS
    nopv = make_synthetic_env(SyntheticConfig(n_days=2, pv_peak=0.0))
    assert np.all(nopv.buildings[0].pv.values == 0.0)
    tail = make_synthetic_env(SyntheticConfig(n_days=2, tail_hours=24))
    assert len(tail.price) == MONTH_HOURS + 24 and tail.score_end == MONTH_HOURS
    with pytest.raises(ConfigError):
        SyntheticConfig(n_days=0)


def test_env_csv_round_trip(tmp_path):
    env = make_synthetic_env(SyntheticConfig(n_buildings=3, n_days=2, tail_hours=5, seed=8,
                                             battery=BatterySpec(p_max=2.0)))
    back = read_env(write_env(env, tmp_path))
    assert back.scored_hours == env.scored_hours and back.n_buildings == 3
    for x, y in zip(env.buildings, back.buildings):
        assert np.array_equal(x.load.values, y.load.values)
        assert np.array_equal(x.pv.values, y.pv.values)
        assert x.battery == y.battery
    assert np.array_equal(env.price.values, back.price.values)
    assert np.array_equal(env.carbon.values, back.carbon.values)


def test_battery_spec_validation():
    with pytest.raises(SpecError):
        BatterySpec(soc_min=3.0, soc_max=2.0)
    with pytest.raises(SpecError):
        BatterySpec(eta_charge=1.2)
    with pytest.raises(SpecError):
        BatterySpec(soc_init=7.0)
