import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from commitbench.battery import Building, EnvironmentSeries, SyntheticConfig, make_synthetic_env
from commitbench.series import TimeSeries

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def cut_env(env, hours, scored=None):
    """First ``hours`` hours of ``env`` as a new environment."""
    bs = tuple(Building(TimeSeries(env.start, b.load.values[:hours]),
                        TimeSeries(env.start, b.pv.values[:hours]), b.battery)
               for b in env.buildings)
    return EnvironmentSeries(bs, TimeSeries(env.start, env.price.values[:hours]),
                             TimeSeries(env.start, env.carbon.values[:hours]),
                             scored_hours=scored or hours)


@pytest.fixture(scope="session")
def month_env():
    return make_synthetic_env(SyntheticConfig(n_days=30, tail_hours=24, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
