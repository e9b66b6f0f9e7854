import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from commitbench.bounds import (BoundParams, UnsupportedExponentError, bound_expdecay, bound_iid,
                                fv_norm_expdecay, switching_term, tradeoff_curve)
from commitbench.errors import ConfigError, DomainError


def test_iid_example():
    p = BoundParams(T=24, beta=1, diam=1, g_lip=1, sigma=0, opt_cost=3.5)
    assert bound_iid(p, 24) == pytest.approx(3.5 + 2.0, abs=1e-12)


def test_iid_rejects_zero_commitment():
    with pytest.raises(DomainError):
        bound_iid(BoundParams(), 0)
    with pytest.raises(DomainError):
        bound_iid(BoundParams(), 1.5)


def test_iid_decreasing_without_noise():
    p = BoundParams(sigma=0)
    vals = [bound_iid(p, v) for v in range(1, 25)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_doubling_beta_doubles_gap():
    p = BoundParams(sigma=0, opt_cost=7)
    q = BoundParams(sigma=0, opt_cost=7, beta=2)
    for v in (1, 5, 24):
        assert bound_iid(q, v) - 7 == pytest.approx(2 * (bound_iid(p, v) - 7), rel=1e-14)


def test_fv_norm_examples():
    assert fv_norm_expdecay(BoundParams(sigma=1, a=0.5, c=1), 1) == pytest.approx(math.sqrt(1.25), abs=1e-12)
    assert fv_norm_expdecay(BoundParams(sigma=0.7, a=0, c=1), 9) == 0.7
    p = BoundParams(sigma=1.3, a=0.999, c=0.6)
    assert fv_norm_expdecay(p, 20000) == pytest.approx(0.6 * 1.3 / math.sqrt(1 - 0.999 ** 2), rel=1e-9)


def test_fv_norm_matches_explicit_sum():
    p = BoundParams(sigma=0.9, a=0.7, c=1.4)
    for v in range(1, 15):
        direct = math.sqrt(sum(p.c ** 2 * p.sigma ** 2 * p.a ** (2 * s) for s in range(v + 1)))
        assert fv_norm_expdecay(p, v) == pytest.approx(direct, rel=1e-13)


def test_params_domain():
    with pytest.raises(DomainError):
        BoundParams(a=1.0)
    with pytest.raises(DomainError):
        BoundParams(sigma=-1)
    with pytest.raises(DomainError):
        BoundParams(alpha=0)


def test_expdecay_needs_lipschitz():
    p = BoundParams(alpha=0.5)
    with pytest.raises(UnsupportedExponentError):
        bound_expdecay(p, 3)
    assert issubclass(UnsupportedExponentError, ConfigError)
    curve = tradeoff_curve(p, 4)
    assert curve.argmin_expdecay is None
    assert all(row[2] is None for row in curve.rows)


def test_expdecay_reduces_to_iid_at_zero_decay():
    p = BoundParams(sigma=0.4, a=0, c=2.5, opt_cost=1)
    iid = BoundParams(sigma=0.4 * 2.5, opt_cost=1)
    for v in range(1, 10):
        assert bound_expdecay(p, v) == pytest.approx(bound_iid(iid, v), rel=1e-14)


def test_expdecay_without_switching_is_nondecreasing():
    p = BoundParams(beta=0, sigma=1, a=0.6)
    vals = [bound_expdecay(p, v) for v in range(1, 25)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert tradeoff_curve(p, 24).argmin_expdecay == 1


def test_tradeoff_without_noise_picks_longest():
    curve = tradeoff_curve(BoundParams(sigma=0, a=0.5), 24)
    assert curve.argmin_iid == 24
    assert curve.argmin_expdecay == 24
    assert [r[0] for r in curve.rows] == list(range(1, 25))


def test_tradeoff_strong_correlation_has_interior_minimum():
    curve = tradeoff_curve(BoundParams(a=0.99), 24)
    vals = [r[2] for r in curve.rows]
    k = curve.argmin_expdecay
    assert 1 < k < 24
    assert vals[k - 1] == min(vals)


def test_metadata_records_form():
    meta = tradeoff_curve(BoundParams(), 3).metadata()
    assert meta["params"]["T"] == 24
    assert "a^(2(v+1))" in meta["note"]


params = st.builds(
    BoundParams,
    T=st.floats(0, 100), beta=st.floats(0, 10), diam=st.floats(0, 10), g_lip=st.floats(0, 10),
    sigma=st.floats(0, 5), a=st.floats(0, 0.999), c=st.floats(0, 5), opt_cost=st.floats(0, 100))


@given(params, st.integers(1, 48), st.integers(1, 48))
def test_iid_difference_is_switching_only(p, v, w):
    diff = bound_iid(p, v) - bound_iid(p, w)
    expect = 2 * p.T * p.beta * p.diam * (1 / v - 1 / w)
    assert diff == pytest.approx(expect, rel=1e-9, abs=1e-9)
    assert switching_term(p, v) - switching_term(p, w) == pytest.approx(expect, rel=1e-12, abs=1e-12)


@given(params, st.integers(1, 48))
def test_bounds_above_opt(p, v):
    assert bound_iid(p, v) >= p.opt_cost
    assert bound_expdecay(p, v) >= p.opt_cost


@given(params, st.integers(1, 47), st.floats(1.0, 2.0))
def test_fv_norm_monotone(p, v, k):
    f = fv_norm_expdecay(p, v)
    assert fv_norm_expdecay(p, v + 1) >= f
    bigger = BoundParams(sigma=p.sigma * k, c=p.c * k, a=min(p.a * k, 0.999))
    base = BoundParams(sigma=p.sigma, c=p.c, a=min(p.a, 0.999))
    assert fv_norm_expdecay(bigger, v) >= fv_norm_expdecay(base, v) * (1 - 1e-12)
