import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaydeploy.channel import (ChannelParams, FiniteShadowing, LogNormalShadowing,
                                 PowerSet, dbm_to_mw, discretize_lognormal,
                                 mw_to_dbm, outage_probability, sample_shadowing)
from relaydeploy.errors import ConfigError

from .oracles import mc_outage

# frozen from a 50-digit mpmath evaluation of the closed form
Q_REFERENCE = 0.10161015006502236


def test_outage_reference_value(field_params):
    q = outage_probability(5, 3.1623, 1.0, field_params)
    assert q == pytest.approx(Q_REFERENCE, abs=1e-12)
    assert q == pytest.approx(0.102, abs=5e-4)


def test_outage_reference_against_fading_draws(field_params, rng):
    q = outage_probability(5, 3.1623, 1.0, field_params)
    n = 10**6
    emp = mc_outage(5, 3.1623, 1.0, field_params, n, rng)
    se = math.sqrt(q * (1 - q) / n)
    assert abs(emp - q) < 3 * se


def test_outage_monte_carlo_agreement_random_points(field_params, rng):
    n = 10**6
    for _ in range(20):
        r = int(rng.integers(1, 8))
        gamma = float(rng.uniform(0.01, 4.0))
        w = float(10 ** (rng.normal(0, 7.7) / 10))
        q = outage_probability(r, gamma, w, field_params)
        emp = mc_outage(r, gamma, w, field_params, n, rng)
        assert abs(emp - q) < 4 * math.sqrt(q * (1 - q) / n) + 1e-9


def test_outage_vanishes_with_tiny_threshold():
    params = ChannelParams(eta=4.7, c=10**0.17, p_rcv_min_mw=1e-300)
    assert outage_probability(5, 3.1623, 1.0, params) < 1e-280


def test_outage_vanishes_with_huge_shadowing(field_params):
    assert outage_probability(5, 3.1623, 1e12, field_params) < 1e-10


def test_outage_open_interval_and_monotone(field_params):
    qs = [outage_probability(r, 1.0, 1.0, field_params) for r in range(1, 9)]
    assert all(0.0 < q < 1.0 for q in qs)
    assert all(a < b for a, b in zip(qs, qs[1:]))
    gs = [outage_probability(4, g, 1.0, field_params) for g in (0.01, 0.1, 1.0, 3.0)]
    assert all(a > b for a, b in zip(gs, gs[1:]))
    ws = [outage_probability(4, 1.0, w, field_params) for w in (0.1, 1.0, 10.0)]
    assert all(a > b for a, b in zip(ws, ws[1:]))


def test_outage_rejects_bad_inputs(field_params):
    with pytest.raises(ValueError):
        outage_probability(0, 1.0, 1.0, field_params)
    with pytest.raises(ValueError):
        outage_probability(1, -1.0, 1.0, field_params)
    with pytest.raises(ValueError):
        outage_probability(1, 1.0, 0.0, field_params)


@given(st.floats(min_value=-80.0, max_value=80.0))
@settings(deadline=None)
def test_dbm_roundtrip(x):
    assert mw_to_dbm(dbm_to_mw(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_dbm_known_points():
    assert dbm_to_mw(0.0) == pytest.approx(1.0)
    assert dbm_to_mw(-18.0) == pytest.approx(0.015849, abs=1e-6)
    assert dbm_to_mw(5.0) == pytest.approx(3.16228, abs=1e-5)
    with pytest.raises(ValueError):
        mw_to_dbm(0.0)
    with pytest.raises(ValueError):
        mw_to_dbm(-2.0)


def test_sample_shadowing_degenerate(rng):
    model = FiniteShadowing(values=(1.0,), probs=(1.0,))
    draws = sample_shadowing(model, rng, size=100)
    assert np.all(draws == 1.0)


def test_sample_shadowing_lognormal_mean(rng):
    model = LogNormalShadowing(sigma_db=7.7)
    n = 10**6
    db = 10 * np.log10(sample_shadowing(model, rng, size=n))
    # CLT bound 3*sigma/sqrt(n) = 0.0231; spec allows 0.03
    assert abs(db.mean()) < 0.03
    assert db.std() == pytest.approx(7.7, rel=0.01)


def test_sample_shadowing_finite_frequencies(rng):
    model = FiniteShadowing(values=(0.5, 2.0), probs=(0.5, 0.5))
    n = 10**5
    draws = sample_shadowing(model, rng, size=n)
    freq = np.mean(draws == 0.5)
    assert abs(freq - 0.5) < 0.005


@pytest.mark.parametrize("n", [15, 31])
def test_discretizer_moments(n):
    model = discretize_lognormal(7.7, n)
    w, p = model.as_arrays()
    db = 10 * np.log10(w)
    mean = float((p * db).sum())
    std = math.sqrt(float((p * db**2).sum()) - mean**2)
    assert abs(mean) < 0.08
    assert std == pytest.approx(7.7, rel=0.01)
    assert sum(model.probs) == pytest.approx(1.0, abs=1e-12)


def test_discretizer_small_sigma_collapses_to_unit():
    model = discretize_lognormal(1e-9, 5)
    w, _ = model.as_arrays()
    assert np.allclose(w, 1.0, atol=1e-9)


def test_discretizer_rejects_small_n():
    with pytest.raises(ValueError):
        discretize_lognormal(7.7, 1)


def test_discretizer_resolution_barely_moves_downstream_solution(field_params, power5):
    """Doubling the atom count moves the solved cost per step by < 1%."""
    from relaydeploy.explore import ExploreConfig, policy_iteration
    cfg = ExploreConfig(a_skip=0, b_window=5, xi_out=100.0, xi_relay=1.0)
    lam15 = policy_iteration(cfg, discretize_lognormal(7.7, 15), power5,
                             field_params).lambda_star
    lam31 = policy_iteration(cfg, discretize_lognormal(7.7, 31), power5,
                             field_params).lambda_star
    assert abs(lam31 - lam15) / lam31 < 0.01


def test_validation_errors():
    with pytest.raises(ConfigError):
        ChannelParams(eta=-1.0, c=1.0)
    with pytest.raises(ConfigError):
        PowerSet(())
    with pytest.raises(ConfigError):
        PowerSet((2.0, 1.0))
    with pytest.raises(ConfigError):
        FiniteShadowing(values=(1.0, 2.0), probs=(0.6, 0.6))
    with pytest.raises(ConfigError):
        LogNormalShadowing(sigma_db=0.0)


def test_good_link_probability_supports_default_r0(field_params):
    """At 5 dBm a 5-step link is 'good' (outage < 3%) with probability > 20%."""
    sigma = 7.7
    q_at = lambda w: outage_probability(5, dbm_to_mw(5.0), w, field_params)
    # find the shadowing threshold where outage hits 3%, then P(W > w*)
    lo, hi = 1e-6, 1e9
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if q_at(mid) > 0.03:
            lo = mid
        else:
            hi = mid
    w_star_db = 10 * math.log10(hi)
    p_good = 1.0 - 0.5 * (1 + math.erf(w_star_db / (sigma * math.sqrt(2))))
    assert p_good > 0.20
    assert p_good < 0.30
