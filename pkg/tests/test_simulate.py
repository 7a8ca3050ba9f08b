import numpy as np
import pytest

from relaydeploy.channel import FiniteShadowing, LogNormalShadowing
from relaydeploy.explore import ExploreConfig, policy_iteration
from relaydeploy.learning import LearnProtocol
from relaydeploy.policies import (HeuExploreLimHandle, LearnerHandle,
                                  OptAsYouGoHandle, OptExploreLimHandle)
from relaydeploy.simulate import (TRACE_CSV_HEADER, DeploymentTrace, convergence_curve,
                                  run_deployment, summarize, trace_from_csv_rows,
                                  trace_to_csv)

CFG = ExploreConfig(a_skip=0, b_window=5, xi_out=100.0, xi_relay=1.0)


def _el_handle(model, power5, field_params):
    res = policy_iteration(CFG, model, power5, field_params)
    return OptExploreLimHandle(policy=res.policy, levels_mw=power5.levels)


def test_same_seed_bit_identical(model31, power5, field_params):
    handle = _el_handle(model31, power5, field_params)
    t1 = run_deployment(handle, 200, 99, CFG, LogNormalShadowing(7.7), power5, field_params)
    t2 = run_deployment(handle, 200, 99, CFG, LogNormalShadowing(7.7), power5, field_params)
    assert np.array_equal(t1.u_steps, t2.u_steps)
    assert np.array_equal(t1.gamma_mw, t2.gamma_mw)
    assert np.array_equal(t1.q_out, t2.q_out)
    t3 = run_deployment(handle, 200, 100, CFG, LogNormalShadowing(7.7), power5, field_params)
    assert not np.array_equal(t1.q_out, t3.q_out)


def test_negative_seed_accepted(model31, power5, field_params):
    handle = _el_handle(model31, power5, field_params)
    trace = run_deployment(handle, 5, -42, CFG, LogNormalShadowing(7.7), power5,
                           field_params)
    assert trace.n_links == 5


def test_deterministic_channel_repeats_choice(power5, field_params):
    model = FiniteShadowing(values=(1.0,), probs=(1.0,))
    handle = _el_handle(model, power5, field_params)
    trace = run_deployment(handle, 50, 1, CFG, model, power5, field_params)
    assert len(set(trace.u_steps.tolist())) == 1
    assert len(set(trace.gamma_mw.tolist())) == 1


def test_renewal_identity(model31, power5, field_params):
    handle = _el_handle(model31, power5, field_params)
    trace = run_deployment(handle, 500, 5, CFG, LogNormalShadowing(7.7), power5,
                           field_params)
    s = summarize(trace, CFG.xi_out, CFG.xi_relay)
    lhs = s.mean_cost_per_step
    rhs = (s.mean_power_per_link + CFG.xi_out * s.mean_outage_per_link
           + CFG.xi_relay) / s.mean_distance_steps
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_single_record_arithmetic():
    trace = DeploymentTrace(
        u_steps=np.array([2]), gamma_mw=np.array([1.0]), q_out=np.array([0.1]),
        lambda_hat=np.array([np.nan]), xi_out_hat=np.array([np.nan]),
        xi_relay_hat=np.array([np.nan]), measurements=np.array([5]), seed=0)
    s = summarize(trace, 100.0, 1.0)
    assert s.mean_cost_per_step == pytest.approx((1.0 + 10.0 + 1.0) / 2.0)
    assert s.relays_per_step == pytest.approx(0.5)


def test_summarize_rejects_empty():
    with pytest.raises(ValueError):
        summarize(DeploymentTrace.empty(), 1.0, 1.0)


def test_measurement_accounting(model31, power5, field_params):
    handle = _el_handle(model31, power5, field_params)
    trace = run_deployment(handle, 300, 2, CFG, LogNormalShadowing(7.7), power5,
                           field_params)
    s = summarize(trace, CFG.xi_out, CFG.xi_relay)
    assert s.measurements_per_step == pytest.approx(
        CFG.b_window / s.mean_distance_steps)

    from relaydeploy.asyougo import AsYouGoConfig, average_cost_limit
    acfg = AsYouGoConfig(0, 5, 100.0, 1.0)
    sol = average_cost_limit(acfg, model31, power5, field_params)
    h = OptAsYouGoHandle(policy=sol.policy, levels_mw=power5.levels)
    trace = run_deployment(h, 300, 2, CFG, LogNormalShadowing(7.7), power5, field_params)
    s = summarize(trace, CFG.xi_out, CFG.xi_relay)
    # pure as-you-go with A=0 measures once per step walked
    assert s.measurements_per_step == pytest.approx(1.0)


def test_rounds_look_independent(model31, power5, field_params):
    handle = _el_handle(model31, power5, field_params)
    trace = run_deployment(handle, 4000, 11, CFG, LogNormalShadowing(7.7), power5,
                           field_params)
    for series in (trace.u_steps.astype(float), trace.q_out):
        x = series - series.mean()
        rho = float((x[:-1] * x[1:]).mean() / (x.std() ** 2))
        assert abs(rho) < 4 / np.sqrt(len(x))


def test_trace_csv_roundtrip(model31, power5, field_params):
    handle = _el_handle(model31, power5, field_params)
    trace = run_deployment(handle, 20, 3, CFG, LogNormalShadowing(7.7), power5,
                           field_params)
    text = trace_to_csv(trace)
    assert text.splitlines()[0] == TRACE_CSV_HEADER
    u, g, q = trace_from_csv_rows(text)
    assert np.array_equal(u, trace.u_steps)
    assert np.allclose(g, trace.gamma_mw, rtol=1e-9)
    assert np.allclose(q, trace.q_out, rtol=1e-9, atol=1e-12)
    # model-based traces leave learner columns empty
    assert text.splitlines()[1].endswith(",,,")


def test_curve_single_run_matches_scalar_path(power5, field_params):
    """n_runs = 1: the ensemble curve must equal the handle-driven trace."""
    protocol = LearnProtocol(lambda0=0.4577)
    curves = convergence_curve("oel-ratio", 1, 40, 77, CFG, LogNormalShadowing(7.7),
                               power5, field_params, protocol)
    handle = LearnerHandle(kind="oel-ratio", state=protocol.initial_state(CFG),
                           cfg=CFG, levels_mw=power5.levels, protocol=protocol)
    trace = run_deployment(handle, 40, 77, CFG, LogNormalShadowing(7.7), power5,
                           field_params)
    assert np.allclose(curves.lambda_mean, trace.lambda_hat, rtol=1e-12)
    assert curves.distance_mean[-1] == pytest.approx(trace.u_steps.mean())


def test_curve_learner_kinds_validate(power5, field_params):
    from relaydeploy.errors import ConfigError
    with pytest.raises(ConfigError):
        convergence_curve("oel-learn", 2, 3, 1, CFG, LogNormalShadowing(7.7),
                          power5, field_params, LearnProtocol(lambda0=0.5))
    with pytest.raises(ConfigError):
        convergence_curve("nope", 2, 3, 1, CFG, LogNormalShadowing(7.7),
                          power5, field_params, LearnProtocol(lambda0=0.5))


def test_heu_el_handle_runs(model31, power5, field_params):
    handle = HeuExploreLimHandle(xi_out=100.0, xi_relay=1.0, a_skip=0,
                                 levels_mw=power5.levels)
    trace = run_deployment(handle, 100, 4, CFG, LogNormalShadowing(7.7), power5,
                           field_params)
    assert np.all((trace.u_steps >= 1) & (trace.u_steps <= 5))
    assert np.all(np.isin(trace.gamma_mw, power5.levels))
