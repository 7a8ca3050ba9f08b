import numpy as np
import pytest

from relaydeploy.actions import CONTINUE, Place
from relaydeploy.asyougo import (AsYouGoConfig, average_cost_limit, extract_thresholds,
                                 heu_asyougo_decide, heu_asyougo_session, hop_cost_min,
                                 measured_hop_cost_min, optasyougo_decide,
                                 solve_geometric, value_iteration)
from relaydeploy.channel import ChannelParams, FiniteShadowing, PowerSet, outage_probability
from relaydeploy.errors import ConfigError, ConvergenceError

from .oracles import enumerate_asyougo, hop_cost_table

TOY_PARAMS = ChannelParams(eta=3.0, c=1.0, r0_m=1.0, p_rcv_min_mw=1e-6, delta_m=30.0)


def toy_instances():
    cases = []
    rng = np.random.default_rng(7)
    for b in (2, 3):
        for nw in (2, 3):
            values = tuple(sorted(float(v) for v in rng.uniform(0.2, 5.0, size=nw)))
            probs = rng.dirichlet(np.ones(nw))
            probs = tuple(float(x) for x in probs / probs.sum())
            model = FiniteShadowing(values=values, probs=probs)
            power = PowerSet((0.5,)) if b == 2 else PowerSet((0.5, 2.0))
            cfg = AsYouGoConfig(a_skip=0, b_window=b,
                                xi_out=float(rng.choice([0.0, 20.0, 200.0])),
                                xi_relay=float(rng.choice([0.1, 1.0, 5.0])),
                                theta=float(rng.choice([0.3, 0.05])))
            cases.append((cfg, model, power))
    return cases


def test_hop_cost_min_zero_outage_weight(field_params, power5):
    cost, gamma = hop_cost_min(3, 1.0, 0.0, power5, field_params)
    assert gamma == power5.levels[0]
    assert cost == power5.levels[0]


def test_hop_cost_min_single_level(field_params):
    ps = PowerSet((1.0,))
    q = outage_probability(3, 1.0, 0.7, field_params)
    cost, gamma = hop_cost_min(3, 0.7, 100.0, ps, field_params)
    assert gamma == 1.0
    assert cost == pytest.approx(1.0 + 100.0 * q, rel=1e-12)


def test_hop_cost_min_matches_scan(field_params, power5):
    best = min((g + 100.0 * outage_probability(3, g, 1.0, field_params), g)
               for g in power5.levels)
    assert hop_cost_min(3, 1.0, 100.0, power5, field_params) == pytest.approx(best)


def test_measured_hop_cost_empty():
    with pytest.raises(ValueError):
        measured_hop_cost_min({}, 10.0)


def test_value_iteration_single_atom_closed_form():
    """xi_out = xi_relay = 0, one atom, one power: V(0) = P1/(1-(1-theta)^(A+B))."""
    p1 = 0.5
    for a, b, theta in [(0, 3, 0.2), (1, 2, 0.1), (0, 5, 0.05)]:
        cfg = AsYouGoConfig(a_skip=a, b_window=b, xi_out=0.0, xi_relay=0.0, theta=theta)
        model = FiniteShadowing(values=(1.0,), probs=(1.0,))
        vt = value_iteration(cfg, model, PowerSet((p1,)), TOY_PARAMS, tol=1e-13)
        expected = p1 / (1.0 - (1.0 - theta) ** (a + b))
        assert vt.v0 == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("case", range(4))
def test_value_iteration_matches_policy_enumeration(case):
    cfg, model, power = toy_instances()[case]
    vt = value_iteration(cfg, model, power, TOY_PARAMS, tol=1e-12)
    v_star, v0_star, _, _ = enumerate_asyougo(cfg, model, power, TOY_PARAMS)
    assert vt.v0 == pytest.approx(v0_star, abs=1e-8)
    for r, val in v_star.items():
        assert vt.v[r] == pytest.approx(val, abs=1e-8)


def test_value_iteration_monotone_from_zero(model2, power5, field_params):
    cfg = AsYouGoConfig(a_skip=0, b_window=4, xi_out=100.0, xi_relay=1.0, theta=0.05)
    seen = []
    value_iteration(cfg, model2, power5, field_params, tol=1e-9,
                    on_sweep=lambda v0, v: seen.append((v0, v)))
    for (v0a, va), (v0b, vb) in zip(seen, seen[1:]):
        assert v0b >= v0a - 1e-12
        assert np.all(vb >= va - 1e-12)


def test_value_table_nondecreasing_in_r(model31, power5, field_params):
    cfg = AsYouGoConfig(a_skip=0, b_window=5, xi_out=100.0, xi_relay=1.0, theta=1e-3)
    vt = solve_geometric(cfg, model31, power5, field_params)
    vals = [vt.v[r] for r in sorted(vt.v)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_oracle_j_table_monotone_in_r_and_w():
    cfg, model, power = toy_instances()[1]
    _, _, j_table, w = enumerate_asyougo(cfg, model, power, TOY_PARAMS)
    assert np.all(np.diff(j_table, axis=0) >= -1e-10)  # increasing in r
    order = np.argsort(w)
    assert np.all(np.diff(j_table[:, order], axis=1) <= 1e-10)  # decreasing in w


def test_solve_geometric_agrees_with_value_iteration(model31, power5, field_params):
    cfg = AsYouGoConfig(a_skip=0, b_window=5, xi_out=100.0, xi_relay=1.0, theta=1e-2)
    vt_vi = value_iteration(cfg, model31, power5, field_params, tol=1e-12)
    vt_ex = solve_geometric(cfg, model31, power5, field_params)
    assert vt_ex.v0 == pytest.approx(vt_vi.v0, abs=1e-8)
    for r in vt_vi.v:
        assert vt_ex.v[r] == pytest.approx(vt_vi.v[r], abs=1e-8)


def test_value_iteration_requires_finite_model(power5, field_params):
    from relaydeploy.channel import LogNormalShadowing
    cfg = AsYouGoConfig(0, 3, 1.0, 1.0, theta=0.1)
    with pytest.raises(ConfigError):
        value_iteration(cfg, LogNormalShadowing(7.7), power5, field_params)


def _solved_policy(xi_out, xi_relay, model, power, params, theta=1e-6, b=5):
    cfg = AsYouGoConfig(a_skip=0, b_window=b, xi_out=xi_out, xi_relay=xi_relay,
                        theta=theta)
    vt = solve_geometric(cfg, model, power, params)
    return extract_thresholds(vt, cfg, model, power, params)


def test_thresholds_monotone_in_r(model31, power5, field_params):
    pol = _solved_policy(100.0, 1.0, model31, power5, field_params)
    vals = [pol.c_th[r] for r in sorted(pol.c_th)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_thresholds_decrease_with_relay_cost(model31, power5, field_params):
    lo = _solved_policy(100.0, 0.1, model31, power5, field_params)
    hi = _solved_policy(100.0, 10.0, model31, power5, field_params)
    for r in lo.c_th:
        assert hi.c_th[r] < lo.c_th[r] + 1e-12


def test_thresholds_increase_with_outage_cost(model31, power5, field_params):
    lo = _solved_policy(10.0, 1.0, model31, power5, field_params)
    hi = _solved_policy(1000.0, 1.0, model31, power5, field_params)
    for r in lo.c_th:
        assert hi.c_th[r] > lo.c_th[r] - 1e-12


def test_decide_forced_at_window_end(model31, power5, field_params):
    pol = _solved_policy(100.0, 1.0, model31, power5, field_params)
    readings = {g: 0.99 for g in power5.levels}
    action = optasyougo_decide(5, readings, pol, 100.0)
    assert isinstance(action, Place) and action.u_steps == 5


def test_decide_places_on_great_link(model31, power5, field_params):
    pol = _solved_policy(100.0, 1.0, model31, power5, field_params)
    readings = {g: 0.0 for g in power5.levels}
    action = optasyougo_decide(2, readings, pol, 100.0)
    assert isinstance(action, Place)
    assert action.gamma_mw == power5.levels[0]


def test_decide_rejects_out_of_window(model31, power5, field_params):
    pol = _solved_policy(100.0, 1.0, model31, power5, field_params)
    with pytest.raises(ValueError):
        optasyougo_decide(6, {1.0: 0.1}, pol, 100.0)


def test_decide_matches_bellman_minimizer_on_toy():
    """Threshold decisions agree with the enumeration oracle at every state."""
    cfg, model, power = toy_instances()[2]
    vt = solve_geometric(cfg, model, power, TOY_PARAMS)
    pol = extract_thresholds(vt, cfg, model, power, TOY_PARAMS)
    _, v0_star, j_table, w = enumerate_asyougo(cfg, model, power, TOY_PARAMS)
    h, _ = hop_cost_table(cfg, model, power, TOY_PARAMS, cfg.xi_out)
    _, p = model.as_arrays()
    theta = cfg.theta
    for i, r in enumerate(range(cfg.a_skip + 1, cfg.a_skip + cfg.b_window)):
        m_next = sum(
            p[j] * min(g + cfg.xi_out * outage_probability(r + 1, g, w[j], TOY_PARAMS)
                       for g in power.levels) for j in range(len(w)))
        v_next = float((p * j_table[i + 1]).sum())
        for j, wv in enumerate(w):
            place_cost = h[i, j] + cfg.xi_relay + v0_star
            cont_cost = theta * m_next + (1 - theta) * v_next
            readings = {g: outage_probability(r, g, wv, TOY_PARAMS)
                        for g in power.levels}
            action = optasyougo_decide(r, readings, pol, cfg.xi_out)
            if place_cost < cont_cost - 1e-9:
                assert isinstance(action, Place)
            elif place_cost > cont_cost + 1e-9:
                assert action is CONTINUE


def test_average_cost_limit_closed_form():
    """|W|=1, M=1, xi_out=0: the limit is min over u of (P1 + xi_relay)/u."""
    p1, xr = 0.5, 2.0
    cfg = AsYouGoConfig(a_skip=1, b_window=3, xi_out=0.0, xi_relay=xr)
    model = FiniteShadowing(values=(1.0,), probs=(1.0,))
    sol = average_cost_limit(cfg, model, PowerSet((p1,)), TOY_PARAMS)
    oracle = min((p1 + xr) / u for u in range(2, 5))
    assert sol.lambda_per_step == pytest.approx(oracle, rel=1e-5)


def test_average_cost_limit_stopping_rule(model31, power5, field_params):
    cfg = AsYouGoConfig(a_skip=0, b_window=5, xi_out=100.0, xi_relay=1.0)
    sol = average_cost_limit(cfg, model31, power5, field_params, tol=1e-6)
    # halving theta twice more moves the estimate by less than tol (relative)
    from dataclasses import replace
    for extra in (2.0, 4.0):
        cfg_t = replace(cfg, theta=sol.theta / extra)
        vt = solve_geometric(cfg_t, model31, power5, field_params)
        lam = cfg_t.theta * vt.v0
        assert abs(lam - sol.lambda_per_step) <= 2e-6 * sol.lambda_per_step


def test_average_cost_limit_exhausted_schedule(model31, power5, field_params):
    cfg = AsYouGoConfig(a_skip=0, b_window=5, xi_out=100.0, xi_relay=1.0)
    with pytest.raises(ConvergenceError) as err:
        average_cost_limit(cfg, model31, power5, field_params,
                           theta_schedule=[1e-2, 5e-3, 2.5e-3], tol=1e-12)
    assert err.value.last_estimates is not None


def test_average_cost_monotone_and_concave_in_multipliers(model2, power5):
    """The theta->0 cost is nondecreasing and midpoint-concave in each multiplier.

    theta*V(0) at the schedule floor carries an O(theta) bias of about
    1e-6, so the 1e-9 concavity check evaluates the limiting threshold
    policy's renewal ratio exactly instead.
    """
    from relaydeploy.asyougo import average_cost_of_threshold_policy

    def lam(xi_out, xi_relay):
        cfg = AsYouGoConfig(a_skip=0, b_window=3, xi_out=xi_out, xi_relay=xi_relay)
        sol = average_cost_limit(cfg, model2, power5, TOY_PARAMS)
        exact = average_cost_of_threshold_policy(sol.policy, model2, power5,
                                                 TOY_PARAMS, xi_relay)
        assert exact == pytest.approx(sol.lambda_per_step, abs=1e-4)
        return exact

    xr_grid = [0.0, 1.0, 2.0, 3.0, 4.0]
    xo_grid = [0.0, 50.0, 100.0, 150.0, 200.0]
    xr_line = [lam(100.0, x) for x in xr_grid]
    xo_line = [lam(x, 1.0) for x in xo_grid]
    assert all(b >= a - 1e-12 for a, b in zip(xr_line, xr_line[1:]))
    assert all(b >= a - 1e-12 for a, b in zip(xo_line, xo_line[1:]))
    for i, j in [(0, 2), (1, 3), (2, 4), (0, 4)]:
        mid = (i + j) // 2
        assert xr_line[mid] >= 0.5 * (xr_line[i] + xr_line[j]) - 1e-9
        assert xo_line[mid] >= 0.5 * (xo_line[i] + xo_line[j]) - 1e-9


def test_threshold_policy_stats_match_simulation(model31, power5, field_params):
    """Exact renewal metrics agree with a simulated run of the same policy."""
    from relaydeploy.asyougo import threshold_policy_stats
    from relaydeploy.explore import ExploreConfig
    from relaydeploy.policies import OptAsYouGoHandle
    from relaydeploy.simulate import run_deployment, summarize

    cfg = AsYouGoConfig(a_skip=0, b_window=5, xi_out=100.0, xi_relay=1.0)
    sol = average_cost_limit(cfg, model31, power5, field_params)
    g_bar, q_bar, u_bar, mass = threshold_policy_stats(sol.policy, model31, power5,
                                                       field_params)
    assert mass.sum() == pytest.approx(1.0, abs=1e-12)
    handle = OptAsYouGoHandle(policy=sol.policy, levels_mw=power5.levels)
    trace = run_deployment(handle, 20000, 13,
                           ExploreConfig(0, 5, 100.0, 1.0), model31, power5,
                           field_params)
    stats = summarize(trace, 100.0, 1.0)
    assert g_bar == pytest.approx(stats.mean_power_per_link,
                                  abs=4 * stats.se_power_per_link)
    assert u_bar == pytest.approx(stats.mean_distance_steps,
                                  abs=4 * stats.se_distance_steps)
    assert q_bar == pytest.approx(stats.mean_outage_per_link,
                                  abs=4 * stats.se_outage_per_link)


def test_heu_decide_rules():
    cfg = AsYouGoConfig(a_skip=0, b_window=5, xi_out=0.0, xi_relay=0.0)
    fp, tq = 1.0, 0.1
    # all meet target -> forced placement at A+B
    assert heu_asyougo_decide(5, 0.05, fp, tq, cfg) == Place(5, fp)
    # violation at A+1 places there
    assert heu_asyougo_decide(1, 0.5, fp, tq, cfg) == Place(1, fp)
    # first violation later places one step back
    assert heu_asyougo_decide(3, 0.5, fp, tq, cfg) == Place(2, fp)
    assert heu_asyougo_decide(2, 0.05, fp, tq, cfg) is CONTINUE


def test_heu_session_scripted_sequences():
    cfg = AsYouGoConfig(a_skip=0, b_window=4, xi_out=0.0, xi_relay=0.0)

    def source_from(seq):
        it = iter(seq)
        return lambda r: next(it)

    # all locations meet the target: place at A+B
    got = heu_asyougo_session(1.0, 0.1, cfg, source_from([0.01, 0.02, 0.03, 0.04]))
    assert got == [(4, 0.04)]
    # violated immediately
    got = heu_asyougo_session(1.0, 0.1, cfg, source_from([0.9]))
    assert got == [(1, 0.9)]
    # first violation at step 3 places at 2 with the outage measured at 2
    got = heu_asyougo_session(1.0, 0.1, cfg, source_from([0.02, 0.05, 0.4]))
    assert got == [(2, 0.05)]
    # two rounds back to back
    got = heu_asyougo_session(1.0, 0.1, cfg,
                              source_from([0.02, 0.05, 0.4, 0.01, 0.02, 0.03, 0.04]),
                              n_relays=2)
    assert got == [(2, 0.05), (4, 0.04)]
