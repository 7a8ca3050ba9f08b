"""Multiplier sweeps and the four-algorithm comparison protocol.

The explore-forward optimum is evaluated exactly from its action
distribution; as-you-go policies and the heuristics are simulated. The
calibration mirrors the fair-comparison protocol: the fixed-power rule
inherits the threshold rule's simulated mean power per link and mean
outage per link.
"""
from __future__ import annotations

from dataclasses import dataclass

from .asyougo import AsYouGoConfig, average_cost_limit
from .channel import ChannelParams, FiniteShadowing, PowerSet
from .explore import ExploreConfig, policy_iteration, policy_stats
from .policies import (HeuAsYouGoHandle, HeuExploreLimHandle, OptAsYouGoHandle,
                       OptExploreLimHandle, calibrate_heu_asyougo)
from .simulate import run_deployment, summarize

SWEEP_CSV_HEADER = ("xi_out,xi_relay,lambda_star,mean_power_per_link_mw,"
                    "mean_outage_per_link,mean_distance_steps")


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    xi_out: float
    xi_relay: float
    lambda_star: float
    mean_power_per_link_mw: float
    mean_outage_per_link: float
    mean_distance_steps: float

    def csv(self, with_algorithm=False):
        cells = [format(x, ".10g") for x in
                 (self.xi_out, self.xi_relay, self.lambda_star,
                  self.mean_power_per_link_mw, self.mean_outage_per_link,
                  self.mean_distance_steps)]
        if with_algorithm:
            cells.insert(0, self.algorithm)
        return ",".join(cells)


def explorelim_point(xi_out, xi_relay, a_skip, b_window, model: FiniteShadowing,
                     power_set: PowerSet, params: ChannelParams) -> SweepRow:
    """Exact OptExploreLim operating point from the solved action distribution."""
    cfg = ExploreConfig(a_skip=a_skip, b_window=b_window,
                        xi_out=xi_out, xi_relay=xi_relay)
    res = policy_iteration(cfg, model, power_set, params)
    g_bar, q_bar, u_bar = policy_stats(res.distribution, cfg, model, power_set, params)
    return SweepRow("opt-el", xi_out, xi_relay, res.lambda_star,
                    g_bar, q_bar, u_bar)


def compare_algorithms(xi_out, xi_relay, a_skip, b_window, model_solve: FiniteShadowing,
                       model_sim, power_set: PowerSet, params: ChannelParams,
                       n_relays, seed, snap_fixed_power=False):
    """Simulated per-step costs and per-link metrics for all four algorithms.

    ``model_solve`` is the finite alphabet the optimal policies are solved
    on; ``model_sim`` drives the Monte-Carlo links (typically the
    continuous shadowing). Returns {algorithm: (lambda_star_or_None,
    MetricsSummary)}.
    """
    cfg = ExploreConfig(a_skip=a_skip, b_window=b_window,
                        xi_out=xi_out, xi_relay=xi_relay)
    out = {}

    el = policy_iteration(cfg, model_solve, power_set, params)
    h_el = OptExploreLimHandle(policy=el.policy, levels_mw=power_set.levels)
    out["opt-el"] = (el.lambda_star,
                     summarize(run_deployment(h_el, n_relays, seed, cfg, model_sim,
                                              power_set, params), xi_out, xi_relay))

    h_hel = HeuExploreLimHandle(xi_out=xi_out, xi_relay=xi_relay, a_skip=a_skip,
                                levels_mw=power_set.levels)
    out["heu-el"] = (None,
                     summarize(run_deployment(h_hel, n_relays, seed + 1, cfg, model_sim,
                                              power_set, params), xi_out, xi_relay))

    acfg = AsYouGoConfig(a_skip=a_skip, b_window=b_window,
                         xi_out=xi_out, xi_relay=xi_relay)
    ayg = average_cost_limit(acfg, model_solve, power_set, params)
    h_ayg = OptAsYouGoHandle(policy=ayg.policy, levels_mw=power_set.levels)
    ayg_trace = run_deployment(h_ayg, n_relays, seed + 2, cfg, model_sim,
                               power_set, params)
    ayg_stats = summarize(ayg_trace, xi_out, xi_relay)
    out["opt-ayg"] = (ayg.lambda_per_step, ayg_stats)

    fixed, target = calibrate_heu_asyougo(ayg_stats, power_set, snap=snap_fixed_power)
    h_heu = HeuAsYouGoHandle(fixed_power_mw=fixed, target_outage=target,
                             a_skip=a_skip, b_window=b_window)
    out["heu-ayg"] = (None,
                      summarize(run_deployment(h_heu, n_relays, seed + 3, cfg, model_sim,
                                               power_set, params), xi_out, xi_relay))
    return out


def sweep_rows(xi_out, xi_relay_grid, a_skip, b_window, model_solve, model_sim,
               power_set, params, algorithms=("opt-el",), n_relays=20000, seed=None,
               snap_fixed_power=False):
    """SweepRow list over the xi_relay grid, one row per algorithm per point."""
    rows = []
    for xi_relay in xi_relay_grid:
        if list(algorithms) == ["opt-el"]:
            rows.append(explorelim_point(xi_out, xi_relay, a_skip, b_window,
                                         model_solve, power_set, params))
            continue
        comp = compare_algorithms(xi_out, xi_relay, a_skip, b_window, model_solve,
                                  model_sim, power_set, params, n_relays, seed,
                                  snap_fixed_power=snap_fixed_power)
        for name in algorithms:
            lam, stats = comp[name]
            rows.append(SweepRow(
                name, xi_out, xi_relay,
                lam if lam is not None else stats.mean_cost_per_step,
                stats.mean_power_per_link, stats.mean_outage_per_link,
                stats.mean_distance_steps))
    return rows
