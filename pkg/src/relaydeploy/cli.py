"""Command-line front door: solve, sweep, simulate, learn-curve, serve.

stdout carries only data (JSON or CSV); diagnostics go to stderr. Exit
codes: 0 ok, 2 config error, 3 numeric non-convergence, 4 infeasible
constraints.
"""
from __future__ import annotations

import functools
import json
import sys

import click

from .asyougo import AsYouGoConfig, average_cost_limit
from .channel import as_finite, dbm_to_mw
from .config import channel_from_dict, deployment_from_dict, load_config_file
from .errors import ConfigError, ConvergenceError, InfeasibleConstraintsError
from .explore import policy_iteration
from .learning import LearnProtocol
from .policies import (HeuAsYouGoHandle, HeuExploreLimHandle, LearnerHandle,
                       OptAsYouGoHandle, OptExploreLimHandle, POLICY_KINDS)
from .simulate import convergence_curve, run_deployment, summarize, trace_to_csv
from .sweep import SWEEP_CSV_HEADER, sweep_rows

EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_INFEASIBLE = 4


def _structured_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except ConvergenceError as exc:
            click.echo(f"did not converge: {exc} "
                       f"(last estimates: {exc.last_estimates})", err=True)
            sys.exit(EXIT_NONCONVERGENCE)
        except InfeasibleConstraintsError as exc:
            click.echo(f"infeasible constraints: {exc}", err=True)
            sys.exit(EXIT_INFEASIBLE)
    return wrapper


def _load(config_path, xi_out, xi_relay):
    doc = load_config_file(config_path)
    params, power_set, model = channel_from_dict(doc.get("channel", doc), path="channel")
    cfg = deployment_from_dict(doc.get("deployment"), xi_out=xi_out, xi_relay=xi_relay)
    return params, power_set, model, cfg


def _ensure_box(protocol, cfg, model_fin, power_set, params):
    """Fill in the projection box from the targets when a protocol omits it."""
    import dataclasses

    from .learning import select_projection_box
    if protocol.box is not None or protocol.q_bar is None or protocol.n_bar is None:
        return protocol
    box = select_projection_box(model_fin, power_set, params, cfg,
                                protocol.q_bar, protocol.n_bar)
    return dataclasses.replace(protocol, box=box)


def _build_handle(kind, cfg, model_fin, power_set, params, lambda0, fixed_power_dbm,
                  target_outage, protocol):
    if kind == "opt-el":
        res = policy_iteration(cfg, model_fin, power_set, params)
        return OptExploreLimHandle(policy=res.policy, levels_mw=power_set.levels)
    if kind == "heu-el":
        return HeuExploreLimHandle(xi_out=cfg.xi_out, xi_relay=cfg.xi_relay,
                                   a_skip=cfg.a_skip, levels_mw=power_set.levels)
    if kind == "opt-ayg":
        acfg = AsYouGoConfig(cfg.a_skip, cfg.b_window, cfg.xi_out, cfg.xi_relay)
        sol = average_cost_limit(acfg, model_fin, power_set, params)
        return OptAsYouGoHandle(policy=sol.policy, levels_mw=power_set.levels)
    if kind == "heu-ayg":
        if fixed_power_dbm is None or target_outage is None:
            raise ConfigError("heu-ayg needs --fixed-power-dbm and --target-outage")
        return HeuAsYouGoHandle(fixed_power_mw=power_set.nearest(dbm_to_mw(fixed_power_dbm)),
                                target_outage=target_outage,
                                a_skip=cfg.a_skip, b_window=cfg.b_window)
    if kind in ("oel-learn", "oel-ratio", "oelal"):
        if protocol is None:
            if lambda0 is None:
                raise ConfigError(f"{kind} needs --lambda0 or --protocol-file")
            protocol = LearnProtocol(lambda0=lambda0)
        if kind == "oelal":
            protocol = _ensure_box(protocol, cfg, model_fin, power_set, params)
        return LearnerHandle(kind=kind, state=protocol.initial_state(cfg), cfg=cfg,
                             levels_mw=power_set.levels, protocol=protocol)
    raise ConfigError(f"unknown policy {kind!r}")


@click.group()
def main():
    """Relay placement along a line: solvers, simulator, learners, service."""


@main.command()
@click.option("--policy", type=click.Choice(["opt-el", "opt-ayg"]), default="opt-el",
              show_default=True)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--xi-out", type=float, default=None)
@click.option("--xi-relay", type=float, default=None)
@click.option("--n-shadowing", type=int, default=31, show_default=True,
              help="atoms when discretizing log-normal shadowing")
@click.option("--theta-schedule", default=None,
              help="comma-separated decreasing line-end probabilities (opt-ayg)")
@_structured_errors
def solve(policy, config_path, xi_out, xi_relay, n_shadowing, theta_schedule):
    """Compute the optimal average cost per step and its policy artifact."""
    params, power_set, model, cfg = _load(config_path, xi_out, xi_relay)
    model_fin = as_finite(model, n_shadowing)
    if policy == "opt-el":
        res = policy_iteration(cfg, model_fin, power_set, params)
        out = {"policy": "opt-el", "lambda_star": res.lambda_star,
               "iterations": res.iterations,
               "index_policy": res.policy.to_json_dict()}
    else:
        acfg = AsYouGoConfig(cfg.a_skip, cfg.b_window, cfg.xi_out, cfg.xi_relay)
        kwargs = {}
        if theta_schedule:
            kwargs["theta_schedule"] = [float(x) for x in theta_schedule.split(",")]
        sol = average_cost_limit(acfg, model_fin, power_set, params, **kwargs)
        out = {"policy": "opt-ayg", "lambda_star": sol.lambda_per_step,
               "theta": sol.theta,
               "threshold_policy": sol.policy.to_json_dict()}
    click.echo(json.dumps(out))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--xi-out", type=float, required=True)
@click.option("--xi-relay-grid", default="", help="comma-separated xi_relay values")
@click.option("--policy", type=click.Choice(["opt-el", "all"]), default="opt-el",
              show_default=True)
@click.option("--relays", type=int, default=20000, show_default=True,
              help="simulated relays per grid point (simulated algorithms)")
@click.option("--seed", type=int, default=None,
              help="required when --policy all (simulation)")
@click.option("--n-shadowing", type=int, default=31, show_default=True)
@click.option("--snap-fixed-power", is_flag=True,
              help="snap the calibrated fixed power to the nearest level")
@_structured_errors
def sweep(config_path, xi_out, xi_relay_grid, policy, relays, seed, n_shadowing,
          snap_fixed_power):
    """CSV of cost/power/outage/distance versus xi_relay.

    With --policy all, rows carry a leading `algorithm` column and the
    heuristics are simulated (deterministic given --seed).
    """
    params, power_set, model, cfg = _load(config_path, xi_out, None)
    model_fin = as_finite(model, n_shadowing)
    grid = [float(x) for x in xi_relay_grid.split(",") if x.strip()]
    algorithms = ("opt-el",) if policy == "opt-el" else \
        ("opt-el", "heu-el", "opt-ayg", "heu-ayg")
    if policy == "all" and seed is None:
        raise ConfigError("--seed is required with --policy all")
    with_alg = policy == "all"
    click.echo(("algorithm," if with_alg else "") + SWEEP_CSV_HEADER)
    rows = sweep_rows(xi_out, grid, cfg.a_skip, cfg.b_window, model_fin, model,
                      power_set, params, algorithms=algorithms, n_relays=relays,
                      seed=seed, snap_fixed_power=snap_fixed_power)
    for row in rows:
        click.echo(row.csv(with_algorithm=with_alg))


@main.command()
@click.option("--policy", type=click.Choice(list(POLICY_KINDS)), required=True)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--xi-out", type=float, default=None)
@click.option("--xi-relay", type=float, default=None)
@click.option("--relays", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--n-shadowing", type=int, default=31, show_default=True)
@click.option("--lambda0", type=float, default=None, help="learner start")
@click.option("--fixed-power-dbm", type=float, default=None, help="heu-ayg")
@click.option("--target-outage", type=float, default=None, help="heu-ayg")
@click.option("--protocol-file", type=click.Path(exists=True), default=None)
@click.option("--trace-out", type=click.Path(), default=None,
              help="also write the per-relay trace CSV here")
@_structured_errors
def simulate(policy, config_path, xi_out, xi_relay, relays, seed, n_shadowing,
             lambda0, fixed_power_dbm, target_outage, protocol_file, trace_out):
    """Run one seeded deployment and print the metrics summary as JSON."""
    params, power_set, model, cfg = _load(config_path, xi_out, xi_relay)
    model_fin = as_finite(model, n_shadowing)
    protocol = None
    if protocol_file:
        protocol = LearnProtocol.from_json_dict(load_config_file(protocol_file))
    handle = _build_handle(policy, cfg, model_fin, power_set, params, lambda0,
                           fixed_power_dbm, target_outage, protocol)
    trace = run_deployment(handle, relays, seed, cfg, model, power_set, params)
    stats = summarize(trace, cfg.xi_out, cfg.xi_relay)
    if trace_out:
        with open(trace_out, "w") as fh:
            fh.write(trace_to_csv(trace))
    click.echo(json.dumps({"policy": policy, "seed": seed, "relays": relays,
                           "metrics": stats.to_json_dict()}))


@main.command("learn-curve")
@click.option("--learner", type=click.Choice(["oel-learn", "oel-ratio", "oelal"]),
              required=True)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--xi-out", type=float, default=None)
@click.option("--xi-relay", type=float, default=None)
@click.option("--runs", type=int, default=1000, show_default=True)
@click.option("--relays", type=int, default=50, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--protocol-file", type=click.Path(exists=True), default=None)
@click.option("--lambda0", type=float, default=None)
@_structured_errors
def learn_curve(learner, config_path, xi_out, xi_relay, runs, relays, seed,
                protocol_file, lambda0):
    """Ensemble convergence curves as CSV keyed by k."""
    params, power_set, model, cfg = _load(config_path, xi_out, xi_relay)
    if protocol_file:
        protocol = LearnProtocol.from_json_dict(load_config_file(protocol_file))
    elif lambda0 is not None:
        from .learning import PowerLawSchedule
        protocol = LearnProtocol(lambda0=lambda0,
                                 schedule_a=PowerLawSchedule(1.0, 0.55))
    else:
        raise ConfigError("learn-curve needs --protocol-file or --lambda0")
    if learner == "oelal":
        protocol = _ensure_box(protocol, cfg, as_finite(model), power_set, params)
    curves = convergence_curve(learner, runs, relays, seed, cfg, model, power_set,
                               params, protocol)
    click.echo("k,lambda_hat,xi_out_hat,xi_relay_hat,power_per_step_mw,"
               "outage_per_step,distance_steps")
    for i, k in enumerate(curves.k):
        click.echo(",".join([str(int(k))] + [
            format(v[i], ".10g") for v in
            (curves.lambda_mean, curves.xi_out_mean, curves.xi_relay_mean,
             curves.power_per_step, curves.outage_per_step, curves.distance_mean)]))


@main.command()
@click.option("--port", type=int, default=8421, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(), default=None,
              help="session storage (defaults to $RELAYDEPLOY_DATA)")
@_structured_errors
def serve(port, host, data_dir):
    """Run the deployment-assistant HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
