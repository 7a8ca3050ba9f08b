"""Deployment-assistant session engine.

A session is a JSON document; every mutation is a pure function of the
document and the request, so replaying the event log reproduces the exact
same recommendations and learner snapshots.
"""
from __future__ import annotations

import numpy as np

from ..actions import Place
from ..asyougo import (AsYouGoConfig, ThresholdPolicy, average_cost_limit,
                       heu_asyougo_decide, optasyougo_decide)
from ..channel import FiniteShadowing, as_finite, dbm_to_mw, mw_to_dbm
from ..config import channel_from_dict, deployment_from_dict
from ..errors import ConfigError
from ..explore import IndexPolicy, explorelim_decide, heu_explorelim_decide
from ..learning import (LearnerState, LearnProtocol, learner_decide,
                        oel_update, oelal_update, ratio_update,
                        select_projection_box)
from ..policies import POLICY_KINDS
from ..simulate import DeploymentTrace, trace_to_csv

SEQUENTIAL_KINDS = ("opt-ayg", "heu-ayg")
LEARNER_KINDS = ("oel-learn", "oel-ratio", "oelal")


class ConflictError(RuntimeError):
    """Mutation clashes with the session state (version or pending round)."""


class SessionContext:
    """Decoded config of one session: channel objects plus the policy kind."""

    def __init__(self, config: dict):
        self.params, self.power_set, self.model = channel_from_dict(
            config.get("channel"), path="channel")
        self.cfg = deployment_from_dict(config.get("deployment"))
        policy = config.get("policy") or {}
        self.kind = policy.get("kind")
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"policy.kind: unknown policy {self.kind!r}; "
                              f"choose one of {', '.join(POLICY_KINDS)}")
        self.policy_params = policy
        self.mode = "sequential" if self.kind in SEQUENTIAL_KINDS else "window"
        self.levels = self.power_set.levels

    def finite_model(self) -> FiniteShadowing:
        return as_finite(self.model, int(self.policy_params.get("n_shadowing", 31)))

    def solve_artifact(self) -> dict:
        """Solve/derive whatever the policy kind needs at session creation."""
        kind = self.kind
        pp = self.policy_params
        if kind == "opt-ayg":
            acfg = AsYouGoConfig(self.cfg.a_skip, self.cfg.b_window,
                                 self.cfg.xi_out, self.cfg.xi_relay)
            sol = average_cost_limit(acfg, self.finite_model(), self.power_set, self.params)
            return {"threshold_policy": sol.policy.to_json_dict(),
                    "lambda_per_step": sol.lambda_per_step}
        if kind == "opt-el":
            from ..explore import policy_iteration
            res = policy_iteration(self.cfg, self.finite_model(), self.power_set, self.params)
            return {"index_policy": res.policy.to_json_dict()}
        if kind == "heu-ayg":
            if pp.get("fixed_power_dbm") is None or pp.get("target_outage") is None:
                raise ConfigError("policy: heu-ayg needs fixed_power_dbm and target_outage")
            fixed = self.power_set.nearest(dbm_to_mw(float(pp["fixed_power_dbm"])))
            target = float(pp["target_outage"])
            if not 0.0 < target < 1.0:
                raise ConfigError("policy.target_outage: must be in (0,1)")
            return {"fixed_power_mw": fixed, "target_outage": target}
        if kind == "heu-el":
            return {}
        # learners
        if pp.get("lambda0") is None:
            raise ConfigError(f"policy: {kind} needs lambda0")
        protocol = {"lambda0": float(pp["lambda0"])}
        if kind in ("oel-learn", "oelal"):
            if pp.get("schedule_a") is None:
                raise ConfigError(f"policy: {kind} needs schedule_a")
            protocol["schedule_a"] = dict(pp["schedule_a"])
        if kind == "oelal":
            for key in ("schedule_b_out", "schedule_b_relay", "q_bar", "n_bar"):
                if pp.get(key) is None:
                    raise ConfigError(f"policy: oelal needs {key}")
            protocol["schedule_b_out"] = dict(pp["schedule_b_out"])
            protocol["schedule_b_relay"] = dict(pp["schedule_b_relay"])
            protocol["q_bar"] = float(pp["q_bar"])
            protocol["n_bar"] = float(pp["n_bar"])
            for key in ("xi_out0", "xi_relay0"):
                if pp.get(key) is not None:
                    protocol[key] = float(pp[key])
            if pp.get("box") is not None:
                protocol["box"] = [float(x) for x in pp["box"]]
            else:
                protocol["box"] = list(select_projection_box(
                    self.finite_model(), self.power_set, self.params, self.cfg,
                    protocol["q_bar"], protocol["n_bar"]))
        proto = LearnProtocol.from_json_dict(protocol)
        # validates schedules and box containment up front
        proto.initial_state(self.cfg)
        return {"protocol": protocol}


def _initial_round(ctx):
    return {"cursor": ctx.cfg.a_skip + 1, "readings": {}}


def create_session(config: dict, session_id: str, now: str) -> dict:
    ctx = SessionContext(config)
    artifact = ctx.solve_artifact()
    doc = {
        "id": session_id,
        "version": 1,
        "created_at": now,
        "updated_at": now,
        "config": config,
        "artifact": artifact,
        "mode": ctx.mode,
        "round": _initial_round(ctx),
        "pending": None,
        "learner": None,
        "history": [],
    }
    if ctx.kind in LEARNER_KINDS:
        proto = LearnProtocol.from_json_dict(artifact["protocol"])
        doc["learner"] = proto.initial_state(ctx.cfg).to_json_dict()
    return doc


def _window_locations(ctx):
    return list(ctx.cfg.u_values)


def _decide_window(ctx, doc):
    readings = doc["round"]["readings"]
    matrix = np.array([readings[str(r)] for r in _window_locations(ctx)], dtype=float)
    kind = ctx.kind
    if kind == "opt-el":
        policy = IndexPolicy.from_json_dict(doc["artifact"]["index_policy"])
        return explorelim_decide(matrix, policy, ctx.levels)
    if kind == "heu-el":
        return heu_explorelim_decide(matrix, ctx.cfg.xi_out, ctx.cfg.xi_relay,
                                     ctx.levels, a_skip=ctx.cfg.a_skip)
    state = LearnerState.from_json_dict(doc["learner"])
    u, gamma, _ = learner_decide(state, matrix, ctx.cfg, ctx.levels)
    return u, gamma


def _decide_sequential(ctx, doc, r, readings_list):
    kind = ctx.kind
    if kind == "opt-ayg":
        policy = ThresholdPolicy.from_json_dict(doc["artifact"]["threshold_policy"])
        readings = dict(zip(ctx.levels, readings_list))
        return optasyougo_decide(r, readings, policy, ctx.cfg.xi_out)
    fixed = doc["artifact"]["fixed_power_mw"]
    idx = int(np.argmin(np.abs(np.asarray(ctx.levels) - fixed)))
    geometry = AsYouGoConfig(ctx.cfg.a_skip, ctx.cfg.b_window, 0.0, 0.0)
    return heu_asyougo_decide(r, readings_list[idx], fixed,
                              doc["artifact"]["target_outage"], geometry)


def apply_measurement(ctx: SessionContext, doc: dict, location: int,
                      readings: list[float]) -> tuple[dict, dict]:
    """Record one location's readings; answer with a recommendation."""
    if len(readings) != len(ctx.levels):
        raise ConfigError(f"readings: expected {len(ctx.levels)} values "
                          f"(one per power level), got {len(readings)}")
    if any(not 0.0 <= q <= 1.0 for q in readings):
        raise ConfigError("readings: outage values must lie in [0,1]")
    window = _window_locations(ctx)
    if location not in window:
        raise ConfigError(f"location: {location} outside window "
                          f"[{window[0]}, {window[-1]}]")
    if doc["pending"] is not None:
        raise ConflictError("a placement recommendation is awaiting confirmation")

    rnd = doc["round"]
    if ctx.mode == "sequential":
        if location != rnd["cursor"]:
            raise ConfigError(f"location: expected the round cursor {rnd['cursor']}, "
                              f"got {location}")
        rnd["readings"][str(location)] = list(readings)
        action = _decide_sequential(ctx, doc, location, readings)
        if isinstance(action, Place):
            gamma_dbm = mw_to_dbm(action.gamma_mw)
            doc["pending"] = {"u_steps": action.u_steps, "gamma_dbm": gamma_dbm}
            rec = {"action": "place", "u_steps": action.u_steps,
                   "gamma_dbm": gamma_dbm, "gamma_mw": action.gamma_mw}
        else:
            rnd["cursor"] = location + 1
            rec = {"action": "continue"}
    else:
        if str(location) in rnd["readings"]:
            raise ConfigError(f"location: {location} already measured this round")
        rnd["readings"][str(location)] = list(readings)
        missing = [r for r in window if str(r) not in rnd["readings"]]
        if missing:
            rec = {"action": "need_more", "locations_pending": missing}
        else:
            u, gamma = _decide_window(ctx, doc)
            gamma_dbm = mw_to_dbm(gamma)
            doc["pending"] = {"u_steps": u, "gamma_dbm": gamma_dbm}
            rec = {"action": "place", "u_steps": u, "gamma_dbm": gamma_dbm,
                   "gamma_mw": gamma}
    return doc, rec


def apply_placement(ctx: SessionContext, doc: dict, u_steps: int, gamma_dbm: float,
                    realized_outage: float, override: bool) -> tuple[dict, dict | None]:
    """Confirm a placement, advance any learner, reset the round."""
    pending = doc["pending"]
    if pending is None:
        raise ConflictError("no placement recommendation is pending")
    if not override and (u_steps != pending["u_steps"]
                         or abs(gamma_dbm - pending["gamma_dbm"]) > 1e-9):
        raise ConflictError(
            f"placement ({u_steps}, {gamma_dbm} dBm) differs from the recommendation "
            f"({pending['u_steps']}, {pending['gamma_dbm']} dBm); "
            "set override=true to record it anyway")
    window = _window_locations(ctx)
    if u_steps not in window:
        raise ConfigError(f"u_steps: {u_steps} outside window")

    gamma_mw = dbm_to_mw(gamma_dbm)
    snapshot = None
    if ctx.kind in LEARNER_KINDS:
        state = LearnerState.from_json_dict(doc["learner"])
        proto = LearnProtocol.from_json_dict(doc["artifact"]["protocol"])
        if ctx.kind == "oel-learn":
            state = oel_update(state, u_steps, gamma_mw, realized_outage,
                               proto.schedule_a)
        elif ctx.kind == "oel-ratio":
            state = ratio_update(state, u_steps, gamma_mw, realized_outage)
        else:
            state = oelal_update(state, u_steps, gamma_mw, realized_outage,
                                 proto.schedule_a, proto.schedule_b_out,
                                 proto.schedule_b_relay)
        doc["learner"] = state.to_json_dict()
        snapshot = doc["learner"]

    measured = len(doc["round"]["readings"])
    doc["history"].append({
        "u_steps": int(u_steps),
        "gamma_dbm": float(gamma_dbm),
        "q_out": float(realized_outage),
        "lambda_hat": snapshot["lambda_hat"] if snapshot else None,
        "xi_out_hat": snapshot["xi_out_hat"] if snapshot else None,
        "xi_relay_hat": snapshot["xi_relay_hat"] if snapshot else None,
        "override": bool(override),
        "measured": measured,
    })
    doc["pending"] = None
    doc["round"] = _initial_round(ctx)
    return doc, snapshot


def session_trace(doc: dict) -> DeploymentTrace:
    hist = doc["history"]
    n = len(hist)

    def col(key, default=np.nan):
        return np.array([default if h[key] is None else h[key] for h in hist], dtype=float)

    return DeploymentTrace(
        u_steps=np.array([h["u_steps"] for h in hist], dtype=int),
        gamma_mw=np.array([dbm_to_mw(h["gamma_dbm"]) for h in hist], dtype=float)
        if n else np.zeros(0),
        q_out=col("q_out") if n else np.zeros(0),
        lambda_hat=col("lambda_hat") if n else np.zeros(0),
        xi_out_hat=col("xi_out_hat") if n else np.zeros(0),
        xi_relay_hat=col("xi_relay_hat") if n else np.zeros(0),
        measurements=np.array([h["measured"] for h in hist], dtype=int),
        seed=None,
        mode=doc["mode"],
    )


def session_trace_csv(doc: dict) -> str:
    return trace_to_csv(session_trace(doc))
