"""Model-free deployment learners for the explore-forward rule.

Two single-timescale learners track the optimal average cost per step for
fixed multipliers (a Robbins-Monro update and its running-ratio special
case), and a projected two-timescale learner additionally adapts the
multipliers toward outage-per-step and relays-per-step targets.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelParams, FiniteShadowing, PowerSet, outage_probability
from .errors import ConfigError, InfeasibleConstraintsError
from .explore import (ExploreConfig, IndexPolicy, explorelim_decide,
                      policy_iteration, policy_stats)

__all__ = [
    "PowerLawSchedule",
    "LearnerState",
    "LearnProtocol",
    "learner_decide",
    "oel_update",
    "ratio_update",
    "oelal_update",
    "oel_learn_step",
    "oel_learn_ratio_step",
    "oelal_step",
    "select_projection_box",
    "validate_two_timescale",
]


@dataclass(frozen=True)
class PowerLawSchedule:
    """Step sizes a_k = scale * k^-exponent.

    For 0 < exponent <= 1 the sums diverge while the squared sums stay
    finite whenever exponent > 1/2.
    """

    scale: float
    exponent: float

    def __post_init__(self):
        if not self.scale > 0.0:
            raise ConfigError("schedule scale must be positive")
        if not 0.0 < self.exponent <= 1.0:
            raise ConfigError("schedule exponent must be in (0, 1]")

    def value(self, k):
        if k < 1:
            raise ValueError("step index starts at 1")
        return self.scale * float(k) ** -self.exponent

    def to_json_dict(self):
        return {"kind": "power_law", "scale": self.scale, "exponent": self.exponent}

    @classmethod
    def from_json_dict(cls, doc):
        return cls(scale=float(doc["scale"]), exponent=float(doc["exponent"]))


def validate_two_timescale(schedule_a: PowerLawSchedule, schedule_b: PowerLawSchedule):
    """Fast lambda updates, slow multiplier updates: 1/2 < n1 < n2 <= 1."""
    n1, n2 = schedule_a.exponent, schedule_b.exponent
    if not (0.5 < n1 < n2 <= 1.0):
        raise ConfigError(
            f"two-timescale schedules need 1/2 < n1 < n2 <= 1, got n1={n1}, n2={n2}")


@dataclass(frozen=True)
class LearnerState:
    """Iterates and cumulative deployment sums after k placed relays."""

    lambda_hat: float
    xi_out_hat: float
    xi_relay_hat: float
    k: int = 0
    sum_power: float = 0.0
    sum_outage: float = 0.0
    sum_distance: float = 0.0
    box: tuple[float, float] | None = None      # (A2, A3) projection bounds
    targets: tuple[float, float] | None = None  # (q_bar, n_bar)

    def __post_init__(self):
        if self.box is not None:
            a2, a3 = self.box
            if not (0.0 <= self.xi_out_hat <= a2 and 0.0 <= self.xi_relay_hat <= a3):
                raise ConfigError("multiplier iterates must start inside the box")

    def to_json_dict(self):
        return {
            "lambda_hat": self.lambda_hat,
            "xi_out_hat": self.xi_out_hat,
            "xi_relay_hat": self.xi_relay_hat,
            "k": self.k,
            "sum_power": self.sum_power,
            "sum_outage": self.sum_outage,
            "sum_distance": self.sum_distance,
            "box": list(self.box) if self.box else None,
            "targets": list(self.targets) if self.targets else None,
        }

    @classmethod
    def from_json_dict(cls, doc):
        return cls(
            lambda_hat=float(doc["lambda_hat"]),
            xi_out_hat=float(doc["xi_out_hat"]),
            xi_relay_hat=float(doc["xi_relay_hat"]),
            k=int(doc["k"]),
            sum_power=float(doc["sum_power"]),
            sum_outage=float(doc["sum_outage"]),
            sum_distance=float(doc["sum_distance"]),
            box=tuple(doc["box"]) if doc.get("box") else None,
            targets=tuple(doc["targets"]) if doc.get("targets") else None,
        )


def learner_decide(state: LearnerState, measured_outages, cfg: ExploreConfig,
                   levels_mw):
    """Index-rule recommendation from the current iterates: (u, gamma, q)."""
    policy = IndexPolicy(lam=state.lambda_hat, xi_out=state.xi_out_hat,
                         xi_relay=state.xi_relay_hat,
                         a_skip=cfg.a_skip, b_window=cfg.b_window)
    u, gamma = explorelim_decide(measured_outages, policy, levels_mw)
    mat = np.asarray(measured_outages, dtype=float)
    q = float(mat[u - cfg.a_skip - 1, list(levels_mw).index(gamma)])
    return u, gamma, q


def _accumulate(state, u, gamma, q):
    return replace(state, k=state.k + 1,
                   sum_power=state.sum_power + gamma,
                   sum_outage=state.sum_outage + q,
                   sum_distance=state.sum_distance + u)


def oel_update(state: LearnerState, u, gamma, q,
               schedule_a: PowerLawSchedule) -> LearnerState:
    """Robbins-Monro update from the realized link (u, gamma, q):

        lambda <- lambda + a_(k+1) * (gamma + xi_out*q + xi_relay - lambda*u)
    """
    innovation = (gamma + state.xi_out_hat * q + state.xi_relay_hat
                  - state.lambda_hat * u)
    new_lambda = state.lambda_hat + schedule_a.value(state.k + 1) * innovation
    return replace(_accumulate(state, u, gamma, q), lambda_hat=new_lambda)


def ratio_update(state: LearnerState, u, gamma, q) -> LearnerState:
    """Running-ratio update: lambda becomes the deployed network's cost per step,

        lambda = sum_i (gamma_i + xi_out*q_i + xi_relay) / sum_i u_i

    which equals the general update with a_k = 1/sum(u_i); the first
    placement erases the initial lambda entirely.
    """
    new = _accumulate(state, u, gamma, q)
    ratio = ((new.sum_power + state.xi_out_hat * new.sum_outage
              + state.xi_relay_hat * new.k) / new.sum_distance)
    return replace(new, lambda_hat=ratio)


def oelal_update(state: LearnerState, u, gamma, q, schedule_a: PowerLawSchedule,
                 schedule_b_out: PowerLawSchedule,
                 schedule_b_relay: PowerLawSchedule) -> LearnerState:
    """Two-timescale update: fast lambda step, slow projected multiplier steps.

        xi_out   <- clip(xi_out   + b_k*(q_k - q_bar*u_k), [0, A2])
        xi_relay <- clip(xi_relay + b_k*(1 - n_bar*u_k),   [0, A3])
    """
    validate_two_timescale(schedule_a, schedule_b_out)
    validate_two_timescale(schedule_a, schedule_b_relay)
    if state.box is None or state.targets is None:
        raise ConfigError("adaptive learner needs a projection box and targets")
    a2, a3 = state.box
    q_bar, n_bar = state.targets
    k_new = state.k + 1
    innovation = (gamma + state.xi_out_hat * q + state.xi_relay_hat
                  - state.lambda_hat * u)
    new_lambda = state.lambda_hat + schedule_a.value(k_new) * innovation
    new_xi_out = float(np.clip(
        state.xi_out_hat + schedule_b_out.value(k_new) * (q - q_bar * u), 0.0, a2))
    new_xi_relay = float(np.clip(
        state.xi_relay_hat + schedule_b_relay.value(k_new) * (1.0 - n_bar * u), 0.0, a3))
    return replace(_accumulate(state, u, gamma, q), lambda_hat=new_lambda,
                   xi_out_hat=new_xi_out, xi_relay_hat=new_xi_relay)


def oel_learn_step(state: LearnerState, measured_outages, schedule_a: PowerLawSchedule,
                   cfg: ExploreConfig, levels_mw):
    """Place one relay with the lambda-index rule, then update lambda.

    Multipliers in ``state`` stay fixed. Returns ((u, gamma), new_state).
    """
    u, gamma, q = learner_decide(state, measured_outages, cfg, levels_mw)
    return (u, gamma), oel_update(state, u, gamma, q, schedule_a)


def oel_learn_ratio_step(state: LearnerState, measured_outages,
                         cfg: ExploreConfig, levels_mw):
    """Place one relay with the lambda-index rule, then recompute the ratio."""
    u, gamma, q = learner_decide(state, measured_outages, cfg, levels_mw)
    return (u, gamma), ratio_update(state, u, gamma, q)


def oelal_step(state: LearnerState, measured_outages, schedule_a: PowerLawSchedule,
               schedule_b_out: PowerLawSchedule, schedule_b_relay: PowerLawSchedule,
               cfg: ExploreConfig, levels_mw):
    """Adaptive step: decide with the current iterates, then update all three."""
    u, gamma, q = learner_decide(state, measured_outages, cfg, levels_mw)
    new = oelal_update(state, u, gamma, q, schedule_a, schedule_b_out, schedule_b_relay)
    return (u, gamma), new


@dataclass(frozen=True)
class LearnProtocol:
    """Everything a learner run needs beyond the channel and window geometry.

    Single-timescale learners use lambda0 (and schedule_a for the general
    step); the adaptive learner additionally needs initial multipliers,
    both slow schedules, the targets and the projection box.
    """

    lambda0: float
    xi_out0: float | None = None
    xi_relay0: float | None = None
    schedule_a: PowerLawSchedule | None = None
    schedule_b_out: PowerLawSchedule | None = None
    schedule_b_relay: PowerLawSchedule | None = None
    q_bar: float | None = None
    n_bar: float | None = None
    box: tuple[float, float] | None = None

    def initial_state(self, cfg: ExploreConfig) -> LearnerState:
        return LearnerState(
            lambda_hat=self.lambda0,
            xi_out_hat=cfg.xi_out if self.xi_out0 is None else self.xi_out0,
            xi_relay_hat=cfg.xi_relay if self.xi_relay0 is None else self.xi_relay0,
            box=self.box,
            targets=(self.q_bar, self.n_bar) if self.q_bar is not None else None,
        )

    def to_json_dict(self):
        doc = {"lambda0": self.lambda0}
        for name in ("xi_out0", "xi_relay0", "q_bar", "n_bar"):
            if getattr(self, name) is not None:
                doc[name] = getattr(self, name)
        for name in ("schedule_a", "schedule_b_out", "schedule_b_relay"):
            if getattr(self, name) is not None:
                doc[name] = getattr(self, name).to_json_dict()
        if self.box is not None:
            doc["box"] = list(self.box)
        return doc

    @classmethod
    def from_json_dict(cls, doc):
        def sched(key):
            return PowerLawSchedule.from_json_dict(doc[key]) if key in doc else None

        return cls(
            lambda0=float(doc["lambda0"]),
            xi_out0=doc.get("xi_out0"),
            xi_relay0=doc.get("xi_relay0"),
            schedule_a=sched("schedule_a"),
            schedule_b_out=sched("schedule_b_out"),
            schedule_b_relay=sched("schedule_b_relay"),
            q_bar=doc.get("q_bar"),
            n_bar=doc.get("n_bar"),
            box=tuple(doc["box"]) if doc.get("box") else None,
        )


def _pm_dominant_prob(a2, u, model, power_set, params):
    """P over W that the per-link power minimizer at xi_out = a2 is P_M."""
    w, p = model.as_arrays()
    levels = power_set.as_array()
    costs = levels[:, None] + a2 * outage_probability(u, levels[:, None], w[None, :], params)
    return float(p[costs.argmin(axis=0) == len(levels) - 1].sum())


def _box_conditions_hold(a2, cfg, model, power_set, params, q_bar, kappa):
    for u in cfg.u_values:
        if _pm_dominant_prob(a2, int(u), model, power_set, params) <= 1.0 - kappa:
            return False
    probe = ExploreConfig(a_skip=cfg.a_skip, b_window=cfg.b_window,
                          xi_out=a2, xi_relay=0.0)
    res = policy_iteration(probe, model, power_set, params)
    g_bar, q_link, u_bar = policy_stats(res.distribution, probe, model, power_set, params)
    return q_link / u_bar <= q_bar


def select_projection_box(model: FiniteShadowing, power_set: PowerSet,
                          params: ChannelParams, cfg: ExploreConfig,
                          q_bar, n_bar, kappa=0.01):
    """Choose (A2, A3) for the adaptive learner's projection.

    A2 is the smallest multiplier (geometric grid 10^0..10^6, refined by
    bisection) at which the top power level dominates the per-link
    minimization with probability > 1-kappa at every window location and
    the optimal outage per step at (A2, 0) is at most q_bar. Then
    A3 = 100 * (A+B) * (P_M + A2).
    """
    if not isinstance(model, FiniteShadowing):
        raise ConfigError("box selection needs a finite shadowing alphabet")
    if q_bar <= 0.0 or n_bar <= 0.0:
        raise ConfigError("targets must be positive")
    horizon = cfg.a_skip + cfg.b_window
    min_distance = 1.0 / n_bar
    if min_distance > horizon * (1 + 1e-12):
        raise InfeasibleConstraintsError(
            f"relays-per-step target {n_bar} needs mean distance {min_distance:.3f} "
            f"> window end {horizon}")
    if abs(min_distance - horizon) <= 1e-9 * horizon:
        w, p = model.as_arrays()
        q_floor = float((p * outage_probability(horizon, power_set.levels[-1], w, params)).sum())
        if q_bar < q_floor / horizon:
            raise InfeasibleConstraintsError(
                f"forced placement at {horizon} steps has outage/step "
                f">= {q_floor / horizon:.6g} > target {q_bar}")

    ok = lambda a2: _box_conditions_hold(a2, cfg, model, power_set, params, q_bar, kappa)
    grid = [10.0**j for j in range(0, 7)]
    hit = next((a2 for a2 in grid if ok(a2)), None)
    if hit is None:
        raise InfeasibleConstraintsError(
            "no multiplier up to 1e6 makes the top power level dominant "
            "while meeting the outage-per-step target")
    lo = hit / 10.0 if hit > grid[0] else 0.0
    hi = hit
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if ok(mid):
            hi = mid
        else:
            lo = mid
    a2 = hi
    a3 = 100.0 * horizon * (power_set.levels[-1] + a2)
    return a2, a3
