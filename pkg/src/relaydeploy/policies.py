"""One decision contract for every deployment algorithm.

Sequential handles answer one location at a time (pure as-you-go walks);
window handles want the full B x M outage matrix before answering
(explore-forward). Learner-backed handles additionally commit the realized
link after each confirmed placement.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asyougo import ThresholdPolicy, heu_asyougo_decide, optasyougo_decide
from .errors import ConfigError
from .explore import ExploreConfig, IndexPolicy, explorelim_decide, heu_explorelim_decide
from .learning import (LearnerState, LearnProtocol, learner_decide, oel_update,
                       oelal_update, ratio_update)

__all__ = [
    "POLICY_KINDS",
    "OptAsYouGoHandle",
    "HeuAsYouGoHandle",
    "OptExploreLimHandle",
    "HeuExploreLimHandle",
    "LearnerHandle",
    "calibrate_heu_asyougo",
]

POLICY_KINDS = ("opt-ayg", "heu-ayg", "opt-el", "heu-el",
                "oel-learn", "oel-ratio", "oelal")


@dataclass(frozen=True)
class OptAsYouGoHandle:
    """Threshold rule over measured per-power outages; forced at A+B."""

    policy: ThresholdPolicy
    levels_mw: tuple[float, ...]

    mode = "sequential"

    @property
    def measure_levels(self):
        return self.levels_mw

    def decide(self, r_steps, readings):
        return optasyougo_decide(r_steps, readings, self.policy, self.policy.xi_out)


@dataclass(frozen=True)
class HeuAsYouGoHandle:
    """Fixed-power target-outage rule with the one-step walk back."""

    fixed_power_mw: float
    target_outage: float
    a_skip: int
    b_window: int

    mode = "sequential"

    @property
    def measure_levels(self):
        return (self.fixed_power_mw,)

    def decide(self, r_steps, readings):
        cfg = _Geometry(self.a_skip, self.b_window)
        return heu_asyougo_decide(r_steps, readings[self.fixed_power_mw],
                                  self.fixed_power_mw, self.target_outage, cfg)


@dataclass(frozen=True)
class _Geometry:
    a_skip: int
    b_window: int

    @property
    def window(self):
        return range(self.a_skip + 1, self.a_skip + self.b_window + 1)


@dataclass(frozen=True)
class OptExploreLimHandle:
    """lambda-index rule over the full measured window."""

    policy: IndexPolicy
    levels_mw: tuple[float, ...]

    mode = "window"

    def decide(self, matrix):
        return explorelim_decide(matrix, self.policy, self.levels_mw)


@dataclass(frozen=True)
class HeuExploreLimHandle:
    """Per-step-cost ratio rule over the full measured window."""

    xi_out: float
    xi_relay: float
    a_skip: int
    levels_mw: tuple[float, ...]

    mode = "window"

    def decide(self, matrix):
        return heu_explorelim_decide(matrix, self.xi_out, self.xi_relay,
                                     self.levels_mw, a_skip=self.a_skip)


@dataclass
class LearnerHandle:
    """Window handle whose index rule tracks a LearnerState.

    decide() is a pure recommendation; commit() advances the state by one
    placed relay (single writer). kind is one of oel-learn / oel-ratio /
    oelal.
    """

    kind: str
    state: LearnerState
    cfg: ExploreConfig
    levels_mw: tuple[float, ...]
    protocol: LearnProtocol

    mode = "window"

    def __post_init__(self):
        if self.kind not in ("oel-learn", "oel-ratio", "oelal"):
            raise ConfigError(f"unknown learner kind {self.kind!r}")
        if self.kind in ("oel-learn", "oelal") and self.protocol.schedule_a is None:
            raise ConfigError(f"{self.kind} needs schedule_a")
        if self.kind == "oelal" and (self.protocol.schedule_b_out is None
                                     or self.protocol.schedule_b_relay is None):
            raise ConfigError("oelal needs both slow schedules")

    def decide(self, matrix):
        u, gamma, _ = learner_decide(self.state, matrix, self.cfg, self.levels_mw)
        return u, gamma

    def commit(self, u, gamma, q):
        if self.kind == "oel-learn":
            self.state = oel_update(self.state, u, gamma, q, self.protocol.schedule_a)
        elif self.kind == "oel-ratio":
            self.state = ratio_update(self.state, u, gamma, q)
        else:
            self.state = oelal_update(self.state, u, gamma, q,
                                      self.protocol.schedule_a,
                                      self.protocol.schedule_b_out,
                                      self.protocol.schedule_b_relay)
        return self.state


def calibrate_heu_asyougo(stats, power_set, snap=True):
    """Fair-comparison calibration from a simulated threshold-rule run.

    The fixed transmit power is the run's mean power per link (snapped to
    the nearest available level in linear mW unless ``snap`` is False) and
    the target outage is its mean outage per link.
    """
    if getattr(stats, "n_links", 0) < 1:
        raise ValueError("calibration needs at least one placed link")
    mean_power = stats.mean_power_per_link
    target = stats.mean_outage_per_link
    if not np.isfinite(mean_power) or mean_power <= 0.0:
        raise ValueError(f"bad mean power {mean_power}")
    if not 0.0 < target < 1.0:
        raise ValueError(f"target outage {target} outside (0,1)")
    fixed = power_set.nearest(mean_power) if snap else float(mean_power)
    return fixed, float(target)
