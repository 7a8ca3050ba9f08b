"""Explore-forward deployment: SMDP index policies and policy iteration.

The agent measures all of locations A+1 .. A+B behind a skip of A, then
walks back to the best one. The optimal rule is an index policy: minimize
gamma + xi_out*Q + xi_relay - lambda*u over the measured (u, gamma) grid,
where lambda is the optimal average cost per step.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, FiniteShadowing, PowerSet, outage_probability
from .errors import ConfigError, ConvergenceError, StateSpaceTooLargeError

__all__ = [
    "ExploreConfig",
    "IndexPolicy",
    "ActionDistribution",
    "explorelim_decide",
    "heu_explorelim_decide",
    "policy_eval_reduced",
    "policy_eval_bruteforce",
    "policy_iteration",
    "optimality_residual",
    "hop_tables",
    "policy_stats",
]


@dataclass(frozen=True)
class ExploreConfig:
    """Window geometry and cost multipliers (no line-end probability)."""

    a_skip: int
    b_window: int
    xi_out: float
    xi_relay: float

    def __post_init__(self):
        if self.a_skip < 0 or self.b_window < 1:
            raise ConfigError("need a_skip >= 0 and b_window >= 1")
        if self.xi_out < 0 or self.xi_relay < 0:
            raise ConfigError("cost multipliers must be nonnegative")

    @property
    def u_values(self):
        return np.arange(self.a_skip + 1, self.a_skip + self.b_window + 1)


@dataclass(frozen=True)
class IndexPolicy:
    """Stationary explore-forward rule parameterized by (lambda, xi_out, xi_relay)."""

    lam: float
    xi_out: float
    xi_relay: float
    a_skip: int
    b_window: int

    def to_json_dict(self):
        return {"lambda": self.lam, "xi_out": self.xi_out, "xi_relay": self.xi_relay,
                "a_skip": self.a_skip, "b_window": self.b_window,
                "units": "mW, mW/step"}

    @classmethod
    def from_json_dict(cls, doc):
        return cls(lam=float(doc["lambda"]), xi_out=float(doc["xi_out"]),
                   xi_relay=float(doc["xi_relay"]), a_skip=int(doc["a_skip"]),
                   b_window=int(doc["b_window"]))


@dataclass(frozen=True)
class ActionDistribution:
    """Probability that the rule picks (u, gamma) with shadowing atom w at u.

    b has shape (B, M, |W|); b[i, g, j] is the probability that the chosen
    location is u = A+1+i using power level g while W_u equals atom j.
    """

    b: np.ndarray
    u_values: np.ndarray
    levels: np.ndarray
    w_values: np.ndarray

    @property
    def total_mass(self):
        return float(self.b.sum())

    def marginal_uw(self):
        return self.b.sum(axis=1)


def _as_matrix(measured_outages, b_window, m_levels):
    mat = np.asarray(measured_outages, dtype=float)
    if mat.shape != (b_window, m_levels):
        raise ValueError(f"measured outage matrix must be {b_window}x{m_levels}, "
                         f"got {mat.shape}")
    if np.any(mat < 0.0) or np.any(mat > 1.0):
        raise ValueError("outage readings must lie in [0,1]")
    return mat


def _argmin_cell(scores):
    """Row-major argmin over a (B, M) score grid.

    Rows are locations in increasing u and columns powers in increasing
    gamma, so the first minimum is the smallest-u, then smallest-gamma
    tie-break.
    """
    flat = int(np.argmin(scores))
    return flat // scores.shape[1], flat % scores.shape[1]


def explorelim_decide(measured_outages, policy: IndexPolicy, levels_mw=None):
    """Index rule: argmin over (u, gamma) of gamma + xi_out*Q + xi_relay - lambda*u.

    ``measured_outages`` is the B x M matrix of outage readings (rows are
    locations A+1..A+B, columns the power levels ascending). Returns
    (u_steps, gamma_mw).
    """
    if levels_mw is None:
        raise ValueError("levels_mw (ascending transmit powers) is required")
    levels = np.asarray(levels_mw, dtype=float)
    mat = _as_matrix(measured_outages, policy.b_window, len(levels))
    us = np.arange(policy.a_skip + 1, policy.a_skip + policy.b_window + 1)
    scores = (levels[None, :] + policy.xi_out * mat + policy.xi_relay
              - policy.lam * us[:, None])
    i, g = _argmin_cell(scores)
    return int(us[i]), float(levels[g])


def heu_explorelim_decide(measured_outages, xi_out, xi_relay, levels_mw, a_skip=0):
    """Ratio heuristic: argmin over (u, gamma) of (gamma + xi_out*Q + xi_relay)/u."""
    levels = np.asarray(levels_mw, dtype=float)
    mat = np.asarray(measured_outages, dtype=float)
    us = np.arange(a_skip + 1, a_skip + mat.shape[0] + 1)
    scores = (levels[None, :] + xi_out * mat + xi_relay) / us[:, None]
    i, g = _argmin_cell(scores)
    return int(us[i]), float(levels[g])


def hop_tables(cfg: ExploreConfig, model: FiniteShadowing, power_set: PowerSet,
               params: ChannelParams):
    """Per-(location, atom) best hop cost h and its power index.

    h[i, j] = min_gamma gamma + xi_out*Q(A+1+i, gamma, w_j); gidx[i, j] is
    the argmin power index (smallest power on ties).
    """
    w, _ = model.as_arrays()
    us = cfg.u_values
    levels = power_set.as_array()
    q = outage_probability(us[:, None, None], levels[None, :, None],
                           w[None, None, :], params)
    costs = levels[None, :, None] + cfg.xi_out * q
    gidx = costs.argmin(axis=1)
    h = np.take_along_axis(costs, gidx[:, None, :], axis=1)[:, 0, :]
    return h, gidx


def _partition_probabilities(score, probs):
    """P(location i with atom j is chosen) under the min-u tie-break.

    score has shape (B, |W|); the chosen location must beat every earlier
    location strictly and every later location weakly:

        b[i, j] = p_j * prod_{r<i} P(score[r, W] > score[i, j])
                      * prod_{r>i} P(score[r, W] >= score[i, j])
    """
    B = score.shape[0]
    gt = (score[:, None, None, :] > score[None, :, :, None]) @ probs  # (r, i, j)
    ge = (score[:, None, None, :] >= score[None, :, :, None]) @ probs
    b = np.tile(probs, (B, 1))
    for r in range(B):
        for i in range(B):
            if r < i:
                b[i] *= gt[r, i]
            elif r > i:
                b[i] *= ge[r, i]
    return b


def _distribution(score, cfg, model, power_set, params):
    h, gidx = hop_tables(cfg, model, power_set, params)
    _, p = model.as_arrays()
    b_uw = _partition_probabilities(score, p)
    full = np.zeros((cfg.b_window, power_set.m, len(p)))
    rows = np.arange(cfg.b_window)[:, None]
    cols = np.arange(len(p))[None, :]
    full[rows, gidx, cols] = b_uw
    w, _ = model.as_arrays()
    return ActionDistribution(b=full, u_values=cfg.u_values,
                              levels=power_set.as_array(), w_values=w), h, gidx


def policy_stats(dist: ActionDistribution, cfg: ExploreConfig, model: FiniteShadowing,
                 power_set: PowerSet, params: ChannelParams):
    """Exact per-link means under the distribution: (power, outage, distance)."""
    w, _ = model.as_arrays()
    us = dist.u_values
    levels = dist.levels
    q = outage_probability(us[:, None, None], levels[None, :, None],
                           w[None, None, :], params)
    g_bar = float((dist.b * levels[None, :, None]).sum())
    q_bar = float((dist.b * q).sum())
    u_bar = float((dist.b * us[:, None, None]).sum())
    return g_bar, q_bar, u_bar


def policy_eval_reduced(lambda_k, cfg: ExploreConfig, model: FiniteShadowing,
                        power_set: PowerSet, params: ChannelParams):
    """Renewal-reward evaluation of the lambda_k index rule in O(B^2 M^2 |W|^2).

    Returns (lambda_next, ActionDistribution). Strict inequalities apply
    to locations before the chosen one and weak to those after, matching
    the min-u tie-break.
    """
    if not isinstance(model, FiniteShadowing):
        raise ConfigError("policy evaluation needs a finite shadowing alphabet")
    h, _ = hop_tables(cfg, model, power_set, params)
    score = h - lambda_k * cfg.u_values[:, None]
    dist, h, _ = _distribution(score, cfg, model, power_set, params)
    g_bar, q_bar, u_bar = policy_stats(dist, cfg, model, power_set, params)
    if u_bar <= 0.0:  # unreachable: u >= A+1 >= 1 and mass sums to one
        raise ConvergenceError("degenerate mean placement distance")
    lambda_next = (cfg.xi_relay + g_bar + cfg.xi_out * q_bar) / u_bar
    return lambda_next, dist


def policy_eval_bruteforce(lambda_k, cfg: ExploreConfig, model: FiniteShadowing,
                           power_set: PowerSet, params: ChannelParams,
                           max_states=10**6):
    """Exact evaluation by enumerating all |W|^B shadowing vectors.

    Oracle for policy_eval_reduced; refuses when |W|^B exceeds the guard.
    """
    if not isinstance(model, FiniteShadowing):
        raise ConfigError("policy evaluation needs a finite shadowing alphabet")
    w, p = model.as_arrays()
    n = len(w)
    B = cfg.b_window
    if n**B > max_states:
        raise StateSpaceTooLargeError(f"|W|^B = {n**B} exceeds guard {max_states}")
    us = cfg.u_values
    levels = power_set.as_array()
    q = outage_probability(us[:, None, None], levels[None, :, None],
                           w[None, None, :], params)  # (B, M, |W|)
    combos = np.array(list(itertools.product(range(n), repeat=B)))  # (N, B)
    qvec = q[np.arange(B)[None, :, None], np.arange(len(levels))[None, None, :],
             combos[:, :, None]]  # (N, B, M)
    scores = (levels[None, None, :] + cfg.xi_out * qvec
              - lambda_k * us[None, :, None])
    flat = scores.reshape(len(combos), -1)
    choice = flat.argmin(axis=1)  # row-major: min-u then min-gamma tie-break
    ui, gi = choice // len(levels), choice % len(levels)
    g_w = np.prod(p[combos], axis=1)
    rows = np.arange(len(combos))
    hop = levels[gi] + cfg.xi_out * qvec[rows, ui, gi]
    num = cfg.xi_relay + float((g_w * hop).sum())
    den = float((g_w * us[ui]).sum())
    return num / den


@dataclass(frozen=True)
class PolicyIterationResult:
    lambda_star: float
    policy: IndexPolicy
    iterations: int
    distribution: ActionDistribution


def policy_iteration(cfg: ExploreConfig, model: FiniteShadowing, power_set: PowerSet,
                     params: ChannelParams, lambda0=None, max_iters=200,
                     rel_tol=1e-12, abs_tol=1e-9) -> PolicyIterationResult:
    """Iterate policy evaluation/improvement until lambda stops moving.

    For finite alphabets the iteration reaches an exact fixed point in a
    handful of rounds; abs_tol also stops near-stationary tails on large
    discretized alphabets.
    """
    if lambda0 is None:
        lambda0 = (power_set.levels[0] + cfg.xi_relay) / (cfg.a_skip + cfg.b_window)
    if lambda0 < 0:
        raise ConfigError("lambda0 must be nonnegative")
    lam = float(lambda0)
    for it in range(1, max_iters + 1):
        lam_next, dist = policy_eval_reduced(lam, cfg, model, power_set, params)
        if lam_next == lam or abs(lam_next - lam) <= max(rel_tol * abs(lam_next), abs_tol):
            policy = IndexPolicy(lam=lam_next, xi_out=cfg.xi_out, xi_relay=cfg.xi_relay,
                                 a_skip=cfg.a_skip, b_window=cfg.b_window)
            return PolicyIterationResult(lambda_star=lam_next, policy=policy,
                                         iterations=it, distribution=dist)
        lam = lam_next
    raise ConvergenceError(f"policy iteration did not settle in {max_iters} rounds",
                           last_estimates=(lam, lam_next))


def heu_explorelim_stats(cfg: ExploreConfig, model: FiniteShadowing,
                         power_set: PowerSet, params: ChannelParams):
    """Exact renewal metrics of the per-step-cost ratio heuristic.

    Returns (cost_per_step, mean_power_per_link, mean_outage_per_link,
    mean_distance). The heuristic minimizes E[C/U] rather than E[C]/E[U],
    so its cost per step is at least the optimal lambda.
    """
    h, _ = hop_tables(cfg, model, power_set, params)
    score = (h + cfg.xi_relay) / cfg.u_values[:, None]
    dist, _, _ = _distribution(score, cfg, model, power_set, params)
    g_bar, q_bar, u_bar = policy_stats(dist, cfg, model, power_set, params)
    cost = (cfg.xi_relay + g_bar + cfg.xi_out * q_bar) / u_bar
    return cost, g_bar, q_bar, u_bar


def optimality_residual(lam, cfg: ExploreConfig, model: FiniteShadowing,
                        power_set: PowerSet, params: ChannelParams):
    """f(lambda) = E_W min over (u, gamma) of the index score.

    Zero exactly at the optimal average cost per step; strictly
    decreasing in lambda with slope between -(A+B) and -(A+1).
    """
    h, _ = hop_tables(cfg, model, power_set, params)
    score = h - lam * cfg.u_values[:, None]
    _, p = model.as_arrays()
    b_uw = _partition_probabilities(score, p)
    return float((b_uw * score).sum()) + cfg.xi_relay
