"""Pure as-you-go deployment: the placement MDP and its threshold policies.

The agent walks forward from the previous relay, measures the link back at
each location r in {A+1, ..., A+B}, and immediately decides place/continue.
The line ends with probability theta at every step; the average-cost design
is recovered by driving theta to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .actions import CONTINUE, Place
from .channel import ChannelParams, FiniteShadowing, PowerSet, outage_probability
from .errors import ConfigError, ConvergenceError

__all__ = [
    "AsYouGoConfig",
    "ValueTable",
    "ThresholdPolicy",
    "hop_cost_min",
    "measured_hop_cost_min",
    "expected_hop_cost",
    "value_iteration",
    "solve_geometric",
    "extract_thresholds",
    "optasyougo_decide",
    "average_cost_limit",
    "threshold_policy_stats",
    "average_cost_of_threshold_policy",
    "heu_asyougo_decide",
    "heu_asyougo_session",
]

DEFAULT_THETA_SCHEDULE = tuple(1e-2 * 2.0**-j for j in range(21))


@dataclass(frozen=True)
class AsYouGoConfig:
    """Window geometry, cost multipliers and line-end probability.

    theta may be left None when the config only parameterizes the
    theta -> 0 limit (see average_cost_limit).
    """

    a_skip: int
    b_window: int
    xi_out: float
    xi_relay: float
    theta: float | None = None

    def __post_init__(self):
        if self.a_skip < 0 or self.b_window < 1:
            raise ConfigError("need a_skip >= 0 and b_window >= 1")
        if self.xi_out < 0 or self.xi_relay < 0:
            raise ConfigError("cost multipliers must be nonnegative")
        if self.theta is not None and not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must be in (0,1), got {self.theta}")

    @property
    def window(self):
        """Measured locations A+1 .. A+B."""
        return range(self.a_skip + 1, self.a_skip + self.b_window + 1)


@dataclass(frozen=True)
class ValueTable:
    """Expected cost-to-go V(r) = E_W J(r, W) over the window, plus V(0)."""

    v: dict[int, float]
    v0: float

    def to_json_dict(self):
        return {"v": [{"r": r, "v": val} for r, val in sorted(self.v.items())],
                "v0": self.v0, "units": "mW"}

    @classmethod
    def from_json_dict(cls, doc):
        return cls(v={int(e["r"]): float(e["v"]) for e in doc["v"]},
                   v0=float(doc["v0"]))


@dataclass(frozen=True)
class ThresholdPolicy:
    """Place at r iff the measured best hop cost is <= c_th(r); forced at A+B."""

    a_skip: int
    b_window: int
    c_th: dict[int, float]
    xi_out: float

    def to_json_dict(self):
        return {"c_th": [{"r": r, "c_th": v} for r, v in sorted(self.c_th.items())],
                "a_skip": self.a_skip, "b_window": self.b_window,
                "xi_out": self.xi_out, "units": "mW"}

    @classmethod
    def from_json_dict(cls, doc):
        return cls(a_skip=doc["a_skip"], b_window=doc["b_window"],
                   c_th={int(e["r"]): float(e["c_th"]) for e in doc["c_th"]},
                   xi_out=float(doc["xi_out"]))


def hop_cost_min(r_steps, w, xi_out, power_set: PowerSet, params: ChannelParams):
    """min over gamma of gamma + xi_out*Q(r,gamma,w), ties to the smallest gamma.

    Returns (cost, gamma_star).
    """
    levels = power_set.as_array()
    costs = levels + xi_out * outage_probability(r_steps, levels, w, params)
    i = int(np.argmin(costs))  # first occurrence = smallest power on ties
    return float(costs[i]), float(levels[i])


def measured_hop_cost_min(readings, xi_out):
    """Same minimization but over measured outages {gamma_mw: q}."""
    if not readings:
        raise ValueError("empty measurement set")
    best = None
    for gamma in sorted(readings):
        cost = gamma + xi_out * readings[gamma]
        if best is None or cost < best[0]:
            best = (cost, gamma)
    return best


def _h_table(cfg, model: FiniteShadowing, power_set, params):
    """h[i, j] = min-gamma hop cost at r = A+1+i with shadowing atom j."""
    w, _ = model.as_arrays()
    rs = np.arange(cfg.a_skip + 1, cfg.a_skip + cfg.b_window + 1)
    levels = power_set.as_array()
    q = outage_probability(rs[:, None, None], levels[None, :, None], w[None, None, :], params)
    costs = levels[None, :, None] + cfg.xi_out * q
    return costs.min(axis=1)


def expected_hop_cost(r_steps, model: FiniteShadowing, power_set, params, xi_out):
    """m(r) = E_W min_gamma(gamma + xi_out Q(r, gamma, W))."""
    w, p = model.as_arrays()
    levels = power_set.as_array()
    q = outage_probability(r_steps, levels[:, None], w[None, :], params)
    return float((p * (levels[:, None] + xi_out * q).min(axis=0)).sum())


def _terminal_costs(cfg, model, power_set, params):
    """m(k) for k = 1 .. A+B (source may be placed before the window opens)."""
    return np.array([expected_hop_cost(k, model, power_set, params, cfg.xi_out)
                     for k in range(1, cfg.a_skip + cfg.b_window + 1)])


def _require_finite(model):
    if not isinstance(model, FiniteShadowing):
        raise ConfigError("solver needs a finite shadowing alphabet; "
                          "discretize log-normal shadowing first")


def value_iteration(cfg: AsYouGoConfig, model: FiniteShadowing, power_set: PowerSet,
                    params: ChannelParams, tol=1e-10, max_sweeps=10**6,
                    on_sweep=None) -> ValueTable:
    """Plain synchronous value iteration on the V-recursion, from V = 0.

    Iterates are monotone nondecreasing; terminates when the sup-norm
    change drops below ``tol``. ``on_sweep(v0, v)`` is invoked after each
    sweep when given.
    """
    _require_finite(model)
    if cfg.theta is None:
        raise ConfigError("value_iteration needs cfg.theta")
    if tol <= 0:
        raise ConfigError("tol must be positive")
    theta = cfg.theta
    A, B = cfg.a_skip, cfg.b_window
    w, p = model.as_arrays()
    h = _h_table(cfg, model, power_set, params)  # (B, |W|)
    m = _terminal_costs(cfg, model, power_set, params)  # m[k-1] = m(k)
    head = sum((1 - theta) ** (k - 1) * theta * m[k - 1] for k in range(1, A + 2))

    v = np.zeros(B)  # v[i] = V(A+1+i)
    v0 = 0.0
    last_change = None
    for _ in range(max_sweeps):
        new_v = np.empty(B)
        new_v[B - 1] = m[A + B - 1] + cfg.xi_relay + v0
        for i in range(B - 2, -1, -1):
            r = A + 1 + i
            cont = theta * m[r] + (1 - theta) * v[i + 1]  # m[r] is m(r+1)
            new_v[i] = float((p * np.minimum(h[i] + cfg.xi_relay + v0, cont)).sum())
        new_v0 = head + (1 - theta) ** (A + 1) * v[0]
        change = max(abs(new_v0 - v0), float(np.max(np.abs(new_v - v))))
        v, v0 = new_v, new_v0
        if on_sweep is not None:
            on_sweep(v0, v.copy())
        if change < tol:
            return ValueTable(v={A + 1 + i: float(v[i]) for i in range(B)}, v0=float(v0))
        last_change = change
    raise ConvergenceError(
        f"value iteration did not reach tol={tol} in {max_sweeps} sweeps",
        last_estimates=(last_change, change))


def solve_geometric(cfg: AsYouGoConfig, model: FiniteShadowing, power_set: PowerSet,
                    params: ChannelParams, max_rounds=10_000) -> ValueTable:
    """Exact solve of the V-recursion fixed point.

    Conditional on the place/continue decisions, every V(r) is affine in
    V(0); alternate between freezing the decisions and solving the scalar
    fixed point exactly. Finitely many decision masks, so this terminates
    regardless of how small theta is (plain value iteration needs on the
    order of 1/theta sweeps).
    """
    _require_finite(model)
    if cfg.theta is None:
        raise ConfigError("solve_geometric needs cfg.theta")
    theta = cfg.theta
    A, B = cfg.a_skip, cfg.b_window
    w, p = model.as_arrays()
    h = _h_table(cfg, model, power_set, params)
    m = _terminal_costs(cfg, model, power_set, params)
    head = sum((1 - theta) ** (k - 1) * theta * m[k - 1] for k in range(1, A + 2))

    x = 0.0  # current V(0)
    prev_key = None
    for _ in range(max_rounds):
        alpha = np.empty(B)
        beta = np.empty(B)
        alpha[B - 1] = m[A + B - 1] + cfg.xi_relay
        beta[B - 1] = 1.0
        masks = []
        for i in range(B - 2, -1, -1):
            r = A + 1 + i
            cont_a = theta * m[r] + (1 - theta) * alpha[i + 1]
            cont_b = (1 - theta) * beta[i + 1]
            mask = h[i] + cfg.xi_relay + x <= cont_a + cont_b * x
            masks.append(mask.tobytes())
            alpha[i] = float((p * np.where(mask, h[i] + cfg.xi_relay, cont_a)).sum())
            beta[i] = float((p * np.where(mask, 1.0, cont_b)).sum())
        scale = (1 - theta) ** (A + 1)
        x_new = (head + scale * alpha[0]) / (1.0 - scale * beta[0])
        key = tuple(masks)
        if prev_key == key and abs(x_new - x) <= 1e-13 * max(1.0, abs(x)):
            x = x_new
            break
        prev_key, x = key, x_new
    else:
        raise ConvergenceError("geometric-theta solve did not stabilize",
                               last_estimates=(x, x_new))
    v = alpha + beta * x
    return ValueTable(v={A + 1 + i: float(v[i]) for i in range(B)}, v0=float(x))


def extract_thresholds(vt: ValueTable, cfg: AsYouGoConfig, model: FiniteShadowing,
                       power_set: PowerSet, params: ChannelParams) -> ThresholdPolicy:
    """Thresholds from a converged value table:

    c_th(r) = theta*m(r+1) + (1-theta)*V(r+1) - (xi_relay + V(0)).
    """
    _require_finite(model)
    theta = cfg.theta
    c_th = {}
    for r in range(cfg.a_skip + 1, cfg.a_skip + cfg.b_window):
        m_next = expected_hop_cost(r + 1, model, power_set, params, cfg.xi_out)
        c_th[r] = theta * m_next + (1 - theta) * vt.v[r + 1] - (cfg.xi_relay + vt.v0)
    return ThresholdPolicy(a_skip=cfg.a_skip, b_window=cfg.b_window,
                           c_th=c_th, xi_out=cfg.xi_out)


def optasyougo_decide(r_steps, measured_outages, policy: ThresholdPolicy, xi_out):
    """Place iff the measured best hop cost is <= c_th(r); forced at A+B.

    measured_outages maps each available gamma_mw to its measured outage.
    Equality places (the rule is <=).
    """
    last = policy.a_skip + policy.b_window
    if not policy.a_skip + 1 <= r_steps <= last:
        raise ValueError(f"location {r_steps} outside window "
                         f"[{policy.a_skip + 1}, {last}]")
    cost, gamma = measured_hop_cost_min(measured_outages, xi_out)
    if r_steps == last or cost <= policy.c_th[r_steps]:
        return Place(u_steps=r_steps, gamma_mw=gamma)
    return CONTINUE


@dataclass(frozen=True)
class AygSolution:
    """theta -> 0 limit: average cost per step and the near-limit policy."""

    lambda_per_step: float
    policy: ThresholdPolicy
    theta: float
    value_table: ValueTable


def average_cost_limit(cfg: AsYouGoConfig, model: FiniteShadowing, power_set: PowerSet,
                       params: ChannelParams, theta_schedule=DEFAULT_THETA_SCHEDULE,
                       tol=1e-6) -> AygSolution:
    """Drive theta down the schedule until theta*V(0) stabilizes.

    Returns the estimate at the smallest theta reached together with the
    threshold policy extracted there.
    """
    _require_finite(model)
    thetas = list(theta_schedule)
    if not thetas or any(t2 >= t1 for t1, t2 in zip(thetas, thetas[1:])):
        raise ConfigError("theta schedule must be decreasing and positive")
    prev = None
    for theta in thetas:
        cfg_t = replace(cfg, theta=theta)
        vt = solve_geometric(cfg_t, model, power_set, params)
        lam = theta * vt.v0
        if prev is not None and abs(lam - prev) <= tol * max(abs(lam), 1e-300):
            return AygSolution(lambda_per_step=lam,
                               policy=extract_thresholds(vt, cfg_t, model, power_set, params),
                               theta=theta, value_table=vt)
        prev = lam
    raise ConvergenceError("theta schedule exhausted before theta*V(0) stabilized",
                           last_estimates=(prev, lam))


def threshold_policy_stats(policy: ThresholdPolicy, model: FiniteShadowing,
                           power_set: PowerSet, params: ChannelParams):
    """Exact renewal metrics of a threshold rule under i.i.d. finite shadowing.

    Returns (mean_power_per_link, mean_outage_per_link, mean_distance_steps,
    place_mass) where place_mass is the (B, |W|) matrix of probabilities
    that a cycle ends at location r with shadowing atom w. No line-end
    horizon enters: these are the theta -> 0 long-run averages.
    """
    _require_finite(model)
    A, B = policy.a_skip, policy.b_window
    w, p = model.as_arrays()
    levels = power_set.as_array()
    rs = np.arange(A + 1, A + B + 1)
    q = outage_probability(rs[:, None, None], levels[None, :, None],
                           w[None, None, :], params)
    costs = levels[None, :, None] + policy.xi_out * q
    gidx = costs.argmin(axis=1)
    h = np.take_along_axis(costs, gidx[:, None, :], axis=1)[:, 0, :]  # (B, |W|)

    place_mass = np.zeros((B, len(w)))
    reach = 1.0
    for i, r in enumerate(rs):
        if r < A + B:
            mask = h[i] <= policy.c_th[r]  # equality places
            place_mass[i] = reach * p * mask
            reach *= float((p * ~mask).sum())
        else:
            place_mass[i] = reach * p
    gamma_sel = levels[gidx]
    q_sel = np.take_along_axis(q, gidx[:, None, :], axis=1)[:, 0, :]
    g_bar = float((place_mass * gamma_sel).sum())
    q_bar = float((place_mass * q_sel).sum())
    u_bar = float((place_mass * rs[:, None]).sum())
    return g_bar, q_bar, u_bar, place_mass


def average_cost_of_threshold_policy(policy: ThresholdPolicy, model, power_set,
                                     params, xi_relay):
    """(power/link + xi_out*outage/link + xi_relay) / distance, exactly."""
    g_bar, q_bar, u_bar, _ = threshold_policy_stats(policy, model, power_set, params)
    return (g_bar + policy.xi_out * q_bar + xi_relay) / u_bar


def heu_asyougo_decide(r_steps, q_measured, fixed_power_mw, target_outage, cfg):
    """One step of the fixed-power heuristic.

    Walk while the measured outage meets the target; at the first
    violation place one step back (or at A+1 if the violation is there);
    place at A+B if every location met the target.
    """
    first = cfg.a_skip + 1
    last = cfg.a_skip + cfg.b_window
    if not first <= r_steps <= last:
        raise ValueError(f"location {r_steps} outside window [{first}, {last}]")
    if q_measured > target_outage:
        return Place(u_steps=first if r_steps == first else r_steps - 1,
                     gamma_mw=fixed_power_mw)
    if r_steps == last:
        return Place(u_steps=last, gamma_mw=fixed_power_mw)
    return CONTINUE


def heu_asyougo_session(fixed_power_mw, target_outage, cfg, link_outage_source,
                        n_relays=1):
    """Run the heuristic for ``n_relays`` placements.

    ``link_outage_source(r_steps)`` yields the measured outage at the
    fixed power for the current round's location r. Returns a list of
    (u_steps, q_out) per placed relay.
    """
    if not 0.0 < target_outage < 1.0:
        raise ConfigError("target_outage must be in (0,1)")
    placements = []
    for _ in range(n_relays):
        readings = {}
        for r in cfg.window:
            readings[r] = link_outage_source(r)
            action = heu_asyougo_decide(r, readings[r], fixed_power_mw, target_outage, cfg)
            if isinstance(action, Place):
                placements.append((action.u_steps, readings[action.u_steps]))
                break
    return placements
