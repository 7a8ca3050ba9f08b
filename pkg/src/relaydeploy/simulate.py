"""Monte-Carlo deployment engine and metric summaries.

Shadowing is drawn i.i.d. per link per placement round from a counter-based
generator (Philox) keyed by the 64-bit seed, so every trace is reproducible
from its seed. Per-step quantities are ratios of sums (renewal-reward
convention), never means of per-link ratios.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .actions import Place
from .channel import (ChannelParams, PowerSet, mw_to_dbm, outage_probability,
                      sample_shadowing)
from .errors import ConfigError
from .explore import ExploreConfig
from .learning import LearnProtocol

__all__ = [
    "DeploymentTrace",
    "MetricsSummary",
    "LearningCurves",
    "run_deployment",
    "summarize",
    "trace_to_csv",
    "trace_from_csv_rows",
    "convergence_curve",
    "TRACE_CSV_HEADER",
]

TRACE_CSV_HEADER = "k,u_steps,gamma_dbm,q_out,lambda_hat,xi_out_hat,xi_relay_hat"


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator for reproducible streams (64-bit key)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)))


@dataclass
class DeploymentTrace:
    """Per-relay records of one deployment run.

    Learner snapshot columns hold NaN for model-based policies.
    """

    u_steps: np.ndarray
    gamma_mw: np.ndarray
    q_out: np.ndarray
    lambda_hat: np.ndarray
    xi_out_hat: np.ndarray
    xi_relay_hat: np.ndarray
    measurements: np.ndarray
    seed: int | None = None
    mode: str = "window"

    @property
    def n_links(self):
        return len(self.u_steps)

    @classmethod
    def empty(cls, seed=None, mode="window"):
        z = np.zeros(0)
        return cls(u_steps=np.zeros(0, dtype=int), gamma_mw=z.copy(), q_out=z.copy(),
                   lambda_hat=z.copy(), xi_out_hat=z.copy(), xi_relay_hat=z.copy(),
                   measurements=np.zeros(0, dtype=int), seed=seed, mode=mode)


def _measure(r_steps, levels, w, params):
    return {float(g): float(outage_probability(r_steps, g, w, params))
            for g in levels}


def run_deployment(handle, n_relays, seed, cfg: ExploreConfig,
                   model, power_set: PowerSet, params: ChannelParams) -> DeploymentTrace:
    """Drive a policy handle along the line for ``n_relays`` placements.

    Sequential handles see locations A+1..A+B one at a time (placement is
    forced at A+B by the handles themselves); window handles get the full
    measured outage matrix. One measurement is charged per visited
    location in sequential mode and B per round in window mode.
    """
    if n_relays < 1:
        raise ValueError("n_relays must be >= 1")
    rng = make_rng(seed)
    A, B = cfg.a_skip, cfg.b_window
    us = cfg.u_values
    levels = power_set.as_array()
    n = n_relays
    out = DeploymentTrace(
        u_steps=np.empty(n, dtype=int), gamma_mw=np.empty(n), q_out=np.empty(n),
        lambda_hat=np.full(n, np.nan), xi_out_hat=np.full(n, np.nan),
        xi_relay_hat=np.full(n, np.nan), measurements=np.empty(n, dtype=int),
        seed=seed, mode=handle.mode)
    is_learner = hasattr(handle, "commit")

    for k in range(n):
        w = np.atleast_1d(sample_shadowing(model, rng, size=B))
        if handle.mode == "window":
            matrix = outage_probability(us[:, None], levels[None, :], w[:, None], params)
            u, gamma = handle.decide(matrix)
            q = float(matrix[u - A - 1, int(np.argmin(np.abs(levels - gamma)))])
            measured = B
        else:
            round_readings = {}
            measured = 0
            placed = None
            for r in range(A + 1, A + B + 1):
                readings = _measure(r, handle.measure_levels, w[r - A - 1], params)
                round_readings[r] = readings
                measured += 1
                action = handle.decide(r, readings)
                if isinstance(action, Place):
                    placed = action
                    break
            u, gamma = placed.u_steps, placed.gamma_mw
            q = round_readings[u].get(gamma)
            if q is None:
                q = float(outage_probability(u, gamma, w[u - A - 1], params))
        out.u_steps[k] = u
        out.gamma_mw[k] = gamma
        out.q_out[k] = q
        out.measurements[k] = measured
        if is_learner:
            state = handle.commit(u, gamma, q)
            out.lambda_hat[k] = state.lambda_hat
            out.xi_out_hat[k] = state.xi_out_hat
            out.xi_relay_hat[k] = state.xi_relay_hat
    return out


@dataclass(frozen=True)
class MetricsSummary:
    """Renewal-reward metrics of one or more traces, with standard errors."""

    n_links: int
    mean_cost_per_step: float
    mean_power_per_link: float
    mean_outage_per_link: float
    mean_outage_per_step: float
    mean_distance_steps: float
    relays_per_step: float
    measurements_per_step: float
    se_cost_per_step: float
    se_power_per_link: float
    se_outage_per_link: float
    se_outage_per_step: float
    se_distance_steps: float

    def to_json_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _ratio_se(num_terms, den_terms):
    """Delta-method standard error of sum(num)/sum(den) over i.i.d. cycles."""
    k = len(num_terms)
    ratio = num_terms.sum() / den_terms.sum()
    resid = num_terms - ratio * den_terms
    return float(np.sqrt(np.mean(resid**2) / k) / np.mean(den_terms))


def summarize(traces, xi_out, xi_relay) -> MetricsSummary:
    """Pooled metrics over one trace or a list of traces."""
    if isinstance(traces, DeploymentTrace):
        traces = [traces]
    if not traces or sum(t.n_links for t in traces) == 0:
        raise ValueError("cannot summarize an empty trace")
    u = np.concatenate([t.u_steps for t in traces]).astype(float)
    g = np.concatenate([t.gamma_mw for t in traces])
    q = np.concatenate([t.q_out for t in traces])
    meas = np.concatenate([t.measurements for t in traces]).astype(float)
    k = len(u)
    cost_terms = g + xi_out * q + xi_relay
    sum_u = u.sum()
    return MetricsSummary(
        n_links=k,
        mean_cost_per_step=float(cost_terms.sum() / sum_u),
        mean_power_per_link=float(g.mean()),
        mean_outage_per_link=float(q.mean()),
        mean_outage_per_step=float(q.sum() / sum_u),
        mean_distance_steps=float(u.mean()),
        relays_per_step=float(k / sum_u),
        measurements_per_step=float(meas.sum() / sum_u),
        se_cost_per_step=_ratio_se(cost_terms, u),
        se_power_per_link=float(g.std(ddof=0) / np.sqrt(k)),
        se_outage_per_link=float(q.std(ddof=0) / np.sqrt(k)),
        se_outage_per_step=_ratio_se(q, u),
        se_distance_steps=float(u.std(ddof=0) / np.sqrt(k)),
    )


def _fmt(x):
    return format(float(x), ".10g")


def trace_to_csv(trace: DeploymentTrace) -> str:
    """Serialize a trace; learner columns are empty for model-based policies."""
    buf = io.StringIO()
    buf.write(TRACE_CSV_HEADER + "\n")
    for k in range(trace.n_links):
        lam = trace.lambda_hat[k]
        xio = trace.xi_out_hat[k]
        xir = trace.xi_relay_hat[k]
        buf.write(",".join([
            str(k + 1),
            str(int(trace.u_steps[k])),
            _fmt(mw_to_dbm(trace.gamma_mw[k])),
            _fmt(trace.q_out[k]),
            "" if np.isnan(lam) else _fmt(lam),
            "" if np.isnan(xio) else _fmt(xio),
            "" if np.isnan(xir) else _fmt(xir),
        ]) + "\n")
    return buf.getvalue()


def trace_from_csv_rows(text: str):
    """Parse trace CSV back into (u_steps, gamma_mw, q_out) arrays."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != TRACE_CSV_HEADER:
        raise ValueError("unrecognized trace CSV header")
    u, g, q = [], [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        u.append(int(parts[1]))
        g.append(10.0 ** (float(parts[2]) / 10.0))
        q.append(float(parts[3]))
    return np.array(u), np.array(g), np.array(q)


@dataclass
class LearningCurves:
    """Per-k ensemble averages of the learner iterates and cumulative metrics.

    Cumulative per-step ratios follow the E[sum]/E[sum] convention: pooled
    totals over all runs up to each k.
    """

    k: np.ndarray
    lambda_mean: np.ndarray
    lambda_se: np.ndarray
    xi_out_mean: np.ndarray
    xi_relay_mean: np.ndarray
    power_per_step: np.ndarray
    outage_per_step: np.ndarray
    distance_mean: np.ndarray
    n_runs: int
    # extreme iterate values seen anywhere in the ensemble (boundedness checks)
    lambda_range: tuple[float, float] = (np.nan, np.nan)
    xi_out_range: tuple[float, float] = (np.nan, np.nan)
    xi_relay_range: tuple[float, float] = (np.nan, np.nan)


def convergence_curve(kind, n_runs, n_relays, seed, cfg: ExploreConfig,
                      model, power_set: PowerSet, params: ChannelParams,
                      protocol: LearnProtocol) -> LearningCurves:
    """Vectorized ensemble of learner deployments.

    All runs advance in lockstep; per-round shadowing is an (n_runs, B)
    block from one Philox stream keyed by ``seed``, so the whole ensemble
    is reproducible from (seed, n_runs, n_relays).
    """
    if kind not in ("oel-learn", "oel-ratio", "oelal"):
        raise ConfigError(f"unknown learner kind {kind!r}")
    if n_runs < 1 or n_relays < 1:
        raise ValueError("n_runs and n_relays must be >= 1")
    if kind in ("oel-learn", "oelal") and protocol.schedule_a is None:
        raise ConfigError(f"{kind} needs schedule_a")
    if kind == "oelal":
        if protocol.schedule_b_out is None or protocol.schedule_b_relay is None:
            raise ConfigError("oelal needs both slow schedules")
        if protocol.box is None or protocol.q_bar is None or protocol.n_bar is None:
            raise ConfigError("oelal needs a projection box and targets")

    rng = make_rng(seed)
    R = n_runs
    A, B = cfg.a_skip, cfg.b_window
    us = cfg.u_values.astype(float)
    levels = power_set.as_array()
    M = len(levels)

    st = protocol.initial_state(cfg)
    lam = np.full(R, st.lambda_hat)
    xio = np.full(R, st.xi_out_hat)
    xir = np.full(R, st.xi_relay_hat)
    sum_c = np.zeros(R)
    sum_g = np.zeros(R)
    sum_q = np.zeros(R)
    sum_u = np.zeros(R)

    ks = np.arange(1, n_relays + 1)
    out = LearningCurves(
        k=ks, lambda_mean=np.empty(n_relays), lambda_se=np.empty(n_relays),
        xi_out_mean=np.empty(n_relays), xi_relay_mean=np.empty(n_relays),
        power_per_step=np.empty(n_relays), outage_per_step=np.empty(n_relays),
        distance_mean=np.empty(n_relays), n_runs=R)

    lam_lo = lam_hi = float(lam[0])
    xio_lo = xio_hi = float(xio[0])
    xir_lo = xir_hi = float(xir[0])
    rows = np.arange(R)
    for k in range(1, n_relays + 1):
        w = sample_shadowing(model, rng, size=(R, B))
        q = outage_probability(us[None, :, None], levels[None, None, :],
                               w[:, :, None], params)
        scores = (levels[None, None, :] + xio[:, None, None] * q
                  + xir[:, None, None] - lam[:, None, None] * us[None, :, None])
        flat = scores.reshape(R, B * M)
        choice = flat.argmin(axis=1)  # row-major: min-u then min-gamma ties
        ui, gi = choice // M, choice % M
        u_k = us[ui]
        g_k = levels[gi]
        q_k = q[rows, ui, gi]
        innovation = flat[rows, choice]

        if kind == "oel-learn":
            lam = lam + protocol.schedule_a.value(k) * innovation
        elif kind == "oel-ratio":
            sum_c += g_k + xio * q_k + xir
            lam = (sum_c) / (sum_u + u_k)
        else:
            a2, a3 = protocol.box
            lam = lam + protocol.schedule_a.value(k) * innovation
            xio = np.clip(xio + protocol.schedule_b_out.value(k)
                          * (q_k - protocol.q_bar * u_k), 0.0, a2)
            xir = np.clip(xir + protocol.schedule_b_relay.value(k)
                          * (1.0 - protocol.n_bar * u_k), 0.0, a3)
        sum_g += g_k
        sum_q += q_k
        sum_u += u_k

        lam_lo, lam_hi = min(lam_lo, float(lam.min())), max(lam_hi, float(lam.max()))
        xio_lo, xio_hi = min(xio_lo, float(xio.min())), max(xio_hi, float(xio.max()))
        xir_lo, xir_hi = min(xir_lo, float(xir.min())), max(xir_hi, float(xir.max()))

        i = k - 1
        out.lambda_mean[i] = lam.mean()
        out.lambda_se[i] = lam.std(ddof=0) / np.sqrt(R)
        out.xi_out_mean[i] = xio.mean()
        out.xi_relay_mean[i] = xir.mean()
        out.power_per_step[i] = sum_g.sum() / sum_u.sum()
        out.outage_per_step[i] = sum_q.sum() / sum_u.sum()
        out.distance_mean[i] = sum_u.sum() / (R * k)
    out.lambda_range = (lam_lo, lam_hi)
    out.xi_out_range = (xio_lo, xio_hi)
    out.xi_relay_range = (xir_lo, xir_hi)
    return out
