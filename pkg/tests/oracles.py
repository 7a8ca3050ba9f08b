"""Independent brute-force oracles the solver tests are checked against.

Nothing here shares code paths with the package solvers: policy values are
obtained by exhaustive policy enumeration with exact linear-system or
ratio evaluation, and outage by Monte-Carlo fading draws.
"""
from __future__ import annotations

import itertools

import numpy as np

from relaydeploy.channel import outage_probability


def mc_outage(r_steps, gamma_mw, w, params, n_draws, rng):
    """Empirical outage from exponential (Rayleigh power) fading draws."""
    h = rng.exponential(1.0, size=n_draws)
    rcv = gamma_mw * params.c * (r_steps * params.delta_m / params.r0_m) ** -params.eta * h * w
    return float(np.mean(rcv <= params.p_rcv_min_mw))


def hop_cost_table(cfg, model, power_set, params, xi_out):
    """h[i, j] and argmin power per (location, atom) by explicit scan."""
    w, _ = model.as_arrays()
    rs = list(range(cfg.a_skip + 1, cfg.a_skip + cfg.b_window + 1))
    h = np.empty((len(rs), len(w)))
    g = np.empty((len(rs), len(w)))
    for i, r in enumerate(rs):
        for j, wv in enumerate(w):
            best = None
            for gamma in power_set.levels:
                c = gamma + xi_out * outage_probability(r, gamma, wv, params)
                if best is None or c < best[0]:
                    best = (c, gamma)
            h[i, j], g[i, j] = best
    return h, g


def enumerate_asyougo(cfg, model, power_set, params):
    """Exact pure as-you-go optimum by enumerating every threshold-free policy.

    A stationary deterministic policy assigns place/continue to each
    (r, w) with r < A+B (power is always the hop-cost argmin). Each policy
    is a linear system in the state values; the optimum is the elementwise
    minimum over policies. Returns (V dict over r, V0, J table, w values).
    """
    theta = cfg.theta
    A, B = cfg.a_skip, cfg.b_window
    w, p = model.as_arrays()
    nw = len(w)
    h, _ = hop_cost_table(cfg, model, power_set, params, cfg.xi_out)
    m = [None] + [
        sum(p[j] * min(gamma + cfg.xi_out * outage_probability(k, gamma, w[j], params)
                       for gamma in power_set.levels) for j in range(nw))
        for k in range(1, A + B + 1)
    ]
    head = sum((1 - theta) ** (k - 1) * theta * m[k] for k in range(1, A + 2))

    free_states = [(i, j) for i in range(B - 1) for j in range(nw)]
    n_states = B * nw + 1  # J(r, w) for all window states plus J(0)

    def idx(i, j):
        return i * nw + j

    zero = B * nw
    best = None
    for decisions in itertools.product([0, 1], repeat=len(free_states)):
        place = dict(zip(free_states, decisions))
        mat = np.zeros((n_states, n_states))
        rhs = np.zeros(n_states)
        for i in range(B):
            r = A + 1 + i
            for j in range(nw):
                row = idx(i, j)
                mat[row, row] = 1.0
                if i == B - 1 or place[(i, j)]:
                    rhs[row] = h[i, j] + cfg.xi_relay
                    mat[row, zero] -= 1.0
                else:
                    rhs[row] = theta * m[r + 1]
                    for j2 in range(nw):
                        mat[row, idx(i + 1, j2)] -= (1 - theta) * p[j2]
        mat[zero, zero] = 1.0
        rhs[zero] = head
        for j2 in range(nw):
            mat[zero, idx(0, j2)] -= (1 - theta) ** (A + 1) * p[j2]
        sol = np.linalg.solve(mat, rhs)
        best = sol if best is None else np.minimum(best, sol)
    j_table = best[:B * nw].reshape(B, nw)
    v = {A + 1 + i: float((p * j_table[i]).sum()) for i in range(B)}
    return v, float(best[zero]), j_table, w


def enumerate_smdp(cfg, model, power_set, params):
    """Exact explore-forward optimum over all stationary deterministic policies.

    Evaluates the renewal-reward ratio of every map from W^B states to
    (u, gamma) actions and returns the minimum (and its per-state actions).
    """
    w, p = model.as_arrays()
    nw = len(w)
    B = cfg.b_window
    us = list(range(cfg.a_skip + 1, cfg.a_skip + B + 1))
    levels = list(power_set.levels)
    states = list(itertools.product(range(nw), repeat=B))
    g = [float(np.prod([p[j] for j in s])) for s in states]
    actions = [(ui, gi) for ui in range(B) for gi in range(len(levels))]
    hop = {}
    for s_i, s in enumerate(states):
        for ui, gi in actions:
            q = outage_probability(us[ui], levels[gi], w[s[ui]], params)
            hop[(s_i, ui, gi)] = levels[gi] + cfg.xi_out * q
    best = None
    best_actions = None
    for assignment in itertools.product(actions, repeat=len(states)):
        num = cfg.xi_relay
        den = 0.0
        for s_i, (ui, gi) in enumerate(assignment):
            num += g[s_i] * hop[(s_i, ui, gi)]
            den += g[s_i] * us[ui]
        lam = num / den
        if best is None or lam < best:
            best, best_actions = lam, assignment
    return best, best_actions


def exhaustive_index_argmin(matrix, us, levels, lam, xi_out, xi_relay):
    """Plain double loop argmin of the index score with min-u/min-gamma ties."""
    best = None
    for i, u in enumerate(us):
        for g, gamma in enumerate(levels):
            score = gamma + xi_out * matrix[i][g] + xi_relay - lam * u
            if best is None or score < best[0] - 1e-15:
                best = (score, u, gamma)
    return best[1], best[2]


def exhaustive_ratio_argmin(matrix, us, levels, xi_out, xi_relay):
    best = None
    for i, u in enumerate(us):
        for g, gamma in enumerate(levels):
            score = (gamma + xi_out * matrix[i][g] + xi_relay) / u
            if best is None or score < best[0] - 1e-15:
                best = (score, u, gamma)
    return best[1], best[2]
