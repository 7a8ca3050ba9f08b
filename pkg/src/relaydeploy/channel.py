"""Radio link model: path loss, Rayleigh-fading outage, and shadowing.

All power arithmetic is in linear mW; dBm appears only at I/O boundaries.
Link lengths are expressed in integer steps of ``delta_m`` meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ConfigError

__all__ = [
    "ChannelParams",
    "PowerSet",
    "FiniteShadowing",
    "LogNormalShadowing",
    "dbm_to_mw",
    "mw_to_dbm",
    "outage_probability",
    "sample_shadowing",
    "discretize_lognormal",
]


def dbm_to_mw(x_dbm):
    """Convert dBm to linear mW: mW = 10^(dBm/10)."""
    return 10.0 ** (np.asarray(x_dbm, dtype=float) / 10.0) if np.ndim(x_dbm) else 10.0 ** (x_dbm / 10.0)


def mw_to_dbm(x_mw):
    """Convert linear mW to dBm. Raises on non-positive input."""
    arr = np.asarray(x_mw, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError(f"power must be positive to express in dBm, got {x_mw}")
    out = 10.0 * np.log10(arr)
    return out if np.ndim(x_mw) else float(out)


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants of the link model.

    eta: path-loss exponent; c: linear path-loss factor at the reference
    distance r0_m; p_rcv_min_mw: received-power outage threshold;
    delta_m: length of one deployment step in meters.
    """

    eta: float
    c: float
    r0_m: float = 1.0
    p_rcv_min_mw: float = 10.0 ** -9.7
    delta_m: float = 20.0

    def __post_init__(self):
        for name in ("eta", "c", "r0_m", "p_rcv_min_mw", "delta_m"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class PowerSet:
    """Discrete transmit power levels, ascending, in mW."""

    levels: tuple[float, ...]

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("power set must be nonempty")
        if any(p <= 0.0 for p in self.levels):
            raise ConfigError("power levels must be positive")
        if list(self.levels) != sorted(self.levels):
            raise ConfigError("power levels must be sorted ascending")

    @classmethod
    def from_dbm(cls, levels_dbm):
        return cls(tuple(10.0 ** (x / 10.0) for x in levels_dbm))

    @property
    def m(self):
        return len(self.levels)

    def as_array(self):
        return np.asarray(self.levels, dtype=float)

    def nearest(self, power_mw):
        """Closest available level in the linear (mW) domain."""
        arr = self.as_array()
        return float(arr[np.argmin(np.abs(arr - power_mw))])


@dataclass(frozen=True)
class FiniteShadowing:
    """Shadowing on a finite alphabet: values w_i > 0 with probabilities p_i."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ConfigError("values and probs must be nonempty and same length")
        if any(w <= 0.0 for w in self.values):
            raise ConfigError("shadowing values must be positive")
        if any(p < 0.0 for p in self.probs):
            raise ConfigError("shadowing probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ConfigError(f"shadowing probabilities sum to {sum(self.probs)}, not 1")

    def as_arrays(self):
        return (np.asarray(self.values, dtype=float),
                np.asarray(self.probs, dtype=float))


@dataclass(frozen=True)
class LogNormalShadowing:
    """W = 10^(Y/10) with Y ~ Normal(0, sigma_db^2)."""

    sigma_db: float

    def __post_init__(self):
        if not self.sigma_db > 0.0:
            raise ConfigError(f"sigma_db must be > 0, got {self.sigma_db}")


ShadowingModel = FiniteShadowing | LogNormalShadowing


def outage_probability(r_steps, gamma_mw, w, params: ChannelParams):
    """Outage probability of a link under Rayleigh fading.

    For a link of ``r_steps`` steps (physical length r_steps*delta_m),
    transmit power ``gamma_mw`` and shadowing realization ``w``:

        Q = 1 - exp(-p_rcv_min * (r/r0)^eta / (gamma * c * w))

    Accepts broadcastable arrays; strictly increasing in r_steps and
    strictly decreasing in gamma_mw and w.
    """
    r_steps = np.asarray(r_steps)
    gamma_mw = np.asarray(gamma_mw)
    w = np.asarray(w)
    if np.any(r_steps < 1):
        raise ValueError("r_steps must be >= 1")
    if np.any(gamma_mw <= 0.0) or np.any(w <= 0.0):
        raise ValueError("gamma_mw and w must be positive")
    r = r_steps * params.delta_m
    expo = params.p_rcv_min_mw * (r / params.r0_m) ** params.eta / (gamma_mw * params.c * w)
    out = -np.expm1(-expo)
    return float(out) if out.ndim == 0 else out


def sample_shadowing(model: ShadowingModel, rng: np.random.Generator, size=None):
    """Draw i.i.d. shadowing values from ``model`` using ``rng``."""
    if isinstance(model, LogNormalShadowing):
        y = rng.normal(0.0, model.sigma_db, size=size)
        return 10.0 ** (y / 10.0)
    values, probs = model.as_arrays()
    idx = rng.choice(len(values), size=size, p=probs)
    return values[idx]


def discretize_lognormal(sigma_db, n_points) -> FiniteShadowing:
    """Quantize log-normal shadowing onto ``n_points`` equal-mass atoms.

    Atoms are the conditional means of n equal-probability quantile bins
    in the dB domain, rescaled so the discrete dB-domain standard
    deviation equals sigma_db exactly (plain bin representatives
    understate the spread of the tails).
    """
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    if not sigma_db > 0.0:
        raise ConfigError(f"sigma_db must be > 0, got {sigma_db}")
    edges = norm.ppf(np.arange(1, n_points) / n_points)
    lo = np.concatenate([[-np.inf], edges])
    hi = np.concatenate([edges, [np.inf]])
    centroids = (norm.pdf(lo) - norm.pdf(hi)) * n_points  # E[Z | bin], mass 1/n each
    centroids /= math.sqrt(float(np.mean(centroids**2)))
    y_db = sigma_db * centroids
    return FiniteShadowing(
        values=tuple(10.0 ** (y / 10.0) for y in y_db),
        probs=(1.0 / n_points,) * n_points,
    )


def as_finite(model: ShadowingModel, n_points=31) -> FiniteShadowing:
    """Return the model itself if finite, else its quantized version."""
    if isinstance(model, FiniteShadowing):
        return model
    return discretize_lognormal(model.sigma_db, n_points)
