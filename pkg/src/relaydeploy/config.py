"""Channel/deployment config documents (TOML or JSON).

Canonical keys::

    eta, c_db, r0_m, p_rcv_min_dbm, delta_m, power_levels_dbm,
    shadowing.sigma_db | shadowing.finite = {values, probs}

plus an optional [deployment] block (a_skip, b_window, xi_out, xi_relay).
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

from .channel import (ChannelParams, FiniteShadowing, LogNormalShadowing,
                      PowerSet, dbm_to_mw, mw_to_dbm)
from .errors import ConfigError
from .explore import ExploreConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["load_config_file", "channel_from_dict", "channel_to_dict",
           "deployment_from_dict"]


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            return json.loads(raw)
        if suffix == ".toml":
            return tomllib.loads(raw.decode())
        # no recognizable suffix (pipes, fifos): sniff, JSON first
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            return tomllib.loads(raw.decode())
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _get(doc, key, kind, path):
    if key not in doc:
        raise ConfigError(f"{path}.{key}: missing")
    val = doc[key]
    try:
        return kind(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.{key}: {exc}") from exc


def channel_from_dict(doc, path="channel"):
    """Build (ChannelParams, PowerSet, ShadowingModel) from a config block."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: must be a table/object")
    try:
        params = ChannelParams(
            eta=_get(doc, "eta", float, path),
            c=10.0 ** (_get(doc, "c_db", float, path) / 10.0),
            r0_m=float(doc.get("r0_m", 1.0)),
            p_rcv_min_mw=dbm_to_mw(_get(doc, "p_rcv_min_dbm", float, path)),
            delta_m=_get(doc, "delta_m", float, path),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    levels = doc.get("power_levels_dbm")
    if not isinstance(levels, (list, tuple)) or not levels:
        raise ConfigError(f"{path}.power_levels_dbm: need a nonempty list")
    power_set = PowerSet.from_dbm([float(x) for x in levels])

    shadow = doc.get("shadowing")
    if not isinstance(shadow, dict):
        raise ConfigError(f"{path}.shadowing: need a table with sigma_db or finite")
    if "sigma_db" in shadow:
        model = LogNormalShadowing(sigma_db=float(shadow["sigma_db"]))
    elif "finite" in shadow:
        fin = shadow["finite"]
        model = FiniteShadowing(values=tuple(float(v) for v in fin.get("values", ())),
                                probs=tuple(float(p) for p in fin.get("probs", ())))
    else:
        raise ConfigError(f"{path}.shadowing: need sigma_db or finite")
    return params, power_set, model


def channel_to_dict(params: ChannelParams, power_set: PowerSet, model):
    doc = {
        "eta": params.eta,
        "c_db": mw_to_dbm(params.c),
        "r0_m": params.r0_m,
        "p_rcv_min_dbm": mw_to_dbm(params.p_rcv_min_mw),
        "delta_m": params.delta_m,
        "power_levels_dbm": [mw_to_dbm(p) for p in power_set.levels],
    }
    if isinstance(model, LogNormalShadowing):
        doc["shadowing"] = {"sigma_db": model.sigma_db}
    else:
        doc["shadowing"] = {"finite": {"values": list(model.values),
                                       "probs": list(model.probs)}}
    return doc


def deployment_from_dict(doc, xi_out=None, xi_relay=None, path="deployment"):
    """ExploreConfig from a config block, with optional multiplier overrides."""
    doc = doc or {}
    try:
        return ExploreConfig(
            a_skip=int(doc.get("a_skip", 0)),
            b_window=int(doc.get("b_window", 5)),
            xi_out=float(xi_out if xi_out is not None else doc.get("xi_out", 0.0)),
            xi_relay=float(xi_relay if xi_relay is not None else doc.get("xi_relay", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
