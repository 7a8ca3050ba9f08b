"""Placement decisions returned by all deployment policies."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Place:
    """Place the next relay ``u_steps`` after the previous node at ``gamma_mw``.

    ``u_steps`` may name an already-visited location (the agent walks back).
    """

    u_steps: int
    gamma_mw: float


class Continue:
    """Keep walking; no relay at the current location."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Continue"


CONTINUE = Continue()
