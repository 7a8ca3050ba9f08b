"""Request/response models for the deployment-assistant API."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ShadowingIn(BaseModel):
    sigma_db: Optional[float] = None
    finite: Optional[dict] = None  # {"values": [...], "probs": [...]}


class ChannelIn(BaseModel):
    eta: float
    c_db: float
    r0_m: float = 1.0
    p_rcv_min_dbm: float
    delta_m: float
    power_levels_dbm: list[float] = Field(min_length=1)
    shadowing: ShadowingIn


class DeploymentIn(BaseModel):
    a_skip: int = 0
    b_window: int = 5
    xi_out: float = 0.0
    xi_relay: float = 0.0


class ScheduleIn(BaseModel):
    scale: float
    exponent: float


class PolicyIn(BaseModel):
    kind: str
    n_shadowing: int = 31
    fixed_power_dbm: Optional[float] = None
    target_outage: Optional[float] = None
    lambda0: Optional[float] = None
    xi_out0: Optional[float] = None
    xi_relay0: Optional[float] = None
    schedule_a: Optional[ScheduleIn] = None
    schedule_b_out: Optional[ScheduleIn] = None
    schedule_b_relay: Optional[ScheduleIn] = None
    q_bar: Optional[float] = None
    n_bar: Optional[float] = None
    box: Optional[tuple[float, float]] = None


class SessionCreateIn(BaseModel):
    channel: ChannelIn
    deployment: DeploymentIn
    policy: PolicyIn


class MeasurementIn(BaseModel):
    location: int = Field(description="distance in steps from the previous node")
    readings: list[float] = Field(description="outage per power level, config order")
    expected_version: Optional[int] = None


class PlacementIn(BaseModel):
    u_steps: int
    gamma_dbm: float
    realized_outage: float = Field(ge=0.0, le=1.0)
    override: bool = False
    expected_version: Optional[int] = None


class RecommendationOut(BaseModel):
    action: Literal["continue", "place", "need_more"]
    u_steps: Optional[int] = None
    gamma_dbm: Optional[float] = None
    gamma_mw: Optional[float] = None
    locations_pending: Optional[list[int]] = None
    session_version: int


class LearnerSnapshotOut(BaseModel):
    lambda_hat: float
    xi_out_hat: float
    xi_relay_hat: float
    k: int
    sum_power: float
    sum_outage: float
    sum_distance: float


class PlacementOut(BaseModel):
    session_version: int
    placements: int
    learner: Optional[LearnerSnapshotOut] = None


class SessionBriefOut(BaseModel):
    id: str
    policy_kind: str
    mode: str
    placements: int
    version: int
    updated_at: str


class SessionListOut(BaseModel):
    sessions: list[SessionBriefOut]
