"""Request/response schemas of the control endpoint."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class InjectRequest(BaseModel):
    sid: str = Field(description="target simulator id")
    time: int = Field(ge=0, description="requested activation tick")


class InjectResponse(BaseModel):
    sid: str
    requested_time: int
    scheduled_tick: int


class StatusResponse(BaseModel):
    state: str
    current_tick: int
    until: Optional[int] = None
    rt_factor: Optional[float] = None
    seq: int = 0
    error: Optional[str] = None
