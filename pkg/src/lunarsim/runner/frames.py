"""WebSocket frame schema (pydantic models are the wire contract).

Every frame is `{type, seq, time_s, payload}`; `seq` is a per-session
monotone counter, `time_s` simulated time. Payload fields by type:

    state    pose {x,y,z,heading}, wheel_steer[4], wheel_speeds[6],
             targets {name: [x,y]}, camera_png_b64 (optional, ~2 Hz),
             terrain (optional, first frame: dims/cell/heights decimated)
    chat     role, text
    skill    command, status
    task     text (operator -> server; echoed back acknowledged)
    control  action: pause|resume (operator -> server)
    error    code, detail
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

FrameType = Literal["state", "chat", "skill", "task", "control", "error"]


class Pose(BaseModel):
    x: float
    y: float
    z: float
    heading: float


class TerrainSummary(BaseModel):
    cell_size: float
    origin: list[float]
    shape: list[int]
    heights: list[float]  # row-major, decimated grid
    stride: int           # decimation factor relative to the full grid


class StatePayload(BaseModel):
    pose: Pose
    wheel_steer: list[float]
    wheel_speeds: list[float]
    body_velocity: float
    targets: dict[str, list[float]]
    camera_png_b64: Optional[str] = None
    terrain: Optional[TerrainSummary] = None
    paused: bool = False


class ChatPayload(BaseModel):
    role: str
    text: str


class SkillPayload(BaseModel):
    command: str
    status: str


class TaskPayload(BaseModel):
    text: str


class ControlPayload(BaseModel):
    action: Literal["pause", "resume"]


class ErrorPayload(BaseModel):
    code: str
    detail: str


class Frame(BaseModel):
    type: FrameType
    seq: int = Field(ge=0)
    time_s: float
    payload: dict

    def encoded(self) -> str:
        return self.model_dump_json()


class ClientMessage(BaseModel):
    """Messages the operator sends over the socket."""
    type: Literal["task", "control"]
    payload: dict
