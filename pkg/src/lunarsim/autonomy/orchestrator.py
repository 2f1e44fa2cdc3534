"""Conversation lifecycle between operator, model, and skill executors.

Phases: Startup -> AwaitingTask -> Executing/AwaitingVlm -> ... -> Shutdown.
On "Startup!" and "Continuation!" the model only introduces itself; skill
results feed back verbatim as "Success"/"Fail" together with the fresh
camera image; Finish() clears history and awaits the next task.
"""

from __future__ import annotations

import enum
import json
import time as wall_time
from dataclasses import dataclass, field

from ..vehicle import image_to_png
from ..world import NavWorld
from .oracle import ScriptedOracle
from .prompt import build_system_prompt
from .protocol import (ProtocolError, SkillCommand, SkillKind, SkillResult,
                       Status, parse_skill_response)
from .skills import DRIVE_DURATION, drive_skill, rotate_skill
from .transport import ChatMessage


class Phase(enum.Enum):
    Startup = "Startup"
    AwaitingTask = "AwaitingTask"
    Executing = "Executing"
    AwaitingVlm = "AwaitingVlm"
    Finished = "Finished"
    Shutdown = "Shutdown"


class LifecycleError(Exception):
    pass


@dataclass
class TranscriptEntry:
    role: str
    text: str
    time_s: float
    phase: str
    has_image: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "role": self.role, "text": self.text, "time_s": self.time_s,
            "phase": self.phase, "has_image": self.has_image,
        }, sort_keys=True)


@dataclass
class ConversationState:
    phase: Phase = Phase.Startup
    transcript: list[TranscriptEntry] = field(default_factory=list)
    messages: list[ChatMessage] = field(default_factory=list)  # sent to the model
    active_task: str | None = None
    violations: int = 0

    def clear_history(self, keep_system: bool = True):
        """Continuation semantics: previous task context is dropped."""
        system = [m for m in self.messages if m.role == "system"]
        self.messages = system if keep_system else []
        self.active_task = None


@dataclass
class SkillEvent:
    time_s: float
    command: SkillCommand
    result: SkillResult


class Orchestrator:
    """One logical actor per session; skills run synchronously in its world."""

    def __init__(self, world: NavWorld, vlm, drive_policy,
                 drive_duration: float = DRIVE_DURATION,
                 max_skills_per_task: int = 60,
                 on_event=None):
        self.world = world
        self.vlm = vlm
        self.drive_policy = drive_policy
        self.drive_duration = drive_duration
        self.max_skills_per_task = max_skills_per_task
        self.conv = ConversationState()
        self.skill_events: list[SkillEvent] = []
        self.finishes = 0
        self.protocol_violations = 0
        self._on_event = on_event

    # --- helpers -----------------------------------------------------------
    def _emit(self, kind: str, payload: dict):
        if self._on_event is not None:
            self._on_event(kind, payload)

    def _record(self, role: str, text: str, image: bytes | None = None):
        self.conv.transcript.append(TranscriptEntry(
            role=role, text=text, time_s=self.world.state.time,
            phase=self.conv.phase.value, has_image=image is not None))
        self._emit("chat", {"role": role, "text": text,
                            "time_s": self.world.state.time})

    def _camera_png(self) -> bytes:
        return image_to_png(self.world.render())

    def _send_user(self, text: str, with_image: bool = True) -> str:
        image = self._camera_png() if with_image else None
        msg = ChatMessage(role="user", text=text, image_png=image)
        self.conv.messages.append(msg)
        self._record("user", text, image)
        reply = self.vlm.send(list(self.conv.messages))
        self.conv.messages.append(ChatMessage(role="assistant", text=reply))
        self._record("assistant", reply)
        return reply

    # --- lifecycle ------------------------------------------------------------
    def start(self) -> str:
        if self.conv.phase is not Phase.Startup:
            raise LifecycleError("start() is only valid in the Startup phase")
        system = build_system_prompt()
        self.conv.messages.append(ChatMessage(role="system", text=system))
        reply = self._send_user("Startup!")
        reply = self._require_no_skill(reply, "Startup!")
        self.conv.phase = Phase.AwaitingTask
        return reply

    def _require_no_skill(self, reply: str, probe: str) -> str:
        """Startup/Continuation replies must not pick a skill."""
        for _ in range(2):
            try:
                parse_skill_response(reply)
            except ProtocolError:
                return reply  # no parseable skill tag: correct behavior
            self.protocol_violations += 1
            self._emit("error", {"kind": "protocol",
                                 "detail": f"skill tag in {probe} reply"})
            reply = self._send_user(
                f"{probe} Reminder: do not pick a skill now, only introduce "
                "yourself and await instructions.", with_image=False)
        return reply

    def submit_task(self, text: str) -> dict:
        """Run one operator task to completion (or clarification/shutdown).

        Returns a summary {finished, shutdown, awaiting_clarification,
        skills: int}.
        """
        if self.conv.phase is Phase.Startup:
            self.start()
        if self.conv.phase is Phase.Finished:
            # next task begins a fresh conversation
            reply = self._send_user("Continuation!", with_image=False)
            self._require_no_skill(reply, "Continuation!")
            self.conv.clear_history()
            self.conv.phase = Phase.AwaitingTask
        if self.conv.phase is not Phase.AwaitingTask:
            raise LifecycleError(f"cannot submit a task in phase "
                                 f"{self.conv.phase.value}")
        self.conv.active_task = text
        self._emit("task", {"text": text})
        self.conv.phase = Phase.AwaitingVlm
        reply = self._send_user(text)
        return self._pump(reply)

    def answer_more_information(self, text: str) -> dict:
        if self.conv.phase is not Phase.AwaitingTask or self.conv.active_task is None:
            raise LifecycleError("no clarification is pending")
        self.conv.phase = Phase.AwaitingVlm
        reply = self._send_user(text)
        return self._pump(reply)

    # --- skill loop -------------------------------------------------------------
    def _pump(self, reply: str) -> dict:
        skills_run = 0
        retried = False
        while True:
            try:
                command = parse_skill_response(reply)
            except ProtocolError as exc:
                self.protocol_violations += 1
                self._emit("error", {"kind": "protocol", "detail": str(exc)})
                if retried:
                    # after two malformed replies the step is recorded as a
                    # violation and the model is asked again with the error
                    self._record("system", f"protocol violation: {exc}")
                retried = True
                reply = self._send_user(
                    f"Your previous reply could not be parsed ({exc}). Answer "
                    "again choosing exactly one skill in <skill></skill> tags.",
                    with_image=False)
                continue
            retried = False

            if command.kind is SkillKind.Finish:
                self.finishes += 1
                self.skill_events.append(SkillEvent(
                    self.world.state.time, command,
                    SkillResult(Status.Success, "task finished")))
                self._emit("skill", {"command": command.render(),
                                     "status": "Success",
                                     "time_s": self.world.state.time})
                self.conv.phase = Phase.Finished
                return {"finished": True, "shutdown": False,
                        "awaiting_clarification": False, "skills": skills_run}
            if command.kind is SkillKind.Shutdown:
                self.skill_events.append(SkillEvent(
                    self.world.state.time, command,
                    SkillResult(Status.Success, "session closed")))
                self._emit("skill", {"command": command.render(),
                                     "status": "Success",
                                     "time_s": self.world.state.time})
                self.conv.phase = Phase.Shutdown
                return {"finished": False, "shutdown": True,
                        "awaiting_clarification": False, "skills": skills_run}
            if command.kind is SkillKind.MoreInformation:
                self.conv.phase = Phase.AwaitingTask
                self._emit("skill", {"command": command.render(),
                                     "status": "Success",
                                     "time_s": self.world.state.time})
                return {"finished": False, "shutdown": False,
                        "awaiting_clarification": True, "skills": skills_run}

            if skills_run >= self.max_skills_per_task:
                raise LifecycleError("skill budget exhausted for this task")

            self.conv.phase = Phase.Executing
            result = self._execute(command)
            skills_run += 1
            self.skill_events.append(SkillEvent(self.world.state.time, command,
                                                result))
            self._emit("skill", {"command": command.render(),
                                 "status": result.status.value,
                                 "time_s": self.world.state.time})
            self.conv.phase = Phase.AwaitingVlm
            # feedback is exactly "Success" or "Fail" plus the fresh image
            reply = self._send_user(result.feedback)

    def _execute(self, command: SkillCommand) -> SkillResult:
        if self.conv.phase is not Phase.Executing:
            raise LifecycleError(f"skill dispatch in phase {self.conv.phase.value}")
        if command.kind is SkillKind.Drive:
            return drive_skill(command.target, self.drive_duration,
                               self.drive_policy, self.world)
        if command.kind is SkillKind.Rotate:
            return rotate_skill(command.target, self.world)
        raise LifecycleError(f"{command.kind.value} is not an executable skill")


def make_scripted_orchestrator(world: NavWorld, drive_policy=None,
                               **kwargs) -> Orchestrator:
    from ..learn.policy import GreedyDrivePolicy
    return Orchestrator(world, ScriptedOracle(world),
                        drive_policy or GreedyDrivePolicy(), **kwargs)
