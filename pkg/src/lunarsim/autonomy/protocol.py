"""Skill protocol objects and the <skill>...</skill> response parser."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class Target(enum.Enum):
    Astronaut = "Astronaut"
    Antenna = "Antenna"
    Rover = "Rover"
    Rock = "Rock"


class SkillKind(enum.Enum):
    Drive = "Drive"
    Rotate = "Rotate"
    Finish = "Finish"
    Shutdown = "Shutdown"
    MoreInformation = "MoreInformation"


TARGETED_SKILLS = (SkillKind.Drive, SkillKind.Rotate)


class ProtocolError(Exception):
    pass


class NoSkillTag(ProtocolError):
    def __init__(self):
        super().__init__("no <skill></skill> tag in response")


class UnknownSkill(ProtocolError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown skill {name!r}")


class BadArity(ProtocolError):
    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")


class UnknownTarget(ProtocolError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown target {name!r}")


@dataclass(frozen=True)
class SkillCommand:
    kind: SkillKind
    target: Target | None = None

    def __post_init__(self):
        if self.kind in TARGETED_SKILLS and self.target is None:
            raise BadArity(self.kind.value, "requires a target argument")
        if self.kind not in TARGETED_SKILLS and self.target is not None:
            raise BadArity(self.kind.value, "takes no target argument")

    def render(self) -> str:
        if self.target is not None:
            return f"{self.kind.value}({self.target.value})"
        return f"{self.kind.value}()"


class Status(enum.Enum):
    Success = "Success"
    Fail = "Fail"


@dataclass(frozen=True)
class SkillResult:
    status: Status
    detail: str = ""

    @property
    def feedback(self) -> str:
        """The exact string sent back to the model, nothing else."""
        return self.status.value


_TAG_RE = re.compile(r"<skill>(.*?)</skill>", re.DOTALL)
_CALL_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(\s*([^()]*?)\s*\))?\s*",
                      re.DOTALL)


def parse_skill_response(text: str) -> SkillCommand:
    """Parse the last <skill>...</skill> span into a command.

    Call syntax is `Name` or `Name(Target)`, whitespace tolerated. Target
    spellings are case-sensitive.
    """
    spans = _TAG_RE.findall(text)
    if not spans:
        raise NoSkillTag()
    inner = spans[-1]
    m = _CALL_RE.fullmatch(inner)
    if m is None:
        raise UnknownSkill(inner.strip())
    name, arg = m.group(1), m.group(2)
    try:
        kind = SkillKind(name)
    except ValueError:
        raise UnknownSkill(name) from None
    arg = (arg or "").strip()
    if kind in TARGETED_SKILLS:
        if not arg:
            raise BadArity(kind.value, "requires a target argument")
        try:
            target = Target(arg)
        except ValueError:
            raise UnknownTarget(arg) from None
        return SkillCommand(kind=kind, target=target)
    if arg:
        raise BadArity(kind.value, f"takes no target argument, got {arg!r}")
    return SkillCommand(kind=kind)
