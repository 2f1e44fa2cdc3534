"""Deterministic scripted stand-in for the hosted model.

Reads ground truth from the world and answers in the same shape the
system prompt demands, so every reply parses through
`parse_skill_response`. Used for tests and headless runs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..world import NavWorld
from .protocol import SkillCommand, SkillKind, Target
from .transport import ChatMessage

SUCCESS_RADIUS = 4.0

# task phrasing -> target; matching is case-insensitive on keywords
_TARGET_WORDS = (
    ("astronaut", Target.Astronaut),
    ("antenna", Target.Antenna),
    ("dish", Target.Antenna),
    ("rover", Target.Rover),
    ("rassor", Target.Rover),
    ("rock", Target.Rock),
    ("boulder", Target.Rock),
)


def parse_task_targets(text: str) -> list[Target]:
    """Targets named in a task, in utterance order."""
    found: list[tuple[int, Target]] = []
    lower = text.lower()
    for word, target in _TARGET_WORDS:
        for m in re.finditer(word, lower):
            found.append((m.start(), target))
    found.sort()
    ordered: list[Target] = []
    for _, t in found:
        if t not in ordered:
            ordered.append(t)
    return ordered


@dataclass
class ScriptedOracle:
    """Conversation-scoped controller state lives here, like VLM history."""
    world: NavWorld
    targets: list[Target] = field(default_factory=list)
    index: int = 0
    awaiting_clarification: bool = False

    def reset(self):
        self.targets = []
        self.index = 0
        self.awaiting_clarification = False

    # transport interface ---------------------------------------------------
    def send(self, messages: list[ChatMessage]) -> str:
        last = messages[-1]
        text = last.text.strip()
        if text in ("Startup!", "Continuation!"):
            self.reset()
            return ("Lunar rover controller online. I am awaiting further "
                    "instructions.")
        if text in ("Success", "Fail"):
            return self._after_skill(text)
        return self._on_task(text)

    # rules -------------------------------------------------------------------
    def _on_task(self, text: str) -> str:
        targets = parse_task_targets(text)
        if not targets:
            self.awaiting_clarification = True
            return ("I do not have enough information about which target to "
                    "approach. Please name one of the listed targets. "
                    "<skill>MoreInformation()</skill>")
        self.awaiting_clarification = False
        self.targets = targets
        self.index = 0
        return self._act()

    def _after_skill(self, outcome: str) -> str:
        if not self.targets:
            return ("No active task remains. I am awaiting instructions. "
                    "<skill>Finish()</skill>")
        current = self.targets[self.index]
        if (self.world.distance_to(current.value) <= SUCCESS_RADIUS
                and self.world.stopped()):
            if self.index + 1 < len(self.targets):
                self.index += 1
            else:
                self.targets = []
                return ("The final target has been reached; the task is "
                        "complete. <skill>Finish()</skill>")
        return self._act()

    def _act(self) -> str:
        current = self.targets[self.index]
        cmd: SkillCommand
        if self.world.visible(current.value):
            cmd = SkillCommand(SkillKind.Drive, current)
            prose = (f"The {current.value} is in view; I will drive toward it.")
        else:
            cmd = SkillCommand(SkillKind.Rotate, current)
            prose = (f"The {current.value} is not in view; I will rotate in "
                     "place to search for it.")
        return f"{prose} <skill>{cmd.render()}</skill>"
