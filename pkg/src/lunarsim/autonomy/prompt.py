"""System prompt construction from the stored template asset."""

from __future__ import annotations

from importlib import resources

from .protocol import SkillKind, Target

DEFAULT_TARGETS = (Target.Astronaut, Target.Antenna, Target.Rover, Target.Rock)
DEFAULT_SKILLS = (SkillKind.Drive, SkillKind.Rotate, SkillKind.Finish,
                  SkillKind.Shutdown, SkillKind.MoreInformation)


def _template() -> str:
    return (resources.files("lunarsim.autonomy") / "data" / "system_prompt.txt") \
        .read_text(encoding="utf-8")


def build_system_prompt(targets=DEFAULT_TARGETS, skills=DEFAULT_SKILLS) -> str:
    """The controller system prompt, byte-stable across runs.

    The template is a data asset; the scene targets and skill library are
    validated against it rather than re-rendered, so the emitted text stays
    exactly as stored.
    """
    text = _template()
    for t in targets:
        if t not in DEFAULT_TARGETS:
            raise ValueError(f"target {t} not covered by the prompt template")
        if f" - {t.value}" not in text:
            raise ValueError(f"prompt template is missing target {t.value}")
    for s in skills:
        if s not in DEFAULT_SKILLS:
            raise ValueError(f"skill {s} not covered by the prompt template")
        if f"- {s.value}(" not in text:
            raise ValueError(f"prompt template is missing skill {s.value}")
    return text
