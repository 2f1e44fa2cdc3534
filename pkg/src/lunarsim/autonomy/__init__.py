"""Hierarchical autonomy: prompt, protocol parsing, skills, orchestration."""

from .oracle import ScriptedOracle, parse_task_targets
from .orchestrator import (ConversationState, LifecycleError, Orchestrator,
                           Phase, SkillEvent, make_scripted_orchestrator)
from .prompt import DEFAULT_SKILLS, DEFAULT_TARGETS, build_system_prompt
from .protocol import (BadArity, NoSkillTag, ProtocolError, SkillCommand,
                       SkillKind, SkillResult, Status, Target, UnknownSkill,
                       UnknownTarget, parse_skill_response)
from .skills import (DRIVE_DURATION, PIVOT_ANGLE, PIVOT_RATE, SUCCESS_RADIUS,
                     drive_skill, rotate_skill)
from .transport import ChatMessage, HttpChatVlm, TransportError, VlmTransport

__all__ = [
    "BadArity", "ChatMessage", "ConversationState", "DEFAULT_SKILLS",
    "DEFAULT_TARGETS", "DRIVE_DURATION", "HttpChatVlm", "LifecycleError",
    "NoSkillTag", "Orchestrator", "PIVOT_ANGLE", "PIVOT_RATE", "Phase",
    "ProtocolError", "ScriptedOracle", "SkillCommand", "SkillEvent",
    "SkillKind", "SkillResult", "Status", "SUCCESS_RADIUS", "Target",
    "TransportError", "UnknownSkill", "UnknownTarget", "VlmTransport",
    "build_system_prompt", "drive_skill", "make_scripted_orchestrator",
    "parse_skill_response", "parse_task_targets", "rotate_skill",
]
