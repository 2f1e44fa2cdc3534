"""Drive-skill reward: progress, alignment, idleness and smoothness terms,
with terminal bonuses for stopping near the target / aborting on heading.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Terminal(enum.Enum):
    NONE = "none"
    SUCCESS = "success"
    FAIL = "fail"


@dataclass(frozen=True)
class RewardConfig:
    c_d: float = 1.0            # progress weight, 1/m
    c_a: float = 0.02           # alignment weight
    c_t: float = 0.01           # per-step time penalty
    c_s: float = 0.01           # action smoothness weight
    success_radius: float = 4.0  # m
    fail_angle: float = math.pi / 6.0  # rad
    terminal_success: float = 1.0
    terminal_fail: float = -0.5

    def __post_init__(self):
        if min(self.c_d, self.c_a, self.c_t, self.c_s) < 0:
            raise ValueError("reward weights must be non-negative")
        if self.success_radius <= 0:
            raise ValueError("success_radius must be positive")


@dataclass(frozen=True)
class StepContext:
    """Per-step quantities feeding the reward.

    d_prev/d_curr are distances to the target; theta is the absolute angle
    between the rover heading and the target direction (radians); actions
    are the normalized 2-vectors of this and the previous step.
    """
    d_prev: float
    d_curr: float
    theta: float
    action: np.ndarray
    prev_action: np.ndarray

    @property
    def progress(self) -> float:
        return self.d_prev - self.d_curr


def compute_reward(ctx: StepContext, cfg: RewardConfig,
                   terminal: Terminal = Terminal.NONE) -> float:
    if terminal is Terminal.SUCCESS:
        return cfg.terminal_success
    if terminal is Terminal.FAIL:
        return cfg.terminal_fail
    diff = np.asarray(ctx.action, dtype=float) - np.asarray(ctx.prev_action, dtype=float)
    smoothness = float(np.dot(diff, diff))
    return (cfg.c_d * (ctx.d_prev - ctx.d_curr)
            + cfg.c_a * (1.0 - 40.0 * ctx.theta ** 2)
            - cfg.c_t
            - cfg.c_s * smoothness)
