"""Drive-skill learning: environment, reward, PPO trainer, evaluation.

torch-dependent pieces (nets, ppo) import lazily via their modules;
importing this package alone stays lightweight for headless runs.
"""

from .env import DriveEnv, EnvConfig, StepBeforeReset, Transition
from .evaluate import evaluate_policy
from .policy import GreedyDrivePolicy, LearnedPolicy, RandomPolicy
from .reward import RewardConfig, StepContext, Terminal, compute_reward

__all__ = [
    "DriveEnv", "EnvConfig", "GreedyDrivePolicy", "LearnedPolicy",
    "RandomPolicy", "RewardConfig", "StepBeforeReset", "StepContext",
    "Terminal", "Transition", "compute_reward", "evaluate_policy",
]
