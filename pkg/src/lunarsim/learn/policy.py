"""Drive policies: scripted greedy controller, random baseline, and the
checkpoint-backed learned policy handle.

Every policy exposes reset() and act(obs) -> np.ndarray(2) in [-1, 1].
The torch actor-critic itself lives in `nets` (imported lazily so that
headless scenario runs never pay the torch import).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import DISTANCE_SCALE


@dataclass
class GreedyDrivePolicy:
    """Proportional bearing steering with a stop ramp near the target.

    Reads only the feature-mode observation triple, so it runs against the
    same interface as a learned policy.
    """
    kappa_max: float = 0.5
    steer_gain: float = 2.0     # curvature per rad of bearing error
    slow_radius: float = 7.0
    stop_radius: float = 3.2

    def reset(self):
        pass

    def act(self, obs: np.ndarray) -> np.ndarray:
        distance = float(obs[0]) * DISTANCE_SCALE
        bearing = math.atan2(float(obs[1]), float(obs[2]))
        curvature = max(-self.kappa_max, min(self.kappa_max,
                                             self.steer_gain * bearing))
        a0 = curvature / self.kappa_max
        if distance <= self.stop_radius:
            a1 = -1.0
        elif distance <= self.slow_radius:
            a1 = 0.3
        else:
            a1 = 1.0
        return np.array([a0, a1], dtype=np.float32)


@dataclass
class RandomPolicy:
    seed: int = 0

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def reset(self):
        pass

    def act(self, obs) -> np.ndarray:
        return self._rng.uniform(-1.0, 1.0, size=2).astype(np.float32)


class LearnedPolicy:
    """Deterministic-eval wrapper around a trained actor-critic.

    Carries the observation-normalization constants the policy was trained
    with; they ship inside the checkpoint.
    """

    def __init__(self, net, norm=None):
        self.net = net
        self.norm = norm

    def reset(self):
        pass

    def act(self, obs) -> np.ndarray:
        import torch
        if isinstance(obs, dict):
            vec = obs["vector"]
            if self.norm is not None:
                vec = self.norm.apply(vec)
            batch = {
                "image": torch.as_tensor(np.asarray(obs["image"], dtype=np.float32)).unsqueeze(0),
                "vector": torch.as_tensor(np.asarray(vec, dtype=np.float32)).unsqueeze(0),
            }
        else:
            vec = np.asarray(obs, dtype=np.float32)
            if self.norm is not None:
                vec = self.norm.apply(vec)
            batch = torch.as_tensor(vec).unsqueeze(0)
        with torch.no_grad():
            mean = self.net.action_mean(batch)
            return np.clip(mean.squeeze(0).numpy(), -1.0, 1.0)

    def save(self, path: str, config: dict | None = None) -> None:
        from .nets import save_checkpoint
        save_checkpoint(path, self.net, config or {},
                        normalization=self.norm.to_dict() if self.norm else None)

    @staticmethod
    def load(path: str) -> "LearnedPolicy":
        from .nets import load_checkpoint
        from .ppo import RunningNorm
        net, _cfg, normalization = load_checkpoint(path)
        norm = RunningNorm.from_dict(normalization) if normalization else None
        return LearnedPolicy(net, norm)
