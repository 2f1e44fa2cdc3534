"""Seeded policy evaluation with deterministic action selection."""

from __future__ import annotations

import numpy as np


def evaluate_policy(policy, env_factory, n_episodes: int = 30,
                    seed: int = 0, max_steps: int | None = None) -> dict:
    """Aggregate success rate / return / episode length over seeded episodes."""
    successes = 0
    returns = []
    lengths = []
    env = env_factory(0)
    for ep in range(n_episodes):
        obs = env.reset(seed=seed + ep)
        policy.reset()
        total = 0.0
        steps = 0
        limit = max_steps or getattr(env.cfg, "timeout_steps", 2000)
        while steps < limit:
            action = policy.act(obs)
            tr = env.step(action)
            total += tr.reward
            steps += 1
            obs = tr.obs
            if tr.done:
                if tr.info.get("success"):
                    successes += 1
                break
        returns.append(total)
        lengths.append(steps)
    return {
        "n_episodes": n_episodes,
        "success_rate": successes / n_episodes,
        "mean_return": float(np.mean(returns)),
        "mean_episode_length": float(np.mean(lengths)),
    }
