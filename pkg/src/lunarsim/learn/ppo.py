"""Minimal clipped-surrogate PPO over vectorized drive environments.

Matches the reference training setup: multi-input actor-critic, GAE,
advantage normalization per minibatch, linear learning-rate decay to zero,
gradient clipping, Adam(eps=1e-5). Rollouts step `n_envs` independent
worlds; only seeds cross the environment boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .nets import ActorCritic
from .policy import LearnedPolicy


class NonFiniteLoss(RuntimeError):
    def __init__(self, diagnostics: dict):
        self.diagnostics = diagnostics
        super().__init__(f"non-finite loss encountered: {diagnostics}")


class RunningNorm:
    """Streaming mean/var standardization of the vector observation."""

    def __init__(self, dim: int, clip: float = 10.0):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 1e-4
        self.clip = clip

    def update(self, batch: np.ndarray) -> None:
        batch = np.asarray(batch, dtype=np.float64)
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        b_count = batch.shape[0]
        delta = b_mean - self.mean
        total = self.count + b_count
        self.mean = self.mean + delta * b_count / total
        m_a = self.var * self.count
        m_b = b_var * b_count
        self.var = (m_a + m_b + delta ** 2 * self.count * b_count / total) / total
        self.count = total

    def apply(self, x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x) - self.mean) / np.sqrt(self.var + 1e-8)
        return np.clip(z, -self.clip, self.clip).astype(np.float32)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "var": self.var.tolist(),
                "clip": self.clip}

    @staticmethod
    def from_dict(data: dict) -> "RunningNorm":
        n = RunningNorm(len(data["mean"]), clip=float(data.get("clip", 10.0)))
        n.mean = np.asarray(data["mean"], dtype=np.float64)
        n.var = np.asarray(data["var"], dtype=np.float64)
        n.count = 1.0
        return n


@dataclass(frozen=True)
class PpoConfig:
    learning_rate: float = 1.4e-4      # linear decay to zero
    n_steps: int = 2048
    n_envs: int = 8
    batch_size: int = 4096
    ent_coef: float = 1.68e-6
    n_epochs: int = 10
    total_timesteps: int = 200_000
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_range: float = 0.2
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden: tuple[int, int] = (64, 64)
    log_std_init: float = 0.0
    vector_encoder: str = "rbf"   # rbf | identity
    normalize_obs: bool = True    # running standardization of the vector part

    def __post_init__(self):
        if (self.n_steps * self.n_envs) % self.batch_size != 0:
            raise ValueError("batch_size must divide n_steps * n_envs")

    def lr_at(self, progress_remaining: float) -> float:
        return self.learning_rate * progress_remaining

    def to_dict(self) -> dict:
        return {
            "algorithm": "PPO",
            "learning_rate": self.learning_rate,
            "lr_schedule": "linear_to_zero",
            "n_steps": self.n_steps,
            "n_envs": self.n_envs,
            "batch_size": self.batch_size,
            "ent_coef": self.ent_coef,
            "n_epochs": self.n_epochs,
            "total_timesteps": self.total_timesteps,
            "gamma": self.gamma,
            "gae_lambda": self.gae_lambda,
            "clip_range": self.clip_range,
            "vf_coef": self.vf_coef,
            "max_grad_norm": self.max_grad_norm,
        }


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)  # dict rows, CSV-friendly

    def to_csv(self) -> str:
        cols = ["iteration", "timesteps", "mean_return", "success_rate",
                "policy_loss", "value_loss", "entropy", "lr"]
        lines = [",".join(cols)]
        for row in self.rows:
            lines.append(",".join(f"{row[c]:.8g}" if isinstance(row[c], float)
                                  else str(row[c]) for c in cols))
        return "\n".join(lines) + "\n"


def _obs_to_tensor(obs_batch):
    if isinstance(obs_batch[0], dict):
        return {
            "image": torch.as_tensor(np.stack([o["image"] for o in obs_batch])),
            "vector": torch.as_tensor(np.stack([o["vector"] for o in obs_batch])),
        }
    return torch.as_tensor(np.stack(obs_batch))


def _index_obs(obs_tensor, idx):
    if isinstance(obs_tensor, dict):
        return {k: v[idx] for k, v in obs_tensor.items()}
    return obs_tensor[idx]


def ppo_train(env_factory, cfg: PpoConfig, seed: int = 0,
              history_hook=None) -> tuple[LearnedPolicy, TrainHistory]:
    """Train a policy; returns the deterministic-eval handle and the log.

    env_factory(index) must build independent environments exposing
    reset(seed) and step(action) -> Transition.
    """
    torch.manual_seed(seed)
    envs = [env_factory(i) for i in range(cfg.n_envs)]
    obs = [env.reset(seed=seed + 1000 * i) for i, env in enumerate(envs)]
    image_mode = isinstance(obs[0], dict)
    if image_mode:
        obs_dim = int(obs[0]["vector"].shape[0])
        image_shape = tuple(obs[0]["image"].shape)
    else:
        obs_dim = int(np.asarray(obs[0]).shape[0])
        image_shape = None

    net = ActorCritic(obs_dim=obs_dim, act_dim=2, hidden=cfg.hidden,
                      image_shape=image_shape, log_std_init=cfg.log_std_init,
                      vector_encoder=cfg.vector_encoder)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate, eps=1e-5)

    norm = RunningNorm(obs_dim) if cfg.normalize_obs else None

    def normalize(o):
        if norm is None:
            return o
        if isinstance(o, dict):
            return {"image": o["image"], "vector": norm.apply(o["vector"])}
        return norm.apply(o)

    def norm_update(raw_list):
        if norm is not None:
            vecs = [o["vector"] if isinstance(o, dict) else o for o in raw_list]
            norm.update(np.stack(vecs))

    norm_update(obs)
    obs = [normalize(o) for o in obs]

    history = TrainHistory()
    episode_returns: list[float] = []
    episode_successes: list[bool] = []
    running = np.zeros(cfg.n_envs)
    timesteps = 0
    iteration = 0

    while timesteps < cfg.total_timesteps:
        iteration += 1
        buf_obs, buf_actions, buf_logp, buf_rewards = [], [], [], []
        buf_dones, buf_values, buf_timeouts = [], [], []
        for _ in range(cfg.n_steps):
            obs_t = _obs_to_tensor(obs)
            with torch.no_grad():
                dist = net.distribution(obs_t)
                actions = dist.sample()
                logp = dist.log_prob(actions).sum(-1)
                values = net.value(obs_t)
            actions_np = actions.numpy()
            step_rewards = np.empty(cfg.n_envs)
            step_dones = np.empty(cfg.n_envs, dtype=bool)
            next_obs = list(obs)
            raw_next = []
            for i, env in enumerate(envs):
                tr = env.step(actions_np[i])
                step_rewards[i] = tr.reward
                step_dones[i] = tr.done
                running[i] += tr.reward
                if tr.done:
                    if tr.info.get("timeout"):
                        # truncation: bootstrap with the value of the final
                        # observation rather than treating it as absorbing
                        with torch.no_grad():
                            tv = float(net.value(
                                _obs_to_tensor([normalize(tr.obs)]))[0])
                        step_rewards[i] += cfg.gamma * tv
                    episode_returns.append(float(running[i]))
                    episode_successes.append(bool(tr.info.get("success", False)))
                    running[i] = 0.0
                    raw = env.reset()
                else:
                    raw = tr.obs
                raw_next.append(raw)
                next_obs[i] = normalize(raw)
            norm_update(raw_next)
            buf_obs.append(obs)
            buf_actions.append(actions_np)
            buf_logp.append(logp.numpy())
            buf_rewards.append(step_rewards)
            buf_dones.append(step_dones)
            buf_values.append(values.numpy())
            obs = next_obs
            timesteps += cfg.n_envs

        with torch.no_grad():
            last_values = net.value(_obs_to_tensor(obs)).numpy()

        rewards = np.asarray(buf_rewards)
        dones = np.asarray(buf_dones)
        values = np.asarray(buf_values)
        advantages = np.zeros_like(rewards)
        gae = np.zeros(cfg.n_envs)
        next_values = last_values
        for t in range(cfg.n_steps - 1, -1, -1):
            non_terminal = ~dones[t]
            delta = rewards[t] + cfg.gamma * next_values * non_terminal - values[t]
            gae = delta + cfg.gamma * cfg.gae_lambda * non_terminal * gae
            advantages[t] = gae
            next_values = values[t]
        returns = advantages + values

        flat_obs = [o for step_obs in buf_obs for o in step_obs]
        obs_tensor = _obs_to_tensor(flat_obs)
        actions_tensor = torch.as_tensor(
            np.concatenate(buf_actions, axis=0), dtype=torch.float32)
        logp_tensor = torch.as_tensor(
            np.concatenate(buf_logp, axis=0), dtype=torch.float32)
        adv_tensor = torch.as_tensor(
            advantages.reshape(-1), dtype=torch.float32)
        ret_tensor = torch.as_tensor(returns.reshape(-1), dtype=torch.float32)

        progress_remaining = 1.0 - min(1.0, timesteps / cfg.total_timesteps)
        lr = cfg.lr_at(progress_remaining)
        for group in optimizer.param_groups:
            group["lr"] = lr

        n_samples = cfg.n_steps * cfg.n_envs
        last_pl = last_vl = last_ent = 0.0
        gen = torch.Generator().manual_seed(seed * 100003 + iteration)
        for _epoch in range(cfg.n_epochs):
            perm = torch.randperm(n_samples, generator=gen)
            for start in range(0, n_samples, cfg.batch_size):
                idx = perm[start:start + cfg.batch_size]
                mb_obs = _index_obs(obs_tensor, idx)
                logp_new, entropy, value_pred = net.evaluate(
                    mb_obs, actions_tensor[idx])
                adv = adv_tensor[idx]
                adv = (adv - adv.mean()) / (adv.std() + 1e-8)
                ratio = torch.exp(logp_new - logp_tensor[idx])
                unclipped = ratio * adv
                clipped = torch.clamp(ratio, 1.0 - cfg.clip_range,
                                      1.0 + cfg.clip_range) * adv
                policy_loss = -torch.min(unclipped, clipped).mean()
                value_loss = torch.nn.functional.mse_loss(value_pred, ret_tensor[idx])
                entropy_loss = -entropy.mean()
                loss = (policy_loss + cfg.vf_coef * value_loss
                        + cfg.ent_coef * entropy_loss)
                if not torch.isfinite(loss):
                    raise NonFiniteLoss({
                        "iteration": iteration,
                        "policy_loss": policy_loss.item(),
                        "value_loss": value_loss.item(),
                        "entropy": (-entropy_loss).item(),
                    })
                optimizer.zero_grad()
                loss.backward()
                torch.nn.utils.clip_grad_norm_(net.parameters(), cfg.max_grad_norm)
                optimizer.step()
                last_pl = policy_loss.item()
                last_vl = value_loss.item()
                last_ent = (-entropy_loss).item()

        recent = episode_returns[-100:]
        recent_s = episode_successes[-100:]
        row = {
            "iteration": iteration,
            "timesteps": timesteps,
            "mean_return": float(np.mean(recent)) if recent else float("nan"),
            "success_rate": float(np.mean(recent_s)) if recent_s else 0.0,
            "policy_loss": last_pl,
            "value_loss": last_vl,
            "entropy": last_ent,
            "lr": lr,
        }
        history.rows.append(row)
        if history_hook is not None:
            history_hook(row)

    return LearnedPolicy(net, norm), history


def collect_minibatch(env_factory, cfg: PpoConfig, seed: int = 0,
                      n_steps: int = 64):
    """Short on-policy rollout used by the gradient check."""
    torch.manual_seed(seed)
    env = env_factory(0)
    obs = env.reset(seed=seed)
    image_mode = isinstance(obs, dict)
    obs_dim = int(obs["vector"].shape[0]) if image_mode else int(np.asarray(obs).shape[0])
    image_shape = tuple(obs["image"].shape) if image_mode else None
    net = ActorCritic(obs_dim=obs_dim, act_dim=2, hidden=cfg.hidden,
                      image_shape=image_shape, log_std_init=cfg.log_std_init,
                      vector_encoder=cfg.vector_encoder)
    all_obs, all_actions, all_logp, all_adv = [], [], [], []
    for _ in range(n_steps):
        obs_t = _obs_to_tensor([obs])
        with torch.no_grad():
            dist = net.distribution(obs_t)
            a = dist.sample()
            logp = dist.log_prob(a).sum(-1)
        tr = env.step(a.squeeze(0).numpy())
        all_obs.append(obs)
        all_actions.append(a.squeeze(0).numpy())
        all_logp.append(float(logp))
        all_adv.append(tr.reward)  # rewards stand in for advantages here
        obs = env.reset() if tr.done else tr.obs
    adv = np.asarray(all_adv)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return net, {
        "obs": _obs_to_tensor(all_obs),
        "actions": torch.as_tensor(np.stack(all_actions), dtype=torch.float32),
        "logp_old": torch.as_tensor(np.asarray(all_logp), dtype=torch.float32),
        "advantages": torch.as_tensor(adv, dtype=torch.float32),
    }


def policy_loss_fn(net: ActorCritic, batch: dict, cfg: PpoConfig) -> torch.Tensor:
    """Clipped-surrogate policy objective (with entropy term) on a batch."""
    logp_new, entropy, _ = net.evaluate(batch["obs"], batch["actions"])
    ratio = torch.exp(logp_new - batch["logp_old"])
    adv = batch["advantages"]
    unclipped = ratio * adv
    clipped = torch.clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * adv
    return -torch.min(unclipped, clipped).mean() - cfg.ent_coef * entropy.mean()


def policy_gradient_check(net: ActorCritic, batch: dict, cfg: PpoConfig,
                          n_weights: int = 10, eps: float = 1e-6,
                          seed: int = 0) -> float:
    """Max relative error between autograd and central finite differences.

    Runs in float64 on a frozen copy of the network; checks `n_weights`
    randomly chosen scalar parameters of the policy head and log-std.
    """
    import copy
    net64 = copy.deepcopy(net).double()
    batch64 = {k: (v.double() if torch.is_tensor(v) and v.dtype.is_floating_point else v)
               for k, v in batch.items()}
    if isinstance(batch64["obs"], dict):
        batch64["obs"] = {k: v.double() for k, v in batch64["obs"].items()}
    else:
        batch64["obs"] = batch64["obs"].double()
    batch64["actions"] = batch64["actions"].double()

    params = [p for name, p in net64.named_parameters()
              if name.startswith("pi") or name == "log_std"]
    loss = policy_loss_fn(net64, batch64, cfg)
    grads = torch.autograd.grad(loss, params)

    rng = np.random.default_rng(seed)
    worst = 0.0
    flat_sizes = [p.numel() for p in params]
    total = sum(flat_sizes)
    for _ in range(n_weights):
        k = int(rng.integers(total))
        pi = 0
        while k >= flat_sizes[pi]:
            k -= flat_sizes[pi]
            pi += 1
        p = params[pi]
        analytic = float(grads[pi].reshape(-1)[k])
        with torch.no_grad():
            orig = float(p.reshape(-1)[k])
            p.reshape(-1)[k] = orig + eps
            up = float(policy_loss_fn(net64, batch64, cfg))
            p.reshape(-1)[k] = orig - eps
            dn = float(policy_loss_fn(net64, batch64, cfg))
            p.reshape(-1)[k] = orig
        fd = (up - dn) / (2 * eps)
        rel = abs(fd - analytic) / max(abs(analytic), abs(fd), 1e-10)
        worst = max(worst, rel)
    return worst
