"""Actor-critic networks and the self-describing checkpoint container.

Feature mode uses separate tanh MLP heads over the stacked vector; image
modes add a small convolutional encoder whose features concatenate with
the vector part before the heads (multi-input actor-critic).
"""

from __future__ import annotations

import base64
import json

import numpy as np
import torch
import torch.nn as nn

CHECKPOINT_SCHEMA = "lunarsim-policy/1"


def _orthogonal(layer: nn.Linear, gain: float):
    nn.init.orthogonal_(layer.weight, gain=gain)
    nn.init.constant_(layer.bias, 0.0)
    return layer


def _mlp(sizes, gain_out: float) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(len(sizes) - 2):
        layers.append(_orthogonal(nn.Linear(sizes[i], sizes[i + 1]), math_sqrt2()))
        layers.append(nn.Tanh())
    layers.append(_orthogonal(nn.Linear(sizes[-2], sizes[-1]), gain_out))
    return nn.Sequential(*layers)


def math_sqrt2() -> float:
    return float(np.sqrt(2.0))


class VectorEncoder(nn.Module):
    """Fixed per-dimension tanh basis expansion over the raw vector.

    The bases make threshold behaviors (slow down / stop inside a radius)
    reachable with small weight changes, which matters at the very low
    training learning rate. No learned parameters.
    """

    CENTERS = (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.5, 4.0)
    SHARPNESS = 2.0

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.out_dim = dim * (1 + len(self.CENTERS))
        self.register_buffer(
            "centers", torch.tensor(self.CENTERS).view(1, 1, -1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        bumps = torch.tanh((x.unsqueeze(-1) - self.centers) * self.SHARPNESS)
        return torch.cat([x, bumps.reshape(*x.shape[:-1], -1)], dim=-1)


class ConvEncoder(nn.Module):
    """3-layer conv stack for 64x64 gray / 128x128 RGB inputs."""

    def __init__(self, shape: tuple):
        super().__init__()
        if len(shape) == 2:
            c, h, w = 1, shape[0], shape[1]
        else:
            h, w, c = shape
        self.input_hw = (h, w)
        self.net = nn.Sequential(
            nn.Conv2d(c, 16, kernel_size=8, stride=4), nn.ReLU(),
            nn.Conv2d(16, 32, kernel_size=4, stride=2), nn.ReLU(),
            nn.Conv2d(32, 32, kernel_size=3, stride=1), nn.ReLU(),
            nn.Flatten(),
        )
        with torch.no_grad():
            n = self.net(torch.zeros(1, c, h, w)).shape[1]
        self.out = nn.Sequential(nn.Linear(n, 128), nn.ReLU())

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.dim() == 3:          # (B, H, W) gray
            img = img.unsqueeze(1)
        elif img.dim() == 4 and img.shape[-1] in (1, 3):  # (B, H, W, C)
            img = img.permute(0, 3, 1, 2)
        return self.out(self.net(img))


class ActorCritic(nn.Module):
    def __init__(self, obs_dim: int, act_dim: int = 2,
                 hidden: tuple[int, int] = (64, 64),
                 image_shape: tuple | None = None,
                 log_std_init: float = 0.0,
                 vector_encoder: str = "rbf"):
        super().__init__()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.hidden = tuple(hidden)
        self.image_shape = tuple(image_shape) if image_shape else None
        self.vector_encoder_kind = vector_encoder
        self.encoder = ConvEncoder(image_shape) if image_shape else None
        if vector_encoder == "rbf":
            self.vec_encoder = VectorEncoder(obs_dim)
            vec_dim = self.vec_encoder.out_dim
        elif vector_encoder == "identity":
            self.vec_encoder = None
            vec_dim = obs_dim
        else:
            raise ValueError(f"unknown vector encoder {vector_encoder!r}")
        feat = vec_dim + (128 if image_shape else 0)
        self.pi = _mlp([feat, *hidden, act_dim], gain_out=0.01)
        self.vf = _mlp([feat, *hidden, 1], gain_out=1.0)
        self.log_std = nn.Parameter(torch.full((act_dim,), float(log_std_init)))

    # observation is either a float tensor (B, obs_dim) or a dict with
    # "image" and "vector" tensors
    def features(self, obs) -> torch.Tensor:
        if isinstance(obs, dict):
            vec = obs["vector"]
            if self.vec_encoder is not None:
                vec = self.vec_encoder(vec)
            img = self.encoder(obs["image"])
            return torch.cat([img, vec], dim=-1)
        if self.vec_encoder is not None:
            return self.vec_encoder(obs)
        return obs

    def action_mean(self, obs) -> torch.Tensor:
        return self.pi(self.features(obs))

    def value(self, obs) -> torch.Tensor:
        return self.vf(self.features(obs)).squeeze(-1)

    def distribution(self, obs) -> torch.distributions.Normal:
        mean = self.action_mean(obs)
        std = torch.exp(self.log_std).expand_as(mean)
        return torch.distributions.Normal(mean, std)

    def evaluate(self, obs, actions):
        dist = self.distribution(obs)
        logp = dist.log_prob(actions).sum(-1)
        entropy = dist.entropy().sum(-1)
        return logp, entropy, self.value(obs)


# --- checkpoint io -----------------------------------------------------------

def _tensor_entry(t: torch.Tensor) -> dict:
    arr = t.detach().cpu().numpy().astype(np.float32)
    return {"shape": list(arr.shape), "dtype": "float32",
            "data_b64": base64.b64encode(arr.tobytes()).decode("ascii")}


def save_checkpoint(path: str, net: ActorCritic, config: dict,
                    normalization: dict | None = None) -> None:
    """JSON tensor container with layer shapes, activations and config."""
    doc = {
        "schema": CHECKPOINT_SCHEMA,
        "obs_dim": net.obs_dim,
        "act_dim": net.act_dim,
        "hidden": list(net.hidden),
        "activation": "tanh",
        "vector_encoder": net.vector_encoder_kind,
        "image_shape": list(net.image_shape) if net.image_shape else None,
        "normalization": normalization or {},
        "config": config,
        "tensors": {name: _tensor_entry(p) for name, p in net.state_dict().items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path: str) -> tuple[ActorCritic, dict, dict | None]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != CHECKPOINT_SCHEMA:
        raise ValueError(f"unknown checkpoint schema {doc.get('schema')!r}")
    net = ActorCritic(obs_dim=doc["obs_dim"], act_dim=doc["act_dim"],
                      hidden=tuple(doc["hidden"]),
                      image_shape=tuple(doc["image_shape"]) if doc["image_shape"] else None,
                      vector_encoder=doc.get("vector_encoder", "identity"))
    state = {}
    for name, entry in doc["tensors"].items():
        raw = base64.b64decode(entry["data_b64"])
        arr = np.frombuffer(raw, dtype=np.float32).reshape(entry["shape"]).copy()
        state[name] = torch.from_numpy(arr)
    net.load_state_dict(state)
    return net, doc["config"], doc.get("normalization") or None
