"""Actor-critic network and the clipped-surrogate PPO update."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..core import AQECError
from .env import ACTION_DIM, CODE_DIM, LADDER_DIM, OBS_DIM

SQUASH_EPS = 1e-6
LOG_2PI = math.log(2.0 * math.pi)


class TrainingDivergenceError(AQECError, FloatingPointError):
    pass


def _mlp(obs_dim: int, hidden: int, layers: int) -> nn.Sequential:
    mods: list[nn.Module] = []
    width = obs_dim
    for _ in range(layers):
        mods += [nn.Linear(width, hidden), nn.Tanh()]
        width = hidden
    return nn.Sequential(*mods)


class ActorCritic(nn.Module):
    """Policy: shared backbone with a codeword head and a ladder head.

    The value function is a separate network of the same shape so that
    large return targets do not swamp the policy features.
    """

    def __init__(self, obs_dim: int = OBS_DIM, hidden: int = 256, layers: int = 2, init_log_std: float = -0.5):
        super().__init__()
        self.backbone = _mlp(obs_dim, hidden, layers)
        self.code_head = nn.Linear(hidden, CODE_DIM)
        self.ladder_head = nn.Linear(hidden, LADDER_DIM)
        self.critic = _mlp(obs_dim, hidden, layers)
        self.value_head = nn.Linear(hidden, 1)
        self.log_std = nn.Parameter(torch.full((ACTION_DIM,), float(init_log_std)))
        for head in (self.code_head, self.ladder_head):
            nn.init.orthogonal_(head.weight, gain=0.01)
            nn.init.zeros_(head.bias)

    def forward(self, obs: torch.Tensor):
        h = self.backbone(obs)
        mean = torch.cat([self.code_head(h), self.ladder_head(h)], dim=-1)
        log_std = self.log_std.expand_as(mean)
        value = self.value_head(self.critic(obs)).squeeze(-1)
        return mean, log_std, value


def policy_forward(policy: ActorCritic, obs) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Means, log-spreads and value for an observation (or batch)."""
    obs_t = torch.as_tensor(np.asarray(obs), dtype=torch.float32)
    mean, log_std, value = policy(obs_t)
    if not (torch.isfinite(mean).all() and torch.isfinite(log_std).all() and torch.isfinite(value).all()):
        raise TrainingDivergenceError("policy produced non-finite outputs")
    return mean, log_std, value


def squash(u: torch.Tensor) -> torch.Tensor:
    """tanh, kept strictly inside (-1, 1)."""
    return torch.clamp(torch.tanh(u), -1.0 + SQUASH_EPS, 1.0 - SQUASH_EPS)


def squashed_log_prob(u: torch.Tensor, mean: torch.Tensor, log_std: torch.Tensor) -> torch.Tensor:
    """Log density of ``tanh(u)`` with ``u ~ N(mean, exp(log_std)^2)``."""
    z = (u - mean) / torch.exp(log_std)
    gauss = -0.5 * z * z - log_std - 0.5 * LOG_2PI
    # log |d tanh/du| = log(1 - tanh^2) written stably
    jac = 2.0 * (math.log(2.0) - u - nn.functional.softplus(-2.0 * u))
    return (gauss - jac).sum(-1)


def gaussian_entropy(log_std: torch.Tensor) -> torch.Tensor:
    return (log_std + 0.5 * (1.0 + LOG_2PI)).sum(-1)


@torch.no_grad()
def sample_action(policy: ActorCritic, obs, generator: torch.Generator | None = None, deterministic: bool = False):
    """Return ``(action, pre_squash, log_prob, value)`` for one observation."""
    mean, log_std, value = policy_forward(policy, obs)
    if deterministic:
        u = mean
    else:
        noise = torch.randn(mean.shape, generator=generator)
        u = mean + torch.exp(log_std) * noise
    logp = squashed_log_prob(u, mean, log_std)
    return squash(u).numpy().astype(float), u, float(logp), float(value)


def discounted_returns(rewards, discount: float = 0.99) -> np.ndarray:
    out = np.zeros(len(rewards))
    acc = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + discount * acc
        out[i] = acc
    return out


def compute_advantages(rewards, values, discount: float = 0.99) -> np.ndarray:
    """Discounted return-to-go minus the value baseline, per step."""
    if not 0.0 < discount <= 1.0:
        raise ValueError("discount must lie in (0, 1]")
    values = np.asarray(values, dtype=float)
    if len(values) != len(rewards):
        raise ValueError("rewards and values differ in length")
    return discounted_returns(rewards, discount) - values


def clipped_surrogate(ratio: torch.Tensor, advantages: torch.Tensor, clip_eps: float) -> torch.Tensor:
    """Mean of ``min(r A, clip(r, 1-eps, 1+eps) A)`` (to be maximized)."""
    unclipped = ratio * advantages
    clipped = torch.clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    return torch.min(unclipped, clipped).mean()


@dataclass
class RolloutBatch:
    obs: torch.Tensor
    pre_squash: torch.Tensor
    old_log_prob: torch.Tensor
    advantages: torch.Tensor
    returns: torch.Tensor

    def __len__(self) -> int:
        return self.obs.shape[0]


class RolloutBuffer:
    """On-policy storage, cleared after every update."""

    def __init__(self):
        self.clear()

    def clear(self):
        self.obs, self.u, self.logp, self.adv, self.ret = [], [], [], [], []

    def add_episode(self, obs, pre_squash, log_probs, rewards, values, discount: float):
        self.obs.extend(obs)
        self.u.extend(pre_squash)
        self.logp.extend(log_probs)
        self.adv.extend(compute_advantages(rewards, values, discount))
        self.ret.extend(discounted_returns(rewards, discount))

    def __len__(self) -> int:
        return len(self.obs)

    def batch(self) -> RolloutBatch:
        return RolloutBatch(
            torch.as_tensor(np.array(self.obs), dtype=torch.float32),
            torch.stack(self.u).float(),
            torch.as_tensor(self.logp, dtype=torch.float32),
            torch.as_tensor(np.array(self.adv), dtype=torch.float32),
            torch.as_tensor(np.array(self.ret), dtype=torch.float32),
        )


def ppo_update(
    policy: ActorCritic,
    optimizer: torch.optim.Optimizer,
    batch: RolloutBatch,
    clip_eps: float = 0.2,
    epochs: int = 4,
    minibatch: int = 64,
    value_coef: float = 0.5,
    entropy_coef: float = 0.01,
    max_grad_norm: float = 0.5,
    normalize_advantages: bool = True,
    generator: torch.Generator | None = None,
) -> dict:
    """Several epochs of minibatch ascent on the clipped surrogate.

    Minibatches with a non-finite probability ratio are skipped and counted.
    """
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    adv = batch.advantages
    if normalize_advantages and n > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0, "updates": 0, "skipped": 0}
    for _ in range(epochs):
        perm = torch.randperm(n, generator=generator)
        for start in range(0, n, minibatch):
            idx = perm[start : start + minibatch]
            mean, log_std, value = policy(batch.obs[idx])
            logp = squashed_log_prob(batch.pre_squash[idx], mean, log_std)
            ratio = torch.exp(logp - batch.old_log_prob[idx])
            if not torch.isfinite(ratio).all():
                stats["skipped"] += 1
                continue
            surrogate = clipped_surrogate(ratio, adv[idx], clip_eps)
            value_loss = ((value - batch.returns[idx]) ** 2).mean()
            entropy = gaussian_entropy(log_std).mean()
            loss = -surrogate + value_coef * value_loss - entropy_coef * entropy
            optimizer.zero_grad()
            loss.backward()
            nn.utils.clip_grad_norm_(policy.parameters(), max_grad_norm)
            optimizer.step()
            stats["policy_loss"] += -surrogate.item()
            stats["value_loss"] += value_loss.item()
            stats["entropy"] += entropy.item()
            stats["clip_fraction"] += float(((ratio - 1.0).abs() > clip_eps).float().mean())
            stats["updates"] += 1
    k = max(stats["updates"], 1)
    for key in ("policy_loss", "value_loss", "entropy", "clip_fraction"):
        stats[key] /= k
    return stats
