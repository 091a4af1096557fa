"""Two-phase curriculum driver: short horizons first, then long horizons with consistency shaping."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..codes import codeword_from_action, ladder_from_action
from ..core import ConfigurationError
from .env import AQECEnv, CurriculumSchedule, EpisodeRecord, RewardConfig
from .ppo import ActorCritic, RolloutBuffer, ppo_update, sample_action


@dataclass(frozen=True)
class PPOConfig:
    hidden: int = 256
    layers: int = 2
    learning_rate: float = 3e-4
    discount: float = 0.99
    clip_eps: float = 0.2
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    epochs: int = 4
    minibatch: int = 64
    episodes_per_update: int = 16
    init_log_std: float = -0.5


@dataclass(frozen=True)
class TrainingConfig:
    schedule: CurriculumSchedule = field(default_factory=CurriculumSchedule)
    reward: RewardConfig = field(default_factory=RewardConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True, default=list).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        sched = dict(d.get("schedule", {}))
        for key in ("gamma_b_range", "eta_range", "g_range", "fixed_zeta"):
            if sched.get(key) is not None:
                sched[key] = tuple(sched[key])
        return cls(
            CurriculumSchedule(**sched),
            RewardConfig(**d.get("reward", {})),
            PPOConfig(**d.get("ppo", {})),
            int(d.get("seed", 0)),
        )


@dataclass
class BestCode:
    epsilon: float
    action: list
    phase: str
    episode: int
    actions: list = field(default_factory=list)

    def decode(self):
        a = np.asarray(self.action)
        return codeword_from_action(a[:8]), ladder_from_action(np.abs(a[8:]))

    def ladders(self) -> list:
        """Ladder applied at each step of the scoring episode."""
        return [ladder_from_action(np.abs(np.asarray(a)[8:])) for a in self.actions]


@dataclass
class TrainingArtifact:
    policy: ActorCritic
    episodes: list
    best: BestCode | None
    config: TrainingConfig
    update_stats: list = field(default_factory=list)
    eval_episodes: list = field(default_factory=list)

    def mean_rewards(self, phase: str | None = None) -> list[float]:
        return [e.total_reward for e in self.episodes if phase is None or e.phase == phase]


def save_checkpoint(path, policy: ActorCritic, config: TrainingConfig, extra: dict | None = None) -> Path:
    from .. import __version__

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "format": 1,
            "version": __version__,
            "config_hash": config.config_hash(),
            "config": config.to_dict(),
            "state_dict": policy.state_dict(),
            "extra": extra or {},
        },
        path,
    )
    return path


def load_checkpoint(path) -> tuple[ActorCritic, TrainingConfig, dict]:
    blob = torch.load(Path(path), weights_only=False)
    config = TrainingConfig.from_dict(blob["config"])
    if config.config_hash() != blob["config_hash"]:
        raise ConfigurationError("checkpoint config hash does not match its embedded config")
    policy = ActorCritic(hidden=config.ppo.hidden, layers=config.ppo.layers, init_log_std=config.ppo.init_log_std)
    policy.load_state_dict(blob["state_dict"])
    return policy, config, blob


def _run_episode(env: AQECEnv, policy: ActorCritic, gen: torch.Generator, seed: int, max_steps: int, mode: str, deterministic: bool = False):
    obs = env.reset(seed, max_steps=max_steps, mode=mode)
    obs_l, u_l, logp_l, val_l, rew_l = [], [], [], [], []
    done = False
    while not done:
        action, u, logp, value = sample_action(policy, obs, gen, deterministic)
        obs_l.append(obs)
        u_l.append(u)
        logp_l.append(logp)
        val_l.append(value)
        obs, reward, done, _ = env.step(action)
        rew_l.append(reward)
    return env.record, (obs_l, u_l, logp_l, rew_l, val_l)


def run_curriculum(config: TrainingConfig, out_dir=None, log_every: int = 0) -> TrainingArtifact:
    """Phase 1 for ``phase1_episodes``, then phase 2 warm-started from the same networks.

    Every episode is appended to ``episodes.jsonl`` when ``out_dir`` is set,
    with a checkpoint after each phase. After every update the mean action is
    rolled out once without noise. The best code is the first-step action of
    the training or greedy episode with the largest final-step epsilon;
    ``BestCode.actions`` keeps the ladder sequence that produced it.
    """
    sched, ppo = config.schedule, config.ppo
    torch.manual_seed(config.seed)
    gen = torch.Generator().manual_seed(config.seed)
    seeds = np.random.SeedSequence(config.seed)
    policy = ActorCritic(hidden=ppo.hidden, layers=ppo.layers, init_log_std=ppo.init_log_std)
    optimizer = torch.optim.Adam(policy.parameters(), lr=ppo.learning_rate)
    env = AQECEnv(sched, config.reward)
    buffer = RolloutBuffer()
    episodes: list[EpisodeRecord] = []
    stats: list[dict] = []
    evals: list[EpisodeRecord] = []
    best: BestCode | None = None

    out = Path(out_dir) if out_dir is not None else None
    log_fh = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        log_fh = (out / "episodes.jsonl").open("w")

    phases = [("phase1", sched.phase1_episodes), ("phase2", sched.phase2_episodes)]
    try:
        for mode, count in phases:
            for ep in range(count):
                k = sched.phase1_max_steps if mode == "phase1" else sched.phase2_horizon(ep)
                ep_seed = int(seeds.spawn(1)[0].generate_state(1)[0])
                record, (obs_l, u_l, logp_l, rew_l, val_l) = _run_episode(env, policy, gen, ep_seed, k, mode)
                episodes.append(record)
                if log_fh is not None:
                    log_fh.write(record.to_json() + "\n")
                eps = record.final_epsilon
                if math.isfinite(eps) and (best is None or eps > best.epsilon):
                    best = BestCode(float(eps), list(record.steps[0].action), mode, len(episodes) - 1, record.scored_actions)
                buffer.add_episode(obs_l, u_l, logp_l, rew_l, val_l, ppo.discount)
                if (ep + 1) % ppo.episodes_per_update == 0 or ep == count - 1:
                    s = ppo_update(
                        policy, optimizer, buffer.batch(), ppo.clip_eps, ppo.epochs, ppo.minibatch,
                        ppo.value_coef, ppo.entropy_coef, generator=gen,
                    )
                    s["phase"] = mode
                    s["episode"] = ep
                    stats.append(s)
                    buffer.clear()
                    # greedy rollout of the updated policy (mean action, no training data)
                    ev, _ = _run_episode(env, policy, gen, ep_seed, k, mode, deterministic=True)
                    ev.phase = f"{mode}-eval"
                    evals.append(ev)
                    if log_fh is not None:
                        log_fh.write(ev.to_json() + "\n")
                    eps = ev.final_epsilon
                    if math.isfinite(eps) and (best is None or eps > best.epsilon):
                        best = BestCode(float(eps), list(ev.steps[0].action), ev.phase, len(evals) - 1, ev.scored_actions)
                if log_every and (ep + 1) % log_every == 0:
                    recent = [e.total_reward for e in episodes[-log_every:]]
                    print(f"{mode} episode {ep + 1}: mean reward {np.mean(recent):.3f}, best eps {best.epsilon if best else float('nan'):.4f}")
            if out is not None and count:
                save_checkpoint(out / f"{mode}.pt", policy, config)
    finally:
        if log_fh is not None:
            log_fh.close()

    if out is not None:
        (out / "best_code.json").write_text(json.dumps(asdict(best) if best else None, indent=2))
        save_checkpoint(out / "final.pt", policy, config)
    return TrainingArtifact(policy, episodes, best, config, stats, evals)
