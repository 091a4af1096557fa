"""Curriculum PPO search for codes and recovery ladders."""
from .env import (  # noqa: F401
    AQECEnv,
    CurriculumSchedule,
    EpisodeRecord,
    Observation,
    RewardConfig,
    reward_delta_fidelity,
    shaped_reward,
)
from .ppo import ActorCritic, clipped_surrogate, compute_advantages, policy_forward, ppo_update  # noqa: F401
from .curriculum import PPOConfig, TrainingConfig, run_curriculum  # noqa: F401
