"""Markov decision process over the analytic solver.

An action is 15 numbers in (-1, 1): eight signed Fock coefficients that
define the codeword and seven ladder weights (absolute values are used).
The first step of an episode prepares the six cardinal states of the chosen
code; every step then evolves the carried-over states by ``dt`` under the
ladder of that step, and fidelities are always taken against the step-one
states.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..analytic import AnalyticSolver, LossChannelSet
from ..codes import codeword_from_action, ladder_from_action
from ..core import AQECError, ConfigurationError
from ..fidelity import breakeven_reference, cardinal_states

CODE_DIM = 8
LADDER_DIM = 7
ACTION_DIM = CODE_DIM + LADDER_DIM
OBS_DIM = 6 + 2 * ACTION_DIM + 3

REWARD_MODES = ("phase1", "phase2", "delta_fidelity")
TERMINATIONS = ("horizon", "below_breakeven", "invalid_action")


@dataclass(frozen=True)
class RewardConfig:
    f1: float = 250.0
    f2: float = 2.0
    penalty: float = -20.0
    alpha_clip: float = 0.97
    mode: str = "phase1"

    def __post_init__(self):
        if self.mode not in REWARD_MODES:
            raise ConfigurationError(f"reward mode must be one of {REWARD_MODES}")
        if not self.f1 > self.f2 >= 0:
            raise ConfigurationError("reward scales need f1 > f2 >= 0")

    def with_mode(self, mode: str) -> "RewardConfig":
        return RewardConfig(self.f1, self.f2, self.penalty, self.alpha_clip, mode)


@dataclass(frozen=True)
class CurriculumSchedule:
    phase1_max_steps: int = 4
    phase2_max_steps: int = 70
    step_tau: float = 0.06
    phase1_episodes: int = 0
    phase2_episodes: int = 0
    gamma_b_range: tuple = (600.0, 1800.0)
    eta_range: tuple = (0.0, 0.08)
    g_range: tuple = (300.0, 600.0)
    ramp_fraction: float = 0.2
    fixed_zeta: tuple | None = None

    def __post_init__(self):
        if not 1 <= self.phase1_max_steps <= self.phase2_max_steps:
            raise ConfigurationError("need 1 <= phase1_max_steps <= phase2_max_steps")
        if self.step_tau <= 0:
            raise ConfigurationError("step_tau must be > 0")
        for name in ("gamma_b_range", "eta_range", "g_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ConfigurationError(f"{name} is empty")
        if not 0.0 <= self.ramp_fraction <= 1.0:
            raise ConfigurationError("ramp_fraction must be in [0, 1]")

    @property
    def ranges(self) -> tuple:
        return (self.gamma_b_range, self.eta_range, self.g_range)

    def phase2_horizon(self, episode: int) -> int:
        """Horizon for phase-2 episode ``episode``: linear ramp from K1 to K2."""
        ramp = int(math.ceil(self.ramp_fraction * self.phase2_episodes))
        if ramp <= 0 or episode >= ramp:
            return self.phase2_max_steps
        frac = (episode + 1) / ramp
        return int(round(self.phase1_max_steps + frac * (self.phase2_max_steps - self.phase1_max_steps)))


def normalize_zeta(zeta, ranges) -> np.ndarray:
    out = []
    for v, (lo, hi) in zip(zeta, ranges):
        out.append(0.0 if hi == lo else (v - lo) / (hi - lo))
    return np.clip(np.array(out), 0.0, 1.0)


def lambda_from_zeta(zeta) -> float:
    gamma_b, _, g = zeta
    return 4.0 * g * g / gamma_b


@dataclass
class Observation:
    fidelities: np.ndarray
    previous_action: np.ndarray
    initial_action: np.ndarray
    zeta: np.ndarray

    def vector(self) -> np.ndarray:
        v = np.concatenate([self.fidelities, self.previous_action, self.initial_action, self.zeta]).astype(float)
        if v.shape != (OBS_DIM,) or not np.all(np.isfinite(v)):
            raise AQECError("malformed observation")
        return v


@dataclass
class StepRecord:
    observation: list
    action: list
    reward: float
    mean_fidelity: float
    breakeven: float
    epsilon: float
    tau: float


@dataclass
class EpisodeRecord:
    zeta: list
    steps: list = field(default_factory=list)
    termination: str | None = None
    phase: str = "phase1"
    max_steps: int = 0

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def rewards(self) -> list[float]:
        return [s.reward for s in self.steps]

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    @property
    def final_epsilon(self) -> float:
        for s in reversed(self.steps):
            if not math.isnan(s.epsilon):
                return s.epsilon
        return float("-inf")

    @property
    def scored_actions(self) -> list[list]:
        """Actions of the steps that evolved the state (all but an invalid last step)."""
        return [list(s.action) for s in self.steps if not math.isnan(s.epsilon)]

    def to_json(self, include_steps: bool = True) -> str:
        d: dict[str, Any] = {
            "zeta": list(map(float, self.zeta)),
            "phase": self.phase,
            "max_steps": self.max_steps,
            "termination": self.termination,
            "length": len(self.steps),
            "total_reward": self.total_reward,
            "final_epsilon": self.final_epsilon if math.isfinite(self.final_epsilon) else None,
        }
        if include_steps:
            d["steps"] = [{k: _finite_or_none(v) for k, v in asdict(s).items()} for s in self.steps]
        return json.dumps(d, allow_nan=False, default=float)


def _finite_or_none(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def reward_delta_fidelity(f_k: float, f_k_minus_1: float) -> float:
    """Fidelity increment between consecutive steps."""
    return float(f_k - f_k_minus_1)


def shaped_reward(cfg: RewardConfig, eps: float, alpha: float, f_mean: float = 0.0, f_prev: float = 0.0):
    """Reward and termination flag (or None) for one step under ``cfg.mode``."""
    if cfg.mode == "phase1":
        return cfg.f1 * eps, None
    if cfg.mode == "phase2":
        if eps < 0:
            return cfg.penalty, "below_breakeven"
        return cfg.f1 * eps + cfg.f2 * alpha, None
    return cfg.f1 * reward_delta_fidelity(f_mean, f_prev), None


class AQECEnv:
    """Code-discovery environment with carried-over cavity states."""

    def __init__(self, schedule: CurriculumSchedule | None = None, reward: RewardConfig | None = None):
        self.schedule = schedule or CurriculumSchedule()
        self.reward_config = reward or RewardConfig()
        self._rng = np.random.default_rng()
        self.record: EpisodeRecord | None = None
        self._done = True

    # -- episode control -------------------------------------------------

    def reset(self, seed=None, *, max_steps: int | None = None, mode: str | None = None, zeta=None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        if mode is not None:
            self.reward_config = self.reward_config.with_mode(mode)
        if zeta is None:
            zeta = self.schedule.fixed_zeta
        if zeta is None:
            zeta = tuple(float(self._rng.uniform(lo, hi)) for lo, hi in self.schedule.ranges)
        self.zeta = tuple(float(z) for z in zeta)
        self.lambda_coop = lambda_from_zeta(self.zeta)
        self.channels = LossChannelSet.single_double(self.zeta[1])
        default_k = self.schedule.phase1_max_steps if self.reward_config.mode == "phase1" else self.schedule.phase2_max_steps
        self.max_steps = int(max_steps or default_k)
        self.step_count = 0
        self.initial_states = None
        self.states = None
        self.initial_action = np.zeros(ACTION_DIM)
        self.previous_action = np.zeros(ACTION_DIM)
        self.fidelities = np.ones(6)
        self.previous_mean = None
        self._done = False
        self.record = EpisodeRecord(list(self.zeta), phase=self.reward_config.mode, max_steps=self.max_steps)
        return self.observation()

    def observation(self) -> np.ndarray:
        return Observation(
            self.fidelities,
            self.previous_action,
            self.initial_action,
            normalize_zeta(self.zeta, self.schedule.ranges),
        ).vector()

    @property
    def tau(self) -> float:
        return self.step_count * self.schedule.step_tau

    # -- dynamics ------------------------------------------------------------

    def step(self, action):
        if self._done:
            raise AQECError("episode finished; call reset()")
        action = np.asarray(action, dtype=float).reshape(-1)
        if action.shape != (ACTION_DIM,) or not np.all(np.isfinite(action)):
            raise ConfigurationError(f"action must be {ACTION_DIM} finite numbers")
        cfg = self.reward_config
        obs_before = self.observation()
        try:
            ladder = ladder_from_action(np.abs(action[CODE_DIM:]))
            if self.initial_states is None:
                code = codeword_from_action(action[:CODE_DIM])
        except AQECError:
            return self._finish_invalid(obs_before, action)

        if self.initial_states is None:
            self.initial_states = cardinal_states(code).stack()
            self.states = self.initial_states
            self.initial_action = action.copy()
        solver = AnalyticSolver(CODE_DIM, self.channels, ladder, self.lambda_coop)
        self.states = solver.evolve_many(self.states, [self.schedule.step_tau])[0]
        self.step_count += 1
        self.fidelities = np.clip(np.real(np.einsum("bij,bji->b", self.initial_states, self.states)), 0.0, 1.0)
        f_mean = float(np.real(np.einsum("bij,bji->", self.initial_states, self.states)) / 6.0)
        f_be = breakeven_reference(self.tau)
        eps = f_mean - f_be

        if self.step_count == 1:
            alpha = 1.0
        else:
            alpha = cosine_similarity(action, self.previous_action)
            if alpha > cfg.alpha_clip:
                alpha = 1.0

        prev = f_mean if self.previous_mean is None else self.previous_mean
        reward, termination = shaped_reward(cfg, eps, alpha, f_mean, prev)
        self.previous_mean = f_mean
        self.previous_action = action.copy()
        if termination is None and self.step_count >= self.max_steps:
            termination = "horizon"
        self._log(obs_before, action, reward, f_mean, f_be, eps, termination)
        info = {"mean_fidelity": f_mean, "breakeven": f_be, "epsilon": eps, "alpha": alpha,
                "tau": self.tau, "termination": termination}
        return self.observation(), float(reward), termination is not None, info

    def _finish_invalid(self, obs_before, action):
        reward = self.reward_config.penalty
        self._log(obs_before, action, reward, float("nan"), float("nan"), float("nan"), "invalid_action")
        info = {"termination": "invalid_action", "tau": self.tau}
        return self.observation(), float(reward), True, info

    def _log(self, obs, action, reward, f_mean, f_be, eps, termination):
        self.record.steps.append(
            StepRecord(obs.tolist(), action.tolist(), float(reward), f_mean, f_be, eps, self.tau)
        )
        if termination is not None:
            self.record.termination = termination
            self._done = True
