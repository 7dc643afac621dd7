"""Stage-progress reward engine: fused view similarity, geometric payout schedule,
and the per-step progress tracker."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import RunConfig, Trajectory, VIEWS
from .targetgen import StageTargets

log = logging.getLogger(__name__)


@dataclass
class GeometricSchedule:
    n_stages: int
    ratio: float
    budget: float
    r1: float = field(init=False)
    values: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_stages < 1:
            raise ValueError("n_stages must be >= 1")
        if self.ratio <= 1.0:
            raise ValueError("ratio must exceed 1")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        self.r1 = self.budget * (self.ratio - 1.0) / (self.ratio ** self.n_stages - 1.0)
        self.values = self.r1 * self.ratio ** np.arange(self.n_stages)

    def payout(self, stage: int) -> float:
        """Payout for completing stage ``stage`` (1-based)."""
        return float(self.values[stage - 1])


def make_schedule(n_stages: int, ratio: float, budget: float) -> GeometricSchedule:
    return GeometricSchedule(n_stages, ratio, budget)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def fused_similarity(z: dict[str, np.ndarray], target: dict[str, np.ndarray],
                     view_weights: dict[str, float]) -> float:
    """View-weighted sum of per-view cosine similarities.

    A zero-norm latent on either side contributes 0 for that view rather
    than raising, so degenerate encoders cannot crash a rollout.
    """
    return sum(view_weights[v] * cosine(z[v], target[v]) for v in VIEWS)


@dataclass
class ProgressTracker:
    targets: StageTargets
    threshold: float
    view_weights: dict[str, float]
    schedule: GeometricSchedule
    step_penalty: float
    stage: int = 1                        # index of the next unmatched target, 1-based
    _warned_zero_norm: bool = False

    @property
    def complete(self) -> bool:
        return self.stage == self.targets.n_stages + 1

    def similarity(self, z: dict[str, np.ndarray]) -> float:
        if any(np.linalg.norm(z[v]) == 0.0 for v in VIEWS) and not self._warned_zero_norm:
            log.warning("zero-norm latent encountered; its view contributes 0 similarity")
            self._warned_zero_norm = True
        return fused_similarity(z, self.targets.targets[self.stage - 1], self.view_weights)

    def step(self, z: dict[str, np.ndarray]) -> tuple[float, bool]:
        """Reward for the current frame and whether the stage pointer advanced.

        At most one advance per call, even if the frame also matches the
        following target.
        """
        if self.complete:
            raise RuntimeError("tracker stepped after completion")
        s = self.similarity(z)
        if s >= self.threshold:
            reward = self.step_penalty + self.schedule.payout(self.stage)
            self.stage += 1
            return reward, True
        return self.step_penalty, False


def make_tracker(targets: StageTargets, cfg: RunConfig) -> ProgressTracker:
    return ProgressTracker(
        targets=targets,
        threshold=cfg.sim_threshold,
        view_weights=cfg.view_weights,
        schedule=make_schedule(cfg.n_stages, cfg.geom_ratio, cfg.reward_budget),
        step_penalty=cfg.step_penalty,
    )


def replay_rewards(traj: Trajectory, targets: StageTargets, cfg: RunConfig):
    """Step a fresh tracker over every frame; returns (rewards, final stage pointer).

    Frames after completion just pay the step penalty.
    """
    if not traj.has_latents:
        raise ValueError("trajectory has no latents; encode it first")
    tracker = make_tracker(targets, cfg)
    rewards = []
    for step in traj.steps:
        if tracker.complete:
            rewards.append(cfg.step_penalty)
        else:
            r, _ = tracker.step(step.latents)
            rewards.append(r)
    return np.asarray(rewards), tracker.stage
