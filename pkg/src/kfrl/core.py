"""Shared domain types, run configuration, trajectory files, and seeded RNG streams."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

VIEWS = ("front", "wrist")

# Per-task defaults: view weights and similarity threshold.
TASK_DEFAULTS = {
    "petri": {"view_weights": {"front": 0.5, "wrist": 0.5}, "sim_threshold": 0.7},
    "tube": {"view_weights": {"front": 0.4, "wrist": 0.6}, "sim_threshold": 0.6},
    "liquid": {"view_weights": {"front": 0.3, "wrist": 0.7}, "sim_threshold": 0.6},
    "tip": {"view_weights": {"front": 0.3, "wrist": 0.7}, "sim_threshold": 0.8},
}

TASK_IDS = tuple(TASK_DEFAULTS)


class ConfigError(ValueError):
    """Raised when a config file fails validation; message names the field."""


class TrajectoryFormatError(ValueError):
    """Raised on malformed trajectory files; message carries the line number."""


def rng_stream(seed: int, *names: str) -> np.random.Generator:
    """Independent counter-based generator keyed by (seed, *names).

    Each distinct name tuple gets its own Philox stream, so consumers
    (encoder weights, target fill sampling, exploration noise, ...) never
    perturb each other's draws.
    """
    keys = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for name in names:
        digest = hashlib.blake2s(name.encode("utf-8")).digest()
        keys.append(int.from_bytes(digest[:8], "little"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(keys)))


@dataclass
class StepRecord:
    t: int
    raw_views: dict[str, np.ndarray]
    action: np.ndarray
    proprio: np.ndarray
    latents: dict[str, np.ndarray] | None = None
    stage_gt: int = -1
    intervened: bool = False


@dataclass
class Trajectory:
    task_id: str
    steps: list[StepRecord]
    success: bool
    seed: int

    def __post_init__(self):
        if len(self.steps) < 2:
            raise TrajectoryFormatError(
                f"trajectory must have at least 2 steps, got {len(self.steps)}"
            )
        adim = self.steps[0].action.shape
        pdim = self.steps[0].proprio.shape
        prev_t = -1
        for i, s in enumerate(self.steps):
            if s.t <= prev_t:
                raise TrajectoryFormatError(f"step {i}: t={s.t} not strictly increasing")
            prev_t = s.t
            if s.action.shape != adim or s.proprio.shape != pdim:
                raise TrajectoryFormatError(f"step {i}: action/proprio dims inconsistent")
            for view, raw in s.raw_views.items():
                ref = self.steps[0].raw_views.get(view)
                if ref is None or np.shape(raw) != np.shape(ref):
                    raise TrajectoryFormatError(
                        f"step {i}: view {view!r} dimension inconsistent")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def has_latents(self) -> bool:
        return all(
            s.latents is not None and all(v in s.latents for v in VIEWS)
            for s in self.steps
        )


@dataclass
class RunConfig:
    task_id: str
    latent_dim: int = 32
    wrist_weight: float = 1.5       # weight on the wrist half of the composite feature
    smooth_sigma: float = 2.0       # temporal Gaussian std, frames
    keyframe_budget: int = 6
    n_stages: int = 8
    sim_threshold: float = 0.6
    view_weights: dict[str, float] = field(default_factory=lambda: {"front": 0.5, "wrist": 0.5})
    sep_min: int = 3
    prominence_frac: float = 0.1
    step_penalty: float = -0.05
    geom_ratio: float = 1.3
    reward_budget: float = 10.0
    discount: float = 0.97
    bc_weight: float = 0.5
    q_weight: float = 1.0
    noise_std: float = 0.1
    noise_std_final: float = 0.02
    polyak_tau: float = 0.005
    batch_size: int = 128
    online_capacity: int = 100_000
    hidden_width: int = 64
    n_demos: int = 20
    warmup_steps: int = 1000
    critic_lr: float = 1e-3
    actor_lr: float = 3e-4
    q_loss_use_min: bool = True
    expert_noise: float = 0.2
    takeover_dist: float = 0.15
    stall_steps: int = 80
    hold_steps: int = 15
    milestone_window: int = 2
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.task_id not in TASK_IDS:
            raise ConfigError(f"task_id must be one of {TASK_IDS}, got {self.task_id!r}")
        if self.keyframe_budget < 1:
            raise ConfigError("keyframe_budget must be >= 1")
        if self.keyframe_budget > self.n_stages:
            raise ConfigError("keyframe_budget must not exceed n_stages")
        if not (0.0 < self.sim_threshold <= 1.0):
            raise ConfigError("sim_threshold must lie in (0, 1]")
        if set(self.view_weights) != set(VIEWS):
            raise ConfigError(f"view_weights must cover exactly {VIEWS}")
        if any(w < 0 for w in self.view_weights.values()):
            raise ConfigError("view_weights must be non-negative")
        if abs(sum(self.view_weights.values()) - 1.0) > 1e-9:
            raise ConfigError("view_weights must sum to 1")
        if self.geom_ratio <= 1.0:
            raise ConfigError("geom_ratio (q) must exceed 1")
        if self.reward_budget <= 0:
            raise ConfigError("reward_budget must be positive")
        if not (0.0 < self.discount < 1.0):
            raise ConfigError("discount must lie in (0, 1)")
        if self.smooth_sigma <= 0:
            raise ConfigError("smooth_sigma must be positive")
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")
        if self.batch_size < 2 or self.batch_size % 2 != 0:
            raise ConfigError("batch_size must be even and >= 2")
        return self


def make_config(task_id: str, **overrides) -> RunConfig:
    """Config for a task with the per-task defaults applied first."""
    if task_id not in TASK_DEFAULTS:
        raise ConfigError(f"task_id must be one of {TASK_IDS}, got {task_id!r}")
    fields = dict(TASK_DEFAULTS[task_id])
    fields.update(overrides)
    return RunConfig(task_id=task_id, **fields).validate()


def load_config(path: str | Path, task_id: str | None = None) -> RunConfig:
    """Load a JSON config file.

    The file may be flat key/value pairs, or grouped into sections
    (nested objects) which are flattened; an empty file means all defaults.
    ``task_id`` may come from the file or the argument (argument wins).
    """
    text = Path(path).read_text()
    if not text.strip():
        data = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config parse failure: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    flat: dict = {}
    for key, val in data.items():
        if isinstance(val, dict) and key not in ("view_weights",):
            flat.update(val)
        else:
            flat[key] = val
    if task_id is not None:
        flat["task_id"] = task_id
    tid = flat.pop("task_id", None)
    if tid is None:
        raise ConfigError("task_id missing from config")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(flat) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    try:
        return make_config(tid, **flat)
    except TypeError as e:
        raise ConfigError(str(e)) from e


# ---------------------------------------------------------------------------
# Trajectory file format: one JSON header line, then one JSON line per step.

def _vec(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def _step_to_json(s: StepRecord) -> str:
    rec = {
        "t": int(s.t),
        "raw_views": {v: _vec(s.raw_views[v]) for v in VIEWS},
        "latents": None
        if s.latents is None
        else {v: _vec(s.latents[v]) for v in VIEWS},
        "action": _vec(s.action),
        "proprio": _vec(s.proprio),
        "stage_gt": int(s.stage_gt),
        "intervened": bool(s.intervened),
    }
    return json.dumps(rec, separators=(",", ":"))


def write_trajectory(path: str | Path, traj: Trajectory) -> None:
    first = traj.steps[0]
    dims = {
        "raw_views": {v: len(first.raw_views[v]) for v in VIEWS},
        "action": len(first.action),
        "proprio": len(first.proprio),
        "latent": None if first.latents is None else len(next(iter(first.latents.values()))),
    }
    header = {
        "task_id": traj.task_id,
        "seed": int(traj.seed),
        "success": bool(traj.success),
        "dims": dims,
    }
    with open(path, "w") as f:
        f.write(json.dumps(header, separators=(",", ":")) + "\n")
        for s in traj.steps:
            f.write(_step_to_json(s) + "\n")


def read_trajectory(path: str | Path) -> Trajectory:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise TrajectoryFormatError("empty trajectory file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise TrajectoryFormatError(f"line 1: bad header: {e}") from e
    dims = header.get("dims", {})
    steps = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise TrajectoryFormatError(f"line {lineno}: {e}") from e
        try:
            raw_views = {v: np.asarray(rec["raw_views"][v], dtype=float) for v in VIEWS}
            latents = None
            if rec.get("latents") is not None:
                latents = {v: np.asarray(rec["latents"][v], dtype=float) for v in VIEWS}
            step = StepRecord(
                t=int(rec["t"]),
                raw_views=raw_views,
                latents=latents,
                action=np.asarray(rec["action"], dtype=float),
                proprio=np.asarray(rec["proprio"], dtype=float),
                stage_gt=int(rec.get("stage_gt", -1)),
                intervened=bool(rec.get("intervened", False)),
            )
        except (KeyError, TypeError) as e:
            raise TrajectoryFormatError(f"line {lineno}: missing/invalid field: {e}") from e
        for v in VIEWS:
            want = dims.get("raw_views", {}).get(v)
            if want is not None and len(step.raw_views[v]) != want:
                raise TrajectoryFormatError(
                    f"line {lineno}: view {v} has dim {len(step.raw_views[v])}, header says {want}"
                )
        if dims.get("action") is not None and len(step.action) != dims["action"]:
            raise TrajectoryFormatError(
                f"line {lineno}: action dim {len(step.action)} != header {dims['action']}"
            )
        steps.append(step)
    return Trajectory(
        task_id=header["task_id"],
        steps=steps,
        success=bool(header["success"]),
        seed=int(header["seed"]),
    )


def with_latents(traj: Trajectory, latents: list[dict[str, np.ndarray]]) -> Trajectory:
    """Copy of ``traj`` with per-step latents replaced (raw data untouched)."""
    if len(latents) != len(traj):
        raise ValueError(f"latent list length {len(latents)} != trajectory length {len(traj)}")
    steps = [replace(s, latents=latents[i]) for i, s in enumerate(traj.steps)]
    return Trajectory(traj.task_id, steps, traj.success, traj.seed)
