"""Desk-scale deterministic simulator of four multi-stage lab manipulation tasks,
with two synthetic camera views, a scripted expert, and a scripted intervenor."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import StepRecord, Trajectory, rng_stream

WORKSPACE = 0.5          # positions live in [-WORKSPACE, WORKSPACE]^3
STEP_LIMIT = 0.01        # per-axis end-effector delta clip, meters
GRIP_RATE = 0.5          # max gripper change per frame
GRIP_FEATURE_SCALE = 0.2 # gripper/held weight in the synthetic views
VIEW_SCALE = 10.0        # overall view gain; drives the encoder into its
                         # saturating regime so latent cosine separates states
TABLE_Z = 0.02
HOME = np.array([0.0, 0.0, 0.20])
FRONT_DIM = 8
WRIST_DIM = 6
ACTION_DIM = 4           # dx, dy, dz, gripper command
PROPRIO_DIM = 4          # ee xyz + gripper

VIEW_DIMS = {"front": FRONT_DIM, "wrist": WRIST_DIM}

# Fixed front-view mixing matrix; constant across every run.
_front_rng = rng_stream(0x1AB510, "front_view")
FRONT_PROJ = _front_rng.uniform(-1.0, 1.0, size=(FRONT_DIM, 8))
FRONT_BIAS = _front_rng.uniform(-0.1, 0.1, size=FRONT_DIM)


@dataclass
class StageDef:
    name: str
    center: np.ndarray
    radius: float
    gripper: str            # "open" | "closed" | "any"
    grasp: bool = False     # satisfying this stage picks the object up
    core: bool = False      # core milestone for evaluation
    dwell: int = 2          # consecutive frames the predicate must hold


@dataclass
class TaskSpec:
    task_id: str
    nominal_object: np.ndarray
    init_box: float                 # side of the randomization square, meters
    max_steps: int
    stage_builder: "callable"
    core_stage: int

    def stages_for(self, object_pos: np.ndarray) -> list[StageDef]:
        return self.stage_builder(object_pos)


def _above(p: np.ndarray, dz: float) -> np.ndarray:
    return p + np.array([0.0, 0.0, dz])


def _petri_stages(obj: np.ndarray) -> list[StageDef]:
    place = np.array([-0.30, 0.25, 0.10])
    return [
        StageDef("reach", _above(obj, 0.05), 0.015, "open"),
        StageDef("grasp", obj.copy(), 0.012, "closed", grasp=True, core=True, dwell=3),
        StageDef("lift", np.array([obj[0], obj[1], 0.30]), 0.02, "closed"),
        StageDef("relocate", place, 0.015, "closed"),
    ]


def _tube_stages(obj: np.ndarray) -> list[StageDef]:
    rack = np.array([0.26, -0.28, 0.0])
    return [
        StageDef("approach", _above(obj, 0.05), 0.015, "open"),
        StageDef("pick", obj.copy(), 0.012, "closed", grasp=True, core=True, dwell=3),
        StageDef("align", np.array([rack[0], rack[1], 0.22]), 0.02, "closed"),
        StageDef("insert", np.array([rack[0], rack[1], 0.06]), 0.012, "closed"),
    ]


def _liquid_stages(obj: np.ndarray) -> list[StageDef]:
    dish = np.array([-0.28, 0.20, 0.02])
    mouth = _above(obj, 0.01)
    return [
        StageDef("insert", mouth, 0.010, "open"),
        StageDef("aspirate", mouth, 0.010, "closed", grasp=True, core=True, dwell=5),
        StageDef("lift", np.array([obj[0], obj[1], 0.28]), 0.02, "closed"),
        StageDef("spray", _above(dish, 0.10), 0.012, "open"),
    ]


def _tip_stages(obj: np.ndarray) -> list[StageDef]:
    return [
        StageDef("approach", _above(obj, 0.06), 0.015, "open"),
        StageDef("insert", obj.copy(), 0.008, "closed", grasp=True, core=True, dwell=4),
        StageDef("lift", np.array([obj[0], obj[1], 0.26]), 0.02, "closed"),
    ]


_TASKS = {
    "petri": TaskSpec("petri", np.array([0.18, 0.06, TABLE_Z]), 0.03, 300, _petri_stages, 1),
    "tube": TaskSpec("tube", np.array([0.14, 0.12, TABLE_Z]), 0.03, 300, _tube_stages, 1),
    "liquid": TaskSpec("liquid", np.array([0.20, 0.00, TABLE_Z]), 0.03, 300, _liquid_stages, 1),
    "tip": TaskSpec("tip", np.array([0.30, -0.12, TABLE_Z]), 0.03, 300, _tip_stages, 1),
}


def make_task(task_id: str) -> TaskSpec:
    if task_id not in _TASKS:
        raise ValueError(f"unknown task {task_id!r}")
    return _TASKS[task_id]


@dataclass
class SimState:
    ee_pos: np.ndarray
    gripper: float
    object_pos: np.ndarray
    held: bool
    stage_gt: int
    t: int
    dwell_count: int = 0    # consecutive frames the current stage predicate has held


class LabEnv:
    """One episode instance. Fully deterministic given (task, seed, actions)."""

    def __init__(self, spec: TaskSpec, seed: int):
        self.spec = spec
        self.seed = seed
        self.state: SimState | None = None
        self.stages: list[StageDef] = []

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def reset(self) -> tuple[SimState, dict[str, np.ndarray]]:
        rng = rng_stream(self.seed, "labsim.reset", self.spec.task_id)
        half = self.spec.init_box / 2.0
        offset = rng.uniform(-half, half, size=2)
        obj = self.spec.nominal_object.copy()
        obj[:2] += offset
        self.state = SimState(
            ee_pos=HOME.copy(), gripper=0.0, object_pos=obj,
            held=False, stage_gt=0, t=0,
        )
        self.stages = self.spec.stages_for(obj)
        return self.state, self.render_views()

    def _stage_met(self, stage: StageDef) -> bool:
        st = self.state
        if np.linalg.norm(st.ee_pos - stage.center) > stage.radius:
            return False
        if stage.gripper == "open" and st.gripper >= 0.5:
            return False
        if stage.gripper == "closed" and st.gripper < 0.5:
            return False
        return True

    def step(self, action: np.ndarray):
        """Apply a clipped delta + gripper command; returns (state, views, done, success)."""
        st = self.state
        if st is None:
            raise RuntimeError("step before reset")
        action = np.asarray(action, dtype=float)
        if not np.all(np.isfinite(action)):
            raise ValueError("action must be finite")
        delta = np.clip(action[:3], -STEP_LIMIT, STEP_LIMIT)
        st.ee_pos = np.clip(st.ee_pos + delta, -WORKSPACE, WORKSPACE)
        # gripper actuator is rate-limited toward the command
        cmd = float(np.clip(action[3], 0.0, 1.0))
        st.gripper += float(np.clip(cmd - st.gripper, -GRIP_RATE, GRIP_RATE))
        if st.held:
            st.object_pos = st.ee_pos.copy()
        if st.stage_gt < self.n_stages:
            stage = self.stages[st.stage_gt]
            if self._stage_met(stage):
                st.dwell_count += 1
                if st.dwell_count >= stage.dwell:
                    if stage.grasp:
                        st.held = True
                        st.object_pos = st.ee_pos.copy()
                    st.stage_gt += 1
                    st.dwell_count = 0
            else:
                st.dwell_count = 0
        st.t += 1
        success = st.stage_gt == self.n_stages
        done = success or st.t >= self.spec.max_steps
        return st, self.render_views(), done, success

    def render_views(self) -> dict[str, np.ndarray]:
        st = self.state
        g = GRIP_FEATURE_SCALE * st.gripper
        h = GRIP_FEATURE_SCALE * float(st.held)
        rel = st.object_pos - st.ee_pos
        base = np.concatenate([st.ee_pos, st.object_pos, [g, h]])
        front = FRONT_PROJ @ base + FRONT_BIAS
        stage = self.stages[min(st.stage_gt, self.n_stages - 1)]
        wrist = np.concatenate([
            rel, [g, h, float(np.linalg.norm(st.ee_pos - stage.center))],
        ])
        return {"front": VIEW_SCALE * front, "wrist": VIEW_SCALE * wrist}

    def proprio(self) -> np.ndarray:
        return np.concatenate([self.state.ee_pos, [self.state.gripper]])


_GRIP_TARGET = {"open": 0.0, "closed": 1.0, "any": 0.0}


def scripted_expert(env: LabEnv, noise_scale: float, rng: np.random.Generator) -> np.ndarray:
    """Proportional controller toward the current stage waypoint.

    Additive uniform noise of magnitude noise_scale * STEP_LIMIT on the delta
    models non-expert demonstrations.
    """
    st = env.state
    stage = env.stages[min(st.stage_gt, env.n_stages - 1)]
    delta = np.clip(stage.center - st.ee_pos, -STEP_LIMIT, STEP_LIMIT)
    grip = _GRIP_TARGET[stage.gripper]
    if noise_scale > 0:
        delta = delta + rng.uniform(-noise_scale * STEP_LIMIT, noise_scale * STEP_LIMIT, 3)
    return np.concatenate([delta, [grip]])


class ScriptedIntervenor:
    """Takeover oracle: triggers on waypoint deviation or stage stall, then
    holds control for a fixed window before releasing."""

    def __init__(self, takeover_dist: float = 0.15, stall_steps: int = 80,
                 hold_steps: int = 15, rng: np.random.Generator | None = None):
        self.takeover_dist = takeover_dist
        self.stall_steps = stall_steps
        self.hold_steps = hold_steps
        self.rng = rng
        self._hold_left = 0
        self._last_advance_t = 0
        self._last_stage = 0
        self._best_dist = None

    def poll(self, env: LabEnv) -> np.ndarray | None:
        st = env.state
        if st.stage_gt != self._last_stage:
            self._last_stage = st.stage_gt
            self._last_advance_t = st.t
            self._best_dist = None
        if self._hold_left > 0:
            self._hold_left -= 1
            if self._hold_left == 0:
                self._last_advance_t = st.t   # give the policy a fresh stall window
            return scripted_expert(env, 0.0, self.rng)
        stage = env.stages[min(st.stage_gt, env.n_stages - 1)]
        dist = np.linalg.norm(st.ee_pos - stage.center)
        if self._best_dist is None or dist < self._best_dist:
            self._best_dist = dist
        # Takeover when the arm retreats well past its closest approach to the
        # current waypoint, not merely for being far away at episode start.
        deviated = dist > self._best_dist + self.takeover_dist
        stalled = (st.t - self._last_advance_t) >= self.stall_steps
        if deviated or stalled:
            self._hold_left = self.hold_steps - 1
            return scripted_expert(env, 0.0, self.rng)
        return None


def collect_demo(task_id: str, seed: int, noise_scale: float = 0.2,
                 settle_frames: int = 8) -> Trajectory:
    """Run the scripted expert for one episode and package it as a Trajectory.

    After success the arm holds pose for ``settle_frames`` extra frames, so the
    final stage boundary is an interior frame of the recording.
    """
    spec = make_task(task_id)
    env = LabEnv(spec, seed)
    rng = rng_stream(seed, "labsim.expert", task_id)
    state, views = env.reset()
    steps = []
    done = False
    success = False
    while not done:
        action = scripted_expert(env, noise_scale, rng)
        steps.append(StepRecord(
            t=state.t,
            raw_views={k: v.copy() for k, v in views.items()},
            action=action.copy(),
            proprio=env.proprio(),
            stage_gt=state.stage_gt,
        ))
        state, views, done, success = env.step(action)
    if success:
        hold = np.concatenate([np.zeros(3), [state.gripper]])
        for _ in range(settle_frames):
            steps.append(StepRecord(
                t=state.t,
                raw_views={k: v.copy() for k, v in views.items()},
                action=hold.copy(),
                proprio=env.proprio(),
                stage_gt=state.stage_gt,
            ))
            state, views, _, _ = env.step(hold)
    steps.append(StepRecord(
        t=state.t,
        raw_views={k: v.copy() for k, v in views.items()},
        action=np.zeros(ACTION_DIM),
        proprio=env.proprio(),
        stage_gt=state.stage_gt,
    ))
    return Trajectory(task_id=task_id, steps=steps, success=success, seed=seed)


def collect_demos(task_id: str, n: int, seed: int, noise_scale: float = 0.2,
                  require_success: bool = True, max_tries: int = 400) -> list[Trajectory]:
    """Collect ``n`` demos; by default retries failed episodes on fresh seeds."""
    out = []
    attempt = 0
    while len(out) < n:
        if attempt >= max_tries:
            raise RuntimeError(f"could not collect {n} successful demos in {max_tries} tries")
        traj = collect_demo(task_id, seed * 10_000 + attempt, noise_scale)
        attempt += 1
        if traj.success or not require_success:
            out.append(traj)
    return out
