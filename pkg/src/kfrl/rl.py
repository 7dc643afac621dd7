"""Mixed-buffer actor-critic learner and the online training loop with
scripted or remote human intervention."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import labsim
from .core import RunConfig, Trajectory, VIEWS, rng_stream
from .encoder import EncoderSpec, encode_trajectory, encode_view, spec_for_config
from .nets import Adam, Critic, MLP, Policy, polyak_update, policy_tensors, save_tensors
from .reward import ProgressTracker, make_tracker, replay_rewards
from .targetgen import StageTargets, generate_targets

log = logging.getLogger(__name__)

ACTION_LOW = np.array([-labsim.STEP_LIMIT] * 3 + [0.0])
ACTION_HIGH = np.array([labsim.STEP_LIMIT] * 3 + [1.0])

# Networks operate on normalized actions in [-1, 1]^4 so every action
# dimension trains at the same scale; conversion happens at the env boundary.
NORM_LOW = -np.ones(len(ACTION_LOW))
NORM_HIGH = np.ones(len(ACTION_LOW))


def to_normalized(a_phys: np.ndarray) -> np.ndarray:
    return 2.0 * (np.asarray(a_phys) - ACTION_LOW) / (ACTION_HIGH - ACTION_LOW) - 1.0


def to_physical(a_norm: np.ndarray) -> np.ndarray:
    return ACTION_LOW + 0.5 * (np.asarray(a_norm) + 1.0) * (ACTION_HIGH - ACTION_LOW)

REWARD_MODES = ("keyframe_guided", "sparse_terminal")
SPARSE_SUCCESS_REWARD = 10.0


class ReplayBuffer:
    """Flat transition storage; FIFO ring when capacity is finite."""

    def __init__(self, obs_dim: int, act_dim: int, capacity: int | None = None):
        self.capacity = capacity
        size = capacity if capacity else 1024
        self.s = np.zeros((size, obs_dim))
        self.a = np.zeros((size, act_dim))
        self.r = np.zeros(size)
        self.s2 = np.zeros((size, obs_dim))
        self.done = np.zeros(size, dtype=bool)
        self.count = 0       # total insertions
        self.size = 0        # live entries

    def _grow(self):
        for name in ("s", "a", "r", "s2", "done"):
            arr = getattr(self, name)
            new = np.zeros((arr.shape[0] * 2,) + arr.shape[1:], dtype=arr.dtype)
            new[: arr.shape[0]] = arr
            setattr(self, name, new)

    def add(self, s, a, r, s2, done) -> None:
        if self.capacity:
            idx = self.count % self.capacity
        else:
            if self.size >= self.s.shape[0]:
                self._grow()
            idx = self.size
        self.s[idx] = s
        self.a[idx] = a
        self.r[idx] = r
        self.s2[idx] = s2
        self.done[idx] = done
        self.count += 1
        self.size = min(self.count, self.capacity) if self.capacity else self.count

    def sample_idx(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValueError("sampling from empty buffer")
        return rng.integers(0, self.size, size=n)

    def __len__(self) -> int:
        return self.size


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray
    demo_mask: np.ndarray   # True where the row came from the demo buffer


def mixed_batch(demo: ReplayBuffer, online: ReplayBuffer, batch_size: int,
                rng: np.random.Generator) -> Batch:
    """Half demo, half online, uniform with replacement.

    When one buffer is still empty the whole batch comes from the other
    (warm-up behavior).
    """
    if len(demo) == 0 and len(online) == 0:
        raise ValueError("both buffers empty")
    half = batch_size // 2
    if len(online) == 0:
        log.warning("online buffer empty; drawing full batch from demos")
        n_demo, n_online = batch_size, 0
    elif len(demo) == 0:
        log.warning("demo buffer empty; drawing full batch from online")
        n_demo, n_online = 0, batch_size
    else:
        n_demo, n_online = half, batch_size - half
    parts = []
    for buf, n in ((demo, n_demo), (online, n_online)):
        if n == 0:
            continue
        idx = buf.sample_idx(n, rng)
        parts.append((buf.s[idx], buf.a[idx], buf.r[idx], buf.s2[idx], buf.done[idx]))
    s, a, r, s2, done = (np.concatenate(cols) for cols in zip(*parts))
    mask = np.zeros(batch_size, dtype=bool)
    mask[:n_demo] = True
    return Batch(s, a, r, s2, done, mask)


@dataclass
class Learner:
    policy: Policy
    target_policy: Policy
    critics: list[Critic]
    target_critics: list[Critic]
    policy_opt: Adam
    critic_opts: list[Adam]
    cfg: RunConfig

    @classmethod
    def build(cls, obs_dim: int, cfg: RunConfig) -> "Learner":
        rng = rng_stream(cfg.seed, "nets")
        act_dim = len(ACTION_LOW)
        policy = Policy(obs_dim, cfg.hidden_width, NORM_LOW, NORM_HIGH, rng)
        target_policy = Policy(obs_dim, cfg.hidden_width, NORM_LOW, NORM_HIGH, rng)
        target_policy.net.copy_from(policy.net)
        critics = [Critic(obs_dim, act_dim, cfg.hidden_width, rng) for _ in range(2)]
        targets = [Critic(obs_dim, act_dim, cfg.hidden_width, rng) for _ in range(2)]
        for t, c in zip(targets, critics):
            t.net.copy_from(c.net)
        return cls(
            policy=policy,
            target_policy=target_policy,
            critics=critics,
            target_critics=targets,
            policy_opt=Adam(policy.net.params(), cfg.actor_lr),
            critic_opts=[Adam(c.net.params(), cfg.critic_lr) for c in critics],
            cfg=cfg,
        )


def sample_action(policy: Policy, s: np.ndarray, sigma: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Policy action plus Gaussian exploration noise, clipped to bounds."""
    a = policy.act(s)
    if sigma > 0:
        a = a + rng.normal(0.0, sigma, size=a.shape)
    return np.clip(a, policy.low, policy.high)


def bellman_targets(learner: Learner, batch: Batch, gamma: float) -> np.ndarray:
    # the slow-moving policy picks the bootstrap action so value targets
    # don't chase the live actor's latest oscillation
    a2 = learner.target_policy.act(batch.s2)
    q1 = learner.target_critics[0].value(batch.s2, a2)
    q2 = learner.target_critics[1].value(batch.s2, a2)
    return batch.r + gamma * (1.0 - batch.done.astype(float)) * np.minimum(q1, q2)


def critic_update(learner: Learner, batch: Batch, gamma: float) -> float:
    y = bellman_targets(learner, batch, gamma)
    n = len(y)
    losses = []
    for critic, opt in zip(learner.critics, learner.critic_opts):
        q, acts = critic.forward(batch.s, batch.a)
        err = q - y
        losses.append(float(np.mean(err ** 2)))
        dws, dbs, _ = critic.backward(acts, 2.0 * err / n)
        opt.step(dws + dbs)
    loss = float(np.mean(losses))
    if not np.isfinite(loss):
        raise FloatingPointError(f"critic loss diverged: {losses}")
    return loss


def actor_loss_grads(learner: Learner, batch: Batch, bc_weight: float, q_weight: float):
    """Actor loss (total, bc, q components) and parameter gradients.

    BC is squared error against demo-tagged actions only; the Q term
    maximizes the critic value over the whole batch.
    """
    policy = learner.policy
    a_pi, cache = policy.forward(batch.s)
    n = len(batch.s)
    da = np.zeros_like(a_pi)

    demo = batch.demo_mask
    n_demo = int(demo.sum())
    if n_demo > 0:
        diff = a_pi[demo] - batch.a[demo]
        bc = float(np.mean(np.sum(diff ** 2, axis=1)))
        da[demo] += bc_weight * 2.0 * diff / n_demo
    else:
        bc = 0.0

    if learner.cfg.q_loss_use_min:
        q_a, acts_a = learner.critics[0].forward(batch.s, a_pi)
        q_b, acts_b = learner.critics[1].forward(batch.s, a_pi)
        use_a = q_a <= q_b
        q_val = np.where(use_a, q_a, q_b)
        _, _, da_a = learner.critics[0].backward(acts_a, -q_weight * use_a.astype(float) / n)
        _, _, da_b = learner.critics[1].backward(acts_b, -q_weight * (~use_a).astype(float) / n)
        da += da_a + da_b
    else:
        q_val, acts = learner.critics[0].forward(batch.s, a_pi)
        _, _, da_q = learner.critics[0].backward(acts, np.full(n, -q_weight / n))
        da += da_q
    q_loss = -float(np.mean(q_val))

    dws, dbs, _ = policy.backward(cache, da)
    total = bc_weight * bc + q_weight * q_loss
    return (total, bc, q_loss), dws + dbs


def actor_update(learner: Learner, batch: Batch, bc_weight: float, q_weight: float):
    (total, bc, q_loss), grads = actor_loss_grads(learner, batch, bc_weight, q_weight)
    if not np.isfinite(total):
        raise FloatingPointError(f"actor loss diverged: bc={bc} q={q_loss}")
    learner.policy_opt.step(grads)
    return total, bc, q_loss


# ---------------------------------------------------------------------------
# Training loop

@dataclass
class EpisodeStat:
    episode: int
    end_step: int
    episode_return: float
    success: bool
    intervention_rate: float
    m_final: int


@dataclass
class TrainingReport:
    task_id: str
    seed: int
    reward_mode: str
    total_steps: int
    episodes: list[EpisodeStat]
    eval_success: float

    def curve_lines(self) -> list[str]:
        lines = ["step\tepisode\tepisode_return\tsuccess\tintervention_rate\tm_final"]
        for e in self.episodes:
            lines.append(
                f"{e.end_step}\t{e.episode}\t{e.episode_return:.6f}\t{int(e.success)}"
                f"\t{e.intervention_rate:.6f}\t{e.m_final}"
            )
        return lines


def build_obs(latents: dict[str, np.ndarray], proprio: np.ndarray) -> np.ndarray:
    return np.concatenate([latents["front"], latents["wrist"], proprio])


def demo_transitions(traj: Trajectory, targets: StageTargets, cfg: RunConfig,
                     reward_mode: str) -> list[tuple]:
    """Unroll a demonstration into (s, a, r, s2, done) tuples under the given
    reward mode."""
    if reward_mode == "keyframe_guided":
        rewards, _ = replay_rewards(traj, targets, cfg)
        rewards = rewards[1:]   # reward for arriving at frame t+1
    else:
        rewards = np.full(len(traj) - 1, cfg.step_penalty)
        if traj.success:
            rewards[-1] += SPARSE_SUCCESS_REWARD
    out = []
    for i in range(len(traj) - 1):
        s = build_obs(traj.steps[i].latents, traj.steps[i].proprio)
        s2 = build_obs(traj.steps[i + 1].latents, traj.steps[i + 1].proprio)
        done = i == len(traj) - 2
        out.append((s, to_normalized(traj.steps[i].action), float(rewards[i]), s2, done))
    return out


def prepare_targets(cfg: RunConfig, enc: EncoderSpec) -> StageTargets:
    """Stage targets from one held-out successful demonstration."""
    ref_seed = int(rng_stream(cfg.seed, "targets_demo").integers(2 ** 31))
    demo = labsim.collect_demos(cfg.task_id, 1, ref_seed, cfg.expert_noise)[0]
    demo = encode_trajectory(enc, demo)
    return generate_targets(demo, cfg, rng_stream(cfg.seed, "targetgen"))


def evaluate_policy(policy: Policy, cfg: RunConfig, enc: EncoderSpec,
                    n_episodes: int = 20) -> float:
    """Success fraction of the deterministic policy, no noise, no interventions."""
    spec = labsim.make_task(cfg.task_id)
    rng = rng_stream(cfg.seed, "eval")
    successes = 0
    for _ in range(n_episodes):
        env = labsim.LabEnv(spec, int(rng.integers(2 ** 31)))
        state, views = env.reset()
        done = False
        success = False
        while not done:
            latents = {v: encode_view(enc, v, views[v]) for v in VIEWS}
            obs = build_obs(latents, env.proprio())
            state, views, done, success = env.step(to_physical(policy.act(obs)))
        successes += int(success)
    return successes / n_episodes


class TrainControl:
    """Cooperative control surface shared with the ops service."""

    def __init__(self):
        self.paused = False
        self.stop = False
        self._mark_success = False
        self._abort_episode = False

    def request_mark_success(self):
        self._mark_success = True

    def request_abort(self):
        self._abort_episode = True

    def consume_episode_override(self) -> str | None:
        if self._mark_success:
            self._mark_success = False
            return "success"
        if self._abort_episode:
            self._abort_episode = False
            return "abort"
        return None


def run_training(cfg: RunConfig, reward_mode: str, total_steps: int,
                 intervention_source=None, telemetry=None,
                 control: TrainControl | None = None,
                 n_eval: int = 20) -> tuple[TrainingReport, Learner]:
    """Online policy evolution: episode loop with intervention routing,
    progress-tracked rewards, and one critic + actor update per step.

    ``intervention_source`` needs a ``poll(env) -> action | None`` method;
    ``None`` installs the scripted oracle. ``telemetry`` is an optional
    callable receiving one frame dict per environment step.
    """
    import time

    if reward_mode not in REWARD_MODES:
        raise ValueError(f"reward_mode must be one of {REWARD_MODES}")
    spec = labsim.make_task(cfg.task_id)
    enc = spec_for_config(cfg, labsim.VIEW_DIMS)
    targets = prepare_targets(cfg, enc)

    obs_dim = 2 * cfg.latent_dim + labsim.PROPRIO_DIM
    learner = Learner.build(obs_dim, cfg)
    demo_buf = ReplayBuffer(obs_dim, labsim.ACTION_DIM)
    online_buf = ReplayBuffer(obs_dim, labsim.ACTION_DIM, cfg.online_capacity)

    demo_seed = int(rng_stream(cfg.seed, "demo_seed").integers(2 ** 31))
    for traj in labsim.collect_demos(cfg.task_id, cfg.n_demos, demo_seed, cfg.expert_noise):
        traj = encode_trajectory(enc, traj)
        for s, a, r, s2, done in demo_transitions(traj, targets, cfg, reward_mode):
            demo_buf.add(s, a, r, s2, done)

    noise_rng = rng_stream(cfg.seed, "explore")
    batch_rng = rng_stream(cfg.seed, "batches")
    episode_rng = rng_stream(cfg.seed, "episodes")

    episodes: list[EpisodeStat] = []
    step_count = 0
    episode_idx = 0
    rolling_success: list[bool] = []
    rolling_intervention: list[float] = []

    while step_count < total_steps and not (control and control.stop):
        env = labsim.LabEnv(spec, int(episode_rng.integers(2 ** 31)))
        state, views = env.reset()
        tracker = make_tracker(targets, cfg)
        oracle = intervention_source
        if oracle is None:
            oracle = labsim.ScriptedIntervenor(
                cfg.takeover_dist, cfg.stall_steps, cfg.hold_steps)
        if hasattr(oracle, "reset_episode"):
            oracle.reset_episode()

        ep_return = 0.0
        ep_interventions = 0
        ep_steps = 0
        done = False
        success = False
        while not done and step_count < total_steps:
            if control is not None:
                while control.paused and not control.stop:
                    time.sleep(0.02)
                if control.stop:
                    break
                override = control.consume_episode_override()
                if override == "success":
                    success, done = True, True
                    break
                if override == "abort":
                    success, done = False, True
                    break

            latents = {v: encode_view(enc, v, views[v]) for v in VIEWS}
            obs = build_obs(latents, env.proprio())
            expert_action = oracle.poll(env) if oracle is not None else None
            intervened = expert_action is not None
            if intervened:
                action = to_normalized(np.asarray(expert_action, dtype=float))
            else:
                frac = step_count / max(total_steps, 1)
                sigma = cfg.noise_std + (cfg.noise_std_final - cfg.noise_std) * frac
                action = sample_action(learner.policy, obs, sigma, noise_rng)

            state, views, done, success = env.step(to_physical(action))
            latents2 = {v: encode_view(enc, v, views[v]) for v in VIEWS}
            obs2 = build_obs(latents2, env.proprio())

            sim_now = tracker.similarity(latents2) if not tracker.complete else 1.0
            if not tracker.complete:
                guided_r, _ = tracker.step(latents2)
            else:
                guided_r = cfg.step_penalty
            if reward_mode == "keyframe_guided":
                r = guided_r
            else:
                r = cfg.step_penalty + (SPARSE_SUCCESS_REWARD if success else 0.0)

            if intervened:
                demo_buf.add(obs, action, r, obs2, done)
                ep_interventions += 1
            else:
                online_buf.add(obs, action, r, obs2, done)

            step_count += 1
            ep_steps += 1
            ep_return += r

            if step_count > cfg.warmup_steps and len(online_buf) > 0:
                batch = mixed_batch(demo_buf, online_buf, cfg.batch_size, batch_rng)
                critic_update(learner, batch, cfg.discount)
                for critic, tgt in zip(learner.critics, learner.target_critics):
                    polyak_update(critic.net.params(), tgt.net.params(), cfg.polyak_tau)
                actor_update(learner, batch, cfg.bc_weight, cfg.q_weight)
                polyak_update(learner.policy.net.params(),
                              learner.target_policy.net.params(), cfg.polyak_tau)

            if telemetry is not None:
                telemetry({
                    "step": step_count,
                    "episode": episode_idx,
                    "ee_pos": state.ee_pos.tolist(),
                    "object_pos": state.object_pos.tolist(),
                    "gripper": state.gripper,
                    "held": state.held,
                    "stage_gt": state.stage_gt,
                    "stages": [
                        {"name": sd.name, "center": sd.center.tolist(), "radius": sd.radius}
                        for sd in env.stages
                    ],
                    "progress": tracker.stage,
                    "similarity": sim_now,
                    "reward": r,
                    "demo_buffer": len(demo_buf),
                    "online_buffer": len(online_buf),
                    "success_rate": float(np.mean(rolling_success[-20:])) if rolling_success else 0.0,
                    "intervention_rate": float(np.mean(rolling_intervention[-20:])) if rolling_intervention else 0.0,
                    "takeover": intervened,
                    "paused": bool(control.paused) if control else False,
                })

        if ep_steps == 0 and not done:
            break
        rolling_success.append(success)
        irate = ep_interventions / max(ep_steps, 1)
        rolling_intervention.append(irate)
        episodes.append(EpisodeStat(
            episode=episode_idx, end_step=step_count, episode_return=ep_return,
            success=success, intervention_rate=irate, m_final=tracker.stage,
        ))
        episode_idx += 1

    eval_success = evaluate_policy(learner.target_policy, cfg, enc, n_eval)
    report = TrainingReport(
        task_id=cfg.task_id, seed=cfg.seed, reward_mode=reward_mode,
        total_steps=step_count, episodes=episodes, eval_success=eval_success,
    )
    return report, learner


def write_report(out_dir: str | Path, report: TrainingReport, learner: Learner | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "curves.tsv").write_text("\n".join(report.curve_lines()) + "\n")
    summary = {
        "task_id": report.task_id,
        "seed": report.seed,
        "reward_mode": report.reward_mode,
        "total_steps": report.total_steps,
        "episodes": len(report.episodes),
        "eval_success": report.eval_success,
    }
    (out / "report.json").write_text(json.dumps(summary, indent=1) + "\n")
    if learner is not None:
        save_tensors(out / "policy.tensors", policy_tensors(learner.target_policy))
