"""Ablation metrics and experiment drivers: window-matching coverage/recall of
stage boundaries, the uniform-sampling baseline, and report tables."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import labsim
from .core import RunConfig, TASK_IDS, Trajectory, make_config
from .encoder import encode_trajectory, spec_for_config
from .keyframe import extract_keyframes


@dataclass
class MilestoneSet:
    all: list[int]      # frame indices of ground-truth stage boundaries
    core: list[int]     # subset: the task's core event (grasp/pick/aspirate/insert)


def milestones_from_trajectory(traj: Trajectory, core_stage: int) -> MilestoneSet:
    """Stage boundaries are the first frames carrying each new stage_gt value."""
    boundaries = []
    core = []
    prev = traj.steps[0].stage_gt
    for i, step in enumerate(traj.steps[1:], start=1):
        if step.stage_gt > prev:
            boundaries.append(i)
            if step.stage_gt == core_stage + 1:
                core.append(i)
            prev = step.stage_gt
    return MilestoneSet(all=boundaries, core=core)


def uniform_keyframes(total_frames: int, budget: int) -> list[int]:
    """Evenly spaced frame indices, deduplicated preserving order."""
    if budget > total_frames:
        raise ValueError("budget exceeds trajectory length")
    if budget == 1:
        return [0]
    raw = [round(i * (total_frames - 1) / (budget - 1)) for i in range(budget)]
    seen = set()
    out = []
    for r in raw:
        if r not in seen:
            seen.add(r)
            out.append(int(r))
    return out


def _window_fraction(selected: list[int], milestones: list[int], window: int) -> float:
    if window < 0:
        raise ValueError("window must be >= 0")
    if not milestones:
        return 1.0
    hits = sum(1 for m in milestones if any(abs(k - m) <= window for k in selected))
    return hits / len(milestones)


def stepwise_coverage(selected: list[int], milestones: MilestoneSet, window: int) -> float:
    return _window_fraction(selected, milestones.all, window)


def core_recall(selected: list[int], milestones: MilestoneSet, window: int) -> float:
    return _window_fraction(selected, milestones.core, window)


@dataclass
class ExtractionComparison:
    task_id: str
    n_demos: int
    kf_coverage: list[float]
    uni_coverage: list[float]
    kf_recall: list[float]
    uni_recall: list[float]

    @property
    def coverage_win_rate(self) -> float:
        wins = sum(1 for a, b in zip(self.kf_coverage, self.uni_coverage) if a > b)
        return wins / len(self.kf_coverage)

    @property
    def mean_recall_gap(self) -> float:
        return float(np.mean(self.kf_recall) - np.mean(self.uni_recall))


def compare_extraction(task_id: str, n_demos: int, seed: int,
                       cfg: RunConfig | None = None,
                       noise_scale: float = 0.2) -> ExtractionComparison:
    """Paired keyframe-extractor vs. uniform-sampling metrics over scripted demos."""
    if cfg is None:
        cfg = make_config(task_id, seed=seed)
    enc = spec_for_config(cfg, labsim.VIEW_DIMS)
    spec = labsim.make_task(task_id)
    demos = labsim.collect_demos(task_id, n_demos, seed, noise_scale)
    cmp = ExtractionComparison(task_id, n_demos, [], [], [], [])
    w = cfg.milestone_window
    for demo in demos:
        demo = encode_trajectory(enc, demo)
        ms = milestones_from_trajectory(demo, spec.core_stage)
        ks = extract_keyframes(demo, cfg)
        uni = uniform_keyframes(len(demo), cfg.keyframe_budget)
        cmp.kf_coverage.append(stepwise_coverage(ks.selected, ms, w))
        cmp.uni_coverage.append(stepwise_coverage(uni, ms, w))
        cmp.kf_recall.append(core_recall(ks.selected, ms, w))
        cmp.uni_recall.append(core_recall(uni, ms, w))
    return cmp


def keyframe_suite(seeds: list[int], n_demos: int = 50,
                   tasks: tuple[str, ...] = TASK_IDS) -> list[dict]:
    rows = []
    for task in tasks:
        for seed in seeds:
            cmp = compare_extraction(task, n_demos, seed)
            rows.append({
                "task": task,
                "seed": seed,
                "kf_coverage": float(np.mean(cmp.kf_coverage)),
                "uniform_coverage": float(np.mean(cmp.uni_coverage)),
                "kf_core_recall": float(np.mean(cmp.kf_recall)),
                "uniform_core_recall": float(np.mean(cmp.uni_recall)),
                "coverage_win_rate": cmp.coverage_win_rate,
                "core_recall_gap": cmp.mean_recall_gap,
            })
    return rows


def reward_suite(seeds: list[int], task_id: str = "liquid",
                 total_steps: int = 30_000, **cfg_overrides) -> list[dict]:
    """Guided vs. sparse training outcomes; expensive, parallel across seeds is fine."""
    from .rl import run_training

    rows = []
    for mode in ("keyframe_guided", "sparse_terminal"):
        for seed in seeds:
            cfg = make_config(task_id, seed=seed, **cfg_overrides)
            report, _ = run_training(cfg, mode, total_steps)
            n = max(len(report.episodes) // 10, 1)
            first = float(np.mean([e.intervention_rate for e in report.episodes[:n]]))
            last = float(np.mean([e.intervention_rate for e in report.episodes[-n:]]))
            rows.append({
                "task": task_id,
                "seed": seed,
                "reward_mode": mode,
                "eval_success": report.eval_success,
                "episodes": len(report.episodes),
                "intervention_first_tenth": first,
                "intervention_last_tenth": last,
            })
    return rows


def write_table(path: str | Path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    cols = list(rows[0])
    lines = ["\t".join(cols)]
    for row in rows:
        lines.append("\t".join(_fmt(row[c]) for c in cols))
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def run_ablation_suite(suite: str, seeds: list[int], out_dir: str | Path,
                       **kwargs) -> list[dict]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if suite == "keyframe":
        rows = keyframe_suite(seeds, **kwargs)
        write_table(out / "keyframe_vs_uniform.tsv", rows)
    elif suite == "reward":
        rows = reward_suite(seeds, **kwargs)
        write_table(out / "guided_vs_sparse.tsv", rows)
    else:
        raise ValueError("suite must be 'keyframe' or 'reward'")
    (out / "summary.json").write_text(json.dumps(rows, indent=1) + "\n")
    return rows
