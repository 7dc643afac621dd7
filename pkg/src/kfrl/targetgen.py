"""Stage-target construction: anchor keyframes plus uniform fill from a reference demo."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import RunConfig, Trajectory, VIEWS, rng_stream
from .keyframe import extract_keyframes


@dataclass
class StageTargets:
    task_id: str
    n_stages: int
    frame_indices: list[int]
    targets: list[dict[str, np.ndarray]]   # one ViewLatents per stage, in order
    source: str = "demo_anchored"          # or "external"

    def __post_init__(self):
        if len(self.targets) != self.n_stages:
            raise ValueError("targets length must equal n_stages")
        if len(self.frame_indices) != self.n_stages:
            raise ValueError("frame_indices length must equal n_stages")
        if any(b <= a for a, b in zip(self.frame_indices, self.frame_indices[1:])):
            raise ValueError("frame_indices must be strictly increasing")


def build_anchor_sequence(selected: list[int], total_frames: int, n_stages: int,
                          rng: np.random.Generator) -> list[int]:
    """Sorted frame index list of length ``n_stages``.

    All selected anchors are kept, the final frame is always included
    (counted against the fill slots when it is not already an anchor), and
    remaining slots are drawn uniformly without replacement from the rest.
    """
    if n_stages > total_frames:
        raise ValueError(f"n_stages={n_stages} exceeds trajectory length {total_frames}")
    anchors = sorted(set(int(k) for k in selected))
    if anchors and (anchors[0] < 0 or anchors[-1] >= total_frames):
        raise ValueError("anchor index out of range")
    if len(anchors) > n_stages:
        raise ValueError(f"{len(anchors)} anchors exceed n_stages={n_stages}")
    chosen = set(anchors)
    final = total_frames - 1
    if final not in chosen:
        if len(chosen) >= n_stages:
            raise ValueError("no slot left to include the final frame")
        chosen.add(final)
    pool = np.array([i for i in range(total_frames) if i not in chosen])
    n_fill = n_stages - len(chosen)
    if n_fill > 0:
        fill = rng.choice(pool, size=n_fill, replace=False)
        chosen.update(int(i) for i in fill)
    return sorted(chosen)


def generate_targets(demo: Trajectory, cfg: RunConfig,
                     rng: np.random.Generator | None = None) -> StageTargets:
    """Stage targets anchored on the demo's extracted keyframes.

    The demo must be a successful episode; latents must already be filled.
    """
    if not demo.success:
        raise ValueError("reference demo must be marked successful")
    if not demo.has_latents:
        raise ValueError("reference demo has no latents; encode it first")
    if rng is None:
        rng = rng_stream(cfg.seed, "targetgen")
    ks = extract_keyframes(demo, cfg)
    anchors = ks.selected[: cfg.n_stages]
    frames = build_anchor_sequence(anchors, len(demo), cfg.n_stages, rng)
    targets = [
        {v: demo.steps[i].latents[v].copy() for v in VIEWS} for i in frames
    ]
    return StageTargets(
        task_id=demo.task_id,
        n_stages=cfg.n_stages,
        frame_indices=frames,
        targets=targets,
        source="demo_anchored",
    )


def write_targets(path: str | Path, st: StageTargets) -> None:
    doc = {
        "task_id": st.task_id,
        "n_stages": st.n_stages,
        "frame_indices": st.frame_indices,
        "source": st.source,
        "targets": [{v: t[v].tolist() for v in VIEWS} for t in st.targets],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_targets(path: str | Path) -> StageTargets:
    doc = json.loads(Path(path).read_text())
    return StageTargets(
        task_id=doc["task_id"],
        n_stages=int(doc["n_stages"]),
        frame_indices=[int(i) for i in doc["frame_indices"]],
        targets=[{v: np.asarray(t[v], dtype=float) for v in VIEWS} for t in doc["targets"]],
        source=doc.get("source", "external"),
    )
