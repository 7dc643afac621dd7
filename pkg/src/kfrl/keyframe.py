"""Keyframe extraction: composite features, temporal smoothing, latent kinematics,
turning-point mining, and fixed-budget selection."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import RunConfig, Trajectory, VIEWS


@dataclass
class FeatureSeq:
    rows: np.ndarray          # T x 2D, front half then weighted wrist half
    smoothed: bool = False


@dataclass
class KinematicsSeq:
    v: np.ndarray             # per-frame latent speed, v[0] = 0
    a: np.ndarray             # first difference of v, a[0] = 0


@dataclass
class KeyframeSet:
    candidates: list[int]
    selected: list[int]
    scores: dict[int, float]
    latents: list[dict[str, np.ndarray]] | None = None


def composite_features(traj: Trajectory, wrist_weight: float) -> FeatureSeq:
    rows = []
    for i, step in enumerate(traj.steps):
        if step.latents is None or any(v not in step.latents for v in VIEWS):
            raise ValueError(f"step {i}: latents missing; encode the trajectory first")
        rows.append(np.concatenate([step.latents["front"], wrist_weight * step.latents["wrist"]]))
    return FeatureSeq(rows=np.asarray(rows, dtype=float), smoothed=False)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps, truncated at ceil(4*sigma) each side."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(np.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def smooth(fs: FeatureSeq, sigma: float) -> FeatureSeq:
    """Columnwise temporal Gaussian smoothing with reflect padding; length preserved."""
    if fs.smoothed:
        raise ValueError("sequence already smoothed")
    kernel = gaussian_kernel(sigma)
    radius = (len(kernel) - 1) // 2
    rows = fs.rows
    # reflect padding mirrors without repeating the edge sample
    pad = min(radius, rows.shape[0] - 1)
    padded = np.pad(rows, ((radius, radius), (0, 0)), mode="reflect") if pad == radius else None
    if padded is None:
        # short sequences: reflect in chunks until long enough
        padded = rows
        while padded.shape[0] < rows.shape[0] + 2 * radius:
            padded = np.pad(
                padded,
                ((min(radius, padded.shape[0] - 1),) * 2, (0, 0)),
                mode="reflect",
            )
        mid = padded.shape[0] // 2
        lo = mid - (rows.shape[0] + 2 * radius) // 2
        padded = padded[lo:lo + rows.shape[0] + 2 * radius]
    out = np.empty_like(rows)
    for j in range(rows.shape[1]):
        out[:, j] = np.convolve(padded[:, j], kernel, mode="valid")
    return FeatureSeq(rows=out, smoothed=True)


def latent_kinematics(fs: FeatureSeq) -> KinematicsSeq:
    if not fs.smoothed:
        raise ValueError("kinematics requires a smoothed feature sequence")
    diffs = np.linalg.norm(np.diff(fs.rows, axis=0), axis=1)
    v = np.concatenate([[0.0], diffs])
    a = np.concatenate([[0.0], np.diff(v)])
    return KinematicsSeq(v=v, a=a)


def _peak_indices(x: np.ndarray, prominence_frac: float) -> set[int]:
    """Strict interior local maxima above min(x) + frac * range(x)."""
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return set()
    floor = lo + prominence_frac * (hi - lo)
    # float jitter on a flat plateau must not register as a rise
    tol = 1e-9 * (hi - lo)
    interior = np.arange(1, len(x) - 1)
    mask = (x[interior] > x[interior - 1] + tol) & (x[interior] >= x[interior + 1] - tol) & (x[interior] > floor)
    return set(int(i) for i in interior[mask])


def mine_turning_points(kin: KinematicsSeq, prominence_frac: float = 0.1) -> list[int]:
    """Candidate frames: union of peaks in speed and in |acceleration|."""
    if len(kin.v) < 3:
        raise ValueError("need at least 3 frames to mine turning points")
    if not (0.0 <= prominence_frac <= 1.0):
        raise ValueError("prominence_frac must lie in [0, 1]")
    peaks = _peak_indices(kin.v, prominence_frac) | _peak_indices(np.abs(kin.a), prominence_frac)
    return sorted(peaks)


def transition_scores(candidates: list[int], kin: KinematicsSeq) -> dict[int, float]:
    return {k: float(max(kin.v[k], abs(kin.a[k]))) for k in candidates}


def select_keyframes(candidates: list[int], kin: KinematicsSeq, budget: int,
                     sep_min: int = 3) -> KeyframeSet:
    """Greedy pick by descending score, suppressing near-duplicate frames.

    Ties break toward the smaller frame index. Fewer than ``budget`` picks is
    a legal outcome when candidates run out.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    scores = transition_scores(candidates, kin)
    order = sorted(candidates, key=lambda k: (-scores[k], k))
    picked: list[int] = []
    for k in order:
        if len(picked) >= budget:
            break
        if any(abs(k - p) < sep_min for p in picked):
            continue
        picked.append(k)
    return KeyframeSet(candidates=sorted(candidates), selected=sorted(picked), scores=scores)


def keyframe_latents(traj: Trajectory, selected: list[int]) -> list[dict[str, np.ndarray]]:
    out = []
    for k in selected:
        if not (0 <= k < len(traj)):
            raise IndexError(f"keyframe index {k} out of range for T={len(traj)}")
        step = traj.steps[k]
        if step.latents is None:
            raise ValueError(f"step {k} has no latents")
        out.append({v: step.latents[v].copy() for v in VIEWS})
    return out


def extract_keyframes(traj: Trajectory, cfg: RunConfig) -> KeyframeSet:
    """Full pipeline: composite -> smooth -> kinematics -> mine -> select -> latents."""
    fs = smooth(composite_features(traj, cfg.wrist_weight), cfg.smooth_sigma)
    kin = latent_kinematics(fs)
    candidates = mine_turning_points(kin, cfg.prominence_frac)
    ks = select_keyframes(candidates, kin, cfg.keyframe_budget, cfg.sep_min)
    ks.latents = keyframe_latents(traj, ks.selected)
    return ks


def keyframes_to_json(ks: KeyframeSet) -> str:
    doc = {
        "candidates": ks.candidates,
        "selected": ks.selected,
        "scores": {str(k): v for k, v in sorted(ks.scores.items())},
        "latents": None
        if ks.latents is None
        else [{v: lat[v].tolist() for v in VIEWS} for lat in ks.latents],
    }
    return json.dumps(doc, indent=1)


def write_keyframes(path: str | Path, ks: KeyframeSet) -> None:
    Path(path).write_text(keyframes_to_json(ks) + "\n")
