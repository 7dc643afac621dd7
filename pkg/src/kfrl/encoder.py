"""Per-view observation encoders: seeded affine projection, passthrough, file-backed."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import VIEWS, Trajectory, rng_stream, with_latents

KINDS = ("seeded_projection", "passthrough", "file_latents")


@dataclass(frozen=True)
class EncoderSpec:
    kind: str
    seed: int
    input_dims: tuple[tuple[str, int], ...]  # ((view, dim), ...) so the spec stays hashable
    latent_dim: int
    latents_path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"encoder kind must be one of {KINDS}")

    def input_dim(self, view: str) -> int:
        return dict(self.input_dims)[view]


def make_spec(kind: str, seed: int, input_dims: dict[str, int], latent_dim: int,
              latents_path: str | None = None) -> EncoderSpec:
    return EncoderSpec(kind, seed, tuple(sorted(input_dims.items())), latent_dim, latents_path)


_weight_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def projection_weights(seed: int, view: str, input_dim: int, latent_dim: int):
    """(W, b) for one view, a pure function of the arguments.

    Entries are i.i.d. uniform on [-1/sqrt(input_dim), +1/sqrt(input_dim)]
    drawn from a counter-based stream keyed by (seed, view).
    """
    key = (seed, view, input_dim, latent_dim)
    if key not in _weight_cache:
        rng = rng_stream(seed, "encoder", view)
        bound = 1.0 / np.sqrt(input_dim)
        w = rng.uniform(-bound, bound, size=(latent_dim, input_dim))
        b = rng.uniform(-bound, bound, size=latent_dim)
        _weight_cache[key] = (w, b)
    return _weight_cache[key]


def encode_view(spec: EncoderSpec, view: str, raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    want = spec.input_dim(view)
    if raw.shape != (want,):
        raise ValueError(f"view {view}: raw dim {raw.shape} != expected ({want},)")
    if spec.kind == "passthrough":
        if want != spec.latent_dim:
            raise ValueError("passthrough requires input_dim == latent_dim")
        return raw.copy()
    if spec.kind == "seeded_projection":
        w, b = projection_weights(spec.seed, view, want, spec.latent_dim)
        return np.tanh(w @ raw + b)
    raise ValueError("file_latents kind has no per-view encode; use encode_trajectory")


def _read_latent_file(path: str, latent_dim: int) -> list[dict[str, np.ndarray]]:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            lat = {}
            for v in VIEWS:
                vec = np.asarray(rec[v], dtype=float)
                if vec.shape != (latent_dim,):
                    raise ValueError(f"latent file line {lineno}: view {v} dim {vec.shape}")
                lat[v] = vec
            out.append(lat)
    return out


def encode_trajectory(spec: EncoderSpec, traj: Trajectory) -> Trajectory:
    """Fill latents for both views on every step; raw observations untouched.

    Any latents already present are overwritten.
    """
    if spec.kind == "file_latents":
        if spec.latents_path is None:
            raise ValueError("file_latents spec needs latents_path")
        latents = _read_latent_file(spec.latents_path, spec.latent_dim)
        if len(latents) != len(traj):
            raise ValueError(
                f"latent file has {len(latents)} rows, trajectory has {len(traj)} steps"
            )
        return with_latents(traj, latents)
    latents = []
    for i, step in enumerate(traj.steps):
        for v in VIEWS:
            if v not in step.raw_views:
                raise ValueError(f"step {i}: missing raw view {v}")
        latents.append({v: encode_view(spec, v, step.raw_views[v]) for v in VIEWS})
    return with_latents(traj, latents)


def spec_for_config(cfg, input_dims: dict[str, int]) -> EncoderSpec:
    return make_spec("seeded_projection", cfg.seed, input_dims, cfg.latent_dim)
