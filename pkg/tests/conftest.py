import numpy as np
import pytest

from kfrl.core import StepRecord, Trajectory, make_config, rng_stream


def synthetic_trajectory(T: int = 30, latent_dim: int = 4, seed: int = 0,
                         task_id: str = "petri", success: bool = True) -> Trajectory:
    """Small trajectory with random raw views and latents for unit tests."""
    rng = rng_stream(seed, "synthetic")
    steps = []
    for t in range(T):
        steps.append(StepRecord(
            t=t,
            raw_views={"front": rng.normal(size=6), "wrist": rng.normal(size=6)},
            latents={"front": rng.normal(size=latent_dim),
                     "wrist": rng.normal(size=latent_dim)},
            action=rng.normal(size=4),
            proprio=rng.normal(size=4),
            stage_gt=min(t // 10, 2),
        ))
    return Trajectory(task_id=task_id, steps=steps, success=success, seed=seed)


@pytest.fixture
def small_traj():
    return synthetic_trajectory()


@pytest.fixture(scope="session")
def petri_demo():
    from kfrl import labsim
    return labsim.collect_demo("petri", seed=3, noise_scale=0.2)


@pytest.fixture(scope="session")
def encoded_petri_demo(petri_demo):
    from kfrl import labsim
    from kfrl.encoder import encode_trajectory, spec_for_config
    cfg = make_config("petri", seed=3)
    enc = spec_for_config(cfg, labsim.VIEW_DIMS)
    return encode_trajectory(enc, petri_demo)
