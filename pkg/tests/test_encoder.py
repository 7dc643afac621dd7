import numpy as np
import pytest

from kfrl.core import make_config
from kfrl.encoder import (
    EncoderSpec, encode_trajectory, encode_view, make_spec,
    projection_weights, spec_for_config,
)
from conftest import synthetic_trajectory

DIMS = {"front": 6, "wrist": 6}


def spec(kind="seeded_projection", latent_dim=8, seed=0, **kw):
    return make_spec(kind, seed, DIMS, latent_dim, **kw)


class TestEncodeView:
    def test_passthrough_zero_is_zero(self):
        s = spec(kind="passthrough", latent_dim=6)
        np.testing.assert_array_equal(encode_view(s, "front", np.zeros(6)), np.zeros(6))

    def test_projection_deterministic(self):
        s = spec()
        raw = np.arange(6.0)
        np.testing.assert_array_equal(encode_view(s, "front", raw),
                                      encode_view(s, "front", raw))

    def test_views_use_distinct_weights(self):
        s = spec()
        raw = np.arange(6.0)
        assert not np.allclose(encode_view(s, "front", raw),
                               encode_view(s, "wrist", raw))

    def test_output_bounded_even_for_huge_inputs(self):
        s = spec()
        z = encode_view(s, "front", 1000.0 * np.ones(6))
        assert np.all(z >= -1.0) and np.all(z <= 1.0)

    def test_weight_cache_returns_same_matrices(self):
        w1, b1 = projection_weights(0, "front", 6, 8)
        w2, b2 = projection_weights(0, "front", 6, 8)
        np.testing.assert_array_equal(w1, w2)
        np.testing.assert_array_equal(b1, b2)

    def test_weight_scale(self):
        w, _ = projection_weights(0, "front", 100, 64)
        bound = 1.0 / np.sqrt(100)
        assert np.all(np.abs(w) <= bound)


class TestEncodeTrajectory:
    def test_all_steps_carry_latents(self):
        traj = synthetic_trajectory(T=50)
        out = encode_trajectory(spec(), traj)
        assert len(out) == 50
        for step in out.steps:
            assert step.latents["front"].shape == (8,)
            assert step.latents["wrist"].shape == (8,)

    def test_existing_latents_overwritten(self):
        traj = synthetic_trajectory(T=10)
        out1 = encode_trajectory(spec(), traj)
        out2 = encode_trajectory(spec(), out1)
        np.testing.assert_array_equal(out1.steps[3].latents["front"],
                                      out2.steps[3].latents["front"])

    def test_file_latents_length_mismatch(self, tmp_path):
        import json
        traj = synthetic_trajectory(T=10)
        p = tmp_path / "latents.jsonl"
        rows = [{"front": [0.0] * 4, "wrist": [0.0] * 4} for _ in range(7)]
        p.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        s = spec(kind="file_latents", latent_dim=4, latents_path=str(p))
        with pytest.raises(ValueError, match="rows"):
            encode_trajectory(s, traj)

    def test_file_latents_round_trip(self, tmp_path):
        import json
        traj = synthetic_trajectory(T=5)
        p = tmp_path / "latents.jsonl"
        rows = [{"front": [float(t)] * 4, "wrist": [float(-t)] * 4} for t in range(5)]
        p.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        s = spec(kind="file_latents", latent_dim=4, latents_path=str(p))
        out = encode_trajectory(s, traj)
        np.testing.assert_array_equal(out.steps[2].latents["front"], [2.0] * 4)


def test_spec_for_config_uses_config_fields():
    cfg = make_config("petri", latent_dim=16, seed=5)
    s = spec_for_config(cfg, DIMS)
    assert s.latent_dim == 16
    assert s.seed == 5
