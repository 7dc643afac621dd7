"""Manual-backprop networks: finite-difference gradient checks, optimizers, serialization."""
import numpy as np
import pytest

from kfrl.core import rng_stream
from kfrl.nets import (
    MLP,
    Adam,
    Critic,
    Policy,
    SGDMomentum,
    load_tensors,
    policy_from_tensors,
    policy_tensors,
    polyak_update,
    save_tensors,
)


def numeric_grad(f, arr, eps=1e-6):
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + eps
        fp = f()
        arr[idx] = orig - eps
        fm = f()
        arr[idx] = orig
        g[idx] = (fp - fm) / (2 * eps)
    return g


def rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


class TestMLPGradients:
    def test_param_gradients_match_finite_differences(self):
        rng = rng_stream(0, "gradcheck")
        net = MLP([5, 8, 8, 3], rng)
        x = rng.normal(size=(4, 5))
        dy = rng.normal(size=(4, 3))

        def loss():
            y, _ = net.forward(x)
            return float(np.sum(dy * y))

        y, acts = net.forward(x)
        dws, dbs, dx = net.backward(acts, dy)
        for i in range(net.n_layers):
            assert rel_err(dws[i], numeric_grad(loss, net.weights[i])) <= 1e-4
            assert rel_err(dbs[i], numeric_grad(loss, net.biases[i])) <= 1e-4
        assert rel_err(dx, numeric_grad(loss, x)) <= 1e-4

    def test_policy_gradients_match_finite_differences(self):
        rng = rng_stream(1, "gradcheck")
        low = np.array([-1.0, -1.0, -1.0, -1.0])
        high = -low
        pol = Policy(6, 8, low, high, rng)
        s = rng.normal(size=(3, 6))
        da = rng.normal(size=(3, 4))

        def loss():
            a, _ = pol.forward(s)
            return float(np.sum(da * a))

        a, cache = pol.forward(s)
        dws, dbs, _ = pol.backward(cache, da)
        for i in range(pol.net.n_layers):
            assert rel_err(dws[i], numeric_grad(loss, pol.net.weights[i])) <= 1e-4
            assert rel_err(dbs[i], numeric_grad(loss, pol.net.biases[i])) <= 1e-4

    def test_critic_gradients_match_finite_differences(self):
        rng = rng_stream(2, "gradcheck")
        cr = Critic(6, 4, 8, rng)
        s = rng.normal(size=(3, 6))
        a = rng.normal(size=(3, 4))
        dq = rng.normal(size=3)

        def loss():
            return float(np.sum(dq * cr.value(s, a)))

        q, acts = cr.forward(s, a)
        dws, dbs, da = cr.backward(acts, dq)
        for i in range(cr.net.n_layers):
            assert rel_err(dws[i], numeric_grad(loss, cr.net.weights[i])) <= 1e-4
            assert rel_err(dbs[i], numeric_grad(loss, cr.net.biases[i])) <= 1e-4
        assert rel_err(da, numeric_grad(loss, a)) <= 1e-4


class TestPolicyBounds:
    def test_actions_within_bounds(self):
        rng = rng_stream(3, "bounds")
        low = np.array([-2.0, 0.0])
        high = np.array([2.0, 1.0])
        pol = Policy(4, 8, low, high, rng)
        s = rng.normal(size=(100, 4)) * 10.0
        a, _ = pol.forward(s)
        assert np.all(a >= low) and np.all(a <= high)

    def test_act_single_state_is_1d(self):
        rng = rng_stream(4, "bounds")
        pol = Policy(4, 8, -np.ones(2), np.ones(2), rng)
        a = pol.act(np.zeros(4))
        assert a.shape == (2,)


class TestOptimizers:
    def test_sgd_momentum_accumulates_velocity(self):
        p = [np.array([1.0])]
        opt = SGDMomentum(p, lr=0.1, momentum=0.5)
        opt.step([np.array([1.0])])
        assert p[0][0] == pytest.approx(0.9)
        opt.step([np.array([1.0])])
        # velocity = 0.5*1 + 1 = 1.5 -> 0.9 - 0.15
        assert p[0][0] == pytest.approx(0.75)

    def test_adam_first_step_is_lr_sized(self):
        p = [np.array([0.0, 0.0])]
        opt = Adam(p, lr=0.01)
        opt.step([np.array([3.0, -7.0])])
        # bias-corrected first step moves each coordinate by ~lr against the sign
        np.testing.assert_allclose(p[0], [-0.01, 0.01], rtol=1e-6)

    def test_adam_converges_on_quadratic(self):
        p = [np.array([5.0])]
        opt = Adam(p, lr=0.1)
        for _ in range(500):
            opt.step([2.0 * p[0]])
        assert abs(p[0][0]) < 1e-3

    def test_polyak_blend_and_shape_check(self):
        live = [np.ones((2, 2))]
        target = [np.zeros((2, 2))]
        polyak_update(live, target, 0.25)
        np.testing.assert_allclose(target[0], 0.25)
        with pytest.raises(ValueError, match="shape mismatch"):
            polyak_update([np.ones(3)], [np.ones(4)], 0.1)


class TestSerialization:
    def test_tensor_file_round_trip(self, tmp_path):
        rng = rng_stream(5, "io")
        tensors = {
            "a": rng.normal(size=(3, 4)),
            "b": rng.normal(size=7),
            "scalar": np.array(2.5),
        }
        p = tmp_path / "t.bin"
        save_tensors(p, tensors)
        back = load_tensors(p)
        assert set(back) == set(tensors)
        for k in tensors:
            np.testing.assert_array_equal(back[k], tensors[k])
            assert back[k].shape == tensors[k].shape

    def test_tensor_file_byte_identical(self, tmp_path):
        rng = rng_stream(6, "io")
        tensors = {"w": rng.normal(size=(5, 5))}
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_tensors(p1, tensors)
        save_tensors(p2, tensors)
        assert p1.read_bytes() == p2.read_bytes()

    def test_policy_round_trip_same_outputs(self, tmp_path):
        rng = rng_stream(7, "io")
        pol = Policy(6, 8, -np.ones(4), np.ones(4), rng)
        p = tmp_path / "pol.bin"
        save_tensors(p, policy_tensors(pol))
        back = policy_from_tensors(load_tensors(p))
        s = rng.normal(size=(10, 6))
        np.testing.assert_array_equal(back.forward(s)[0], pol.forward(s)[0])
