"""Small fully connected networks with manual backprop, double precision throughout."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class MLP:
    """Feed-forward net with tanh hidden layers and a linear output layer."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        self.sizes = list(sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for n_in, n_out in zip(sizes, sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.biases.append(rng.uniform(-bound, bound, size=n_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Returns (output, cache) where cache holds per-layer activations."""
        h = np.atleast_2d(x)
        acts = [h]
        for i in range(self.n_layers):
            z = h @ self.weights[i] + self.biases[i]
            h = np.tanh(z) if i < self.n_layers - 1 else z
            acts.append(h)
        return h, acts

    def backward(self, acts: list[np.ndarray], dy: np.ndarray):
        """Gradients of sum(dy * output) w.r.t. params and input.

        Returns (dws, dbs, dx).
        """
        dws = [None] * self.n_layers
        dbs = [None] * self.n_layers
        grad = dy
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                grad = grad * (1.0 - acts[i + 1] ** 2)
            dws[i] = acts[i].T @ grad
            dbs[i] = grad.sum(axis=0)
            grad = grad @ self.weights[i].T
        return dws, dbs, grad

    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def copy_from(self, other: "MLP") -> None:
        for dst, src in zip(self.params(), other.params()):
            dst[...] = src


class Policy:
    """State -> bounded action via a tanh squash onto [low, high]."""

    def __init__(self, obs_dim: int, hidden: int, low: np.ndarray, high: np.ndarray,
                 rng: np.random.Generator):
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.net = MLP([obs_dim, hidden, hidden, len(self.low)], rng)

    def forward(self, s: np.ndarray):
        y, acts = self.net.forward(s)
        squash = np.tanh(y)
        a = self.low + 0.5 * (squash + 1.0) * (self.high - self.low)
        return a, (acts, squash)

    def act(self, s: np.ndarray) -> np.ndarray:
        a, _ = self.forward(s)
        return a[0] if np.ndim(s) == 1 else a

    def backward(self, cache, da: np.ndarray):
        acts, squash = cache
        dy = da * 0.5 * (1.0 - squash ** 2) * (self.high - self.low)
        return self.net.backward(acts, dy)


class Critic:
    """(state, action) -> scalar value."""

    def __init__(self, obs_dim: int, act_dim: int, hidden: int, rng: np.random.Generator):
        self.act_dim = act_dim
        self.net = MLP([obs_dim + act_dim, hidden, hidden, 1], rng)

    def forward(self, s: np.ndarray, a: np.ndarray):
        x = np.concatenate([np.atleast_2d(s), np.atleast_2d(a)], axis=1)
        q, acts = self.net.forward(x)
        return q[:, 0], acts

    def value(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        q, _ = self.forward(s, a)
        return q

    def backward(self, acts, dq: np.ndarray):
        dws, dbs, dx = self.net.backward(acts, dq[:, None])
        da = dx[:, -self.act_dim:]
        return dws, dbs, da


class SGDMomentum:
    def __init__(self, params: list[np.ndarray], lr: float, momentum: float = 0.9):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        for p, g, v in zip(self.params, grads, self.velocity):
            v *= self.momentum
            v += g
            p -= self.lr * v


class Adam:
    """Adam with bias correction; per-parameter step normalization keeps the
    imitation and value gradients on comparable scales."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def polyak_update(live: list[np.ndarray], target: list[np.ndarray], tau: float) -> None:
    """target <- (1 - tau) * target + tau * live, elementwise."""
    for lp, tp in zip(live, target):
        if lp.shape != tp.shape:
            raise ValueError(f"shape mismatch {lp.shape} vs {tp.shape}")
        tp *= 1.0 - tau
        tp += tau * lp


# --- flat named-tensor file: one JSON header line, then raw little-endian f64 ---

def save_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        src = np.asarray(tensors[name])
        arr = np.ascontiguousarray(src, dtype="<f8")
        entries.append({"name": name, "shape": list(src.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    header = json.dumps({"tensors": entries}, separators=(",", ":")).encode() + b"\n"
    with open(path, "wb") as f:
        f.write(header)
        for b in blobs:
            f.write(b)


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        header = json.loads(f.readline())
        blob = f.read()
    out = {}
    for e in header["tensors"]:
        shape = tuple(e["shape"])
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=e["offset"])
        out[e["name"]] = arr.reshape(shape).copy()
    return out


def policy_tensors(policy: Policy) -> dict[str, np.ndarray]:
    t = {"low": policy.low, "high": policy.high}
    for i, (w, b) in enumerate(zip(policy.net.weights, policy.net.biases)):
        t[f"w{i}"] = w
        t[f"b{i}"] = b
    return t


def policy_from_tensors(t: dict[str, np.ndarray]) -> Policy:
    n_layers = sum(1 for k in t if k.startswith("w"))
    sizes = [t["w0"].shape[0]] + [t[f"w{i}"].shape[1] for i in range(n_layers)]
    policy = Policy(sizes[0], sizes[1], t["low"], t["high"], np.random.default_rng(0))
    policy.net.sizes = sizes
    policy.net.weights = [t[f"w{i}"].copy() for i in range(n_layers)]
    policy.net.biases = [t[f"b{i}"].copy() for i in range(n_layers)]
    return policy
