"""Minimal dense networks with explicit backprop, float64 throughout.

Training runs entirely in numpy so that runs are bit-reproducible across
processes and the analytic loss gradient can be validated against central
finite differences without float32 noise.
"""

from __future__ import annotations

import numpy as np


def orthogonal_init(rng: np.random.Generator, n_in: int, n_out: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


class Mlp:
    """Fully connected net with tanh hidden layers and a linear output."""

    def __init__(self, sizes: list[int], rng: np.random.Generator, out_gain: float = 1.0):
        self.sizes = list(sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i in range(len(sizes) - 1):
            gain = out_gain if i == len(sizes) - 2 else np.sqrt(2.0)
            self.weights.append(orthogonal_init(rng, sizes[i], sizes[i + 1], gain))
            self.biases.append(np.zeros(sizes[i + 1]))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """x is (batch, in). Returns output and the activation cache."""
        cache = [x]
        h = x
        for i in range(self.n_layers):
            h = h @ self.weights[i] + self.biases[i]
            if i < self.n_layers - 1:
                h = np.tanh(h)
            cache.append(h)
        return h, cache

    def backward(self, cache: list[np.ndarray], dout: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Gradient of a scalar loss wrt parameters, given d loss / d output."""
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * self.n_layers
        delta = dout
        for i in reversed(range(self.n_layers)):
            inp = cache[i]
            grads[i] = (inp.T @ delta, delta.sum(axis=0))
            if i > 0:
                delta = (delta @ self.weights[i].T) * (1.0 - cache[i] ** 2)
        return grads


class Adam:
    """Adam over a flat list of named parameter arrays, updated in place."""

    def __init__(self, params: list[tuple[str, np.ndarray]], lr: float = 3e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p in params}
        self.v = {name: np.zeros_like(p) for name, p in params}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for name, p in self.params:
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
