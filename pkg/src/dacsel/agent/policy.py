"""Stochastic policy and value function.

The actor and the critic are separate 64-64 tanh networks. Discrete
action spaces get one categorical head per action dimension (independent
factors); continuous spaces get a Gaussian whose sample is squashed into
the action box by a scaled tanh, with the usual change-of-variables
correction on the log-density.

For training, the pre-squash sample (continuous) or the chosen indices
(discrete) are kept as the "raw" action so log-probabilities can be
re-evaluated under updated parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ActionSpace
from .nets import Adam, Mlp

HIDDEN = (64, 64)
_LOG_2PI = np.log(2.0 * np.pi)


def squash(u: np.ndarray, low: float, high: float) -> np.ndarray:
    """Smooth bounded map of the real line into (low, high)."""
    return low + (high - low) * 0.5 * (np.tanh(u) + 1.0)


def log_squash_jacobian(u: np.ndarray, low: float, high: float) -> np.ndarray:
    # log((high-low)/2 * (1 - tanh^2 u)) in an overflow-safe form
    return np.log((high - low) / 2.0) + 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass
class ActStep:
    action: np.ndarray
    raw: np.ndarray
    log_prob: float
    value: float


class ActorCritic:
    """Parametric policy plus value function for one environment family."""

    def __init__(self, state_dim: int, action_space: ActionSpace, rng: np.random.Generator):
        self.state_dim = state_dim
        self.action_space = action_space
        if action_space.kind == "discrete":
            n_out = sum(action_space.cardinalities)
            self.log_std = None
        else:
            n_out = 1
            self.log_std = np.zeros(1)
        self.actor = Mlp([state_dim, *HIDDEN, n_out], rng, out_gain=0.01)
        self.critic = Mlp([state_dim, *HIDDEN, 1], rng, out_gain=1.0)
        self._head_slices = self._build_head_slices()

    def _build_head_slices(self) -> list[slice]:
        if self.action_space.kind != "discrete":
            return []
        slices, start = [], 0
        for k in self.action_space.cardinalities:
            slices.append(slice(start, start + k))
            start += k
        return slices

    # ------------------------------------------------------------------ params

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (w, b) in enumerate(zip(self.actor.weights, self.actor.biases)):
            out.append((f"actor/w{i}", w))
            out.append((f"actor/b{i}", b))
        if self.log_std is not None:
            out.append(("log_std", self.log_std))
        for i, (w, b) in enumerate(zip(self.critic.weights, self.critic.biases)):
            out.append((f"critic/w{i}", w))
            out.append((f"critic/b{i}", b))
        return out

    def make_optimizer(self, lr: float) -> Adam:
        return Adam(self.parameters(), lr=lr)

    def to_arrays(self) -> tuple[dict[str, np.ndarray], dict]:
        meta = {
            "state_dim": self.state_dim,
            "kind": self.action_space.kind,
            "cardinalities": list(self.action_space.cardinalities),
            "low": self.action_space.low,
            "high": self.action_space.high,
        }
        return {name: arr.copy() for name, arr in self.parameters()}, meta

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], meta: dict) -> "ActorCritic":
        space = ActionSpace(
            kind=meta["kind"],
            cardinalities=tuple(meta["cardinalities"]),
            low=meta["low"],
            high=meta["high"],
        )
        policy = cls(meta["state_dim"], space, np.random.default_rng(0))
        for name, arr in policy.parameters():
            arr[...] = arrays[name]
        return policy

    # ------------------------------------------------------------------ acting

    def act_full(self, state: np.ndarray, rng: np.random.Generator, mode: str = "sample") -> ActStep:
        state = np.asarray(state, dtype=np.float64)
        if state.shape != (self.state_dim,):
            raise ValueError(f"expected state of shape ({self.state_dim},), got {state.shape}")
        value = float(self.critic.forward(state[None, :])[0][0, 0])
        out = self.actor.forward(state[None, :])[0][0]

        if self.action_space.kind == "discrete":
            indices = np.zeros(len(self._head_slices), dtype=np.int64)
            log_prob = 0.0
            for d, sl in enumerate(self._head_slices):
                logp = _log_softmax(out[sl])
                if mode == "sample":
                    cdf = np.cumsum(np.exp(logp))
                    indices[d] = int(np.searchsorted(cdf, rng.random(), side="right"))
                    indices[d] = min(indices[d], len(cdf) - 1)
                else:
                    indices[d] = int(np.argmax(out[sl]))
                log_prob += float(logp[indices[d]])
            return ActStep(indices.astype(np.float64), indices, log_prob, value)

        mean = out
        std = np.exp(self.log_std)
        u = mean + std * rng.standard_normal(1) if mode == "sample" else mean.copy()
        action = squash(u, self.action_space.low, self.action_space.high)
        log_prob = float(
            np.sum(-0.5 * ((u - mean) / std) ** 2 - self.log_std - 0.5 * _LOG_2PI)
            - np.sum(log_squash_jacobian(u, self.action_space.low, self.action_space.high))
        )
        return ActStep(action, u, log_prob, value)

    def act(self, state: np.ndarray, rng: np.random.Generator, mode: str = "sample"):
        step = self.act_full(state, rng, mode)
        return step.action, step.log_prob, step.value

    # ------------------------------------------------------- batched training

    def evaluate_batch(self, states: np.ndarray, raws: np.ndarray):
        """Log-probs and entropies of stored raw actions under current parameters.

        Returns (log_probs, entropies, cache); the cache feeds
        :meth:`backward_policy`.
        """
        out, actor_cache = self.actor.forward(states)
        if self.action_space.kind == "discrete":
            raws = raws.astype(np.int64)
            log_probs = np.zeros(states.shape[0])
            entropies = np.zeros(states.shape[0])
            head_data = []
            for d, sl in enumerate(self._head_slices):
                logp = _log_softmax(out[:, sl])
                p = np.exp(logp)
                idx = raws[:, d]
                log_probs += logp[np.arange(len(idx)), idx]
                ent = -(p * logp).sum(axis=1)
                entropies += ent
                head_data.append((p, logp, idx, ent))
            return log_probs, entropies, (actor_cache, head_data)

        mean = out
        std = np.exp(self.log_std)
        z = (raws - mean) / std
        log_probs = np.sum(
            -0.5 * z**2 - self.log_std - 0.5 * _LOG_2PI, axis=1
        ) - np.sum(log_squash_jacobian(raws, self.action_space.low, self.action_space.high), axis=1)
        entropies = np.full(states.shape[0], float(np.sum(self.log_std + 0.5 * (_LOG_2PI + 1.0))))
        return log_probs, entropies, (actor_cache, (mean, std, z))

    def backward_policy(self, cache, d_log_prob: np.ndarray, d_entropy: np.ndarray) -> dict[str, np.ndarray]:
        """Accumulate d loss / d actor params given per-sample dL/dlogp and dL/dH."""
        actor_cache, head_cache = cache
        grads: dict[str, np.ndarray] = {}
        if self.action_space.kind == "discrete":
            douts = []
            for p, logp, idx, ent in head_cache:
                onehot = np.zeros_like(p)
                onehot[np.arange(len(idx)), idx] = 1.0
                dlogits = d_log_prob[:, None] * (onehot - p)
                dlogits += d_entropy[:, None] * (-p * (logp + ent[:, None]))
                douts.append(dlogits)
            dout = np.concatenate(douts, axis=1)
        else:
            mean, std, z = head_cache
            dout = d_log_prob[:, None] * z / std
            grads["log_std"] = np.array(
                [np.sum(d_log_prob * (z[:, 0] ** 2 - 1.0) + d_entropy)]
            )
        for i, (dw, db) in enumerate(self.actor.backward(actor_cache, dout)):
            grads[f"actor/w{i}"] = dw
            grads[f"actor/b{i}"] = db
        return grads

    def value_batch(self, states: np.ndarray):
        out, cache = self.critic.forward(states)
        return out[:, 0], cache

    def backward_value(self, cache, d_value: np.ndarray) -> dict[str, np.ndarray]:
        grads = {}
        for i, (dw, db) in enumerate(self.critic.backward(cache, d_value[:, None])):
            grads[f"critic/w{i}"] = dw
            grads[f"critic/b{i}"] = db
        return grads
