"""White-box sigmoid-tracking benchmark.

The agent approximates two independent logistic curves over a 10-step
episode. Per dimension it picks one of a small number of evenly spaced
values in [0, 1]; the per-step reward is the product over dimensions of
(1 - |curve value - chosen value|), so it lies in [0, 1] and is 1 only
when both curves are matched exactly.

Because the per-step reward depends only on the step index and the action
taken at that step, the best achievable episode reward separates across
steps; :func:`oracle_best_episode_reward` exploits this to give an exact
upper bound for any policy on a given instance.
"""

from __future__ import annotations

import numpy as np

from ..core import ActionSpace, CmdpEnv, InstanceSet, SigmoidInstance, UsageError
from ..rng import RngStream

EPISODE_LENGTH = 10
CARDINALITIES = (5, 10)

SHIFT_RANGE = (0.0, 10.0)
SLOPE_MAG_RANGE = (0.5, 5.0)

# exp() argument clamp; exp(60) ~ 1e26 keeps the logistic safely in (0, 1)
_EXP_CLIP = 60.0


def sigmoid_value(t: float, shift: float, slope: float) -> float:
    """Logistic curve value 1 / (1 + exp(-slope * (t - shift)))."""
    z = np.clip(slope * (t - shift), -_EXP_CLIP, _EXP_CLIP)
    return float(1.0 / (1.0 + np.exp(-z)))


def decoded_action(index: int, cardinality: int) -> float:
    """Map a discrete index onto the evenly spaced grid over [0, 1]."""
    return index / (cardinality - 1)


def _step_reward(t: int, instance: SigmoidInstance, indices: np.ndarray) -> float:
    r = 1.0
    for d in range(2):
        target = sigmoid_value(t, instance.shifts[d], instance.slopes[d])
        r *= 1.0 - abs(target - decoded_action(int(indices[d]), CARDINALITIES[d]))
    return r


class SigmoidEnv(CmdpEnv):
    """10-step episodes; state is [remaining, shift_0, slope_0, shift_1, slope_1, a_0, a_1]."""

    action_space = ActionSpace(kind="discrete", cardinalities=CARDINALITIES)
    state_dim = 7
    max_horizon = EPISODE_LENGTH
    reward_range = (0.0, 1.0)

    def __init__(self):
        self._instance: SigmoidInstance | None = None
        self._t = 0
        self._done = True
        self._last_action = np.zeros(2)

    def reset(self, instance: SigmoidInstance, seed: int = 0) -> np.ndarray:
        self._instance = instance
        self._t = 0
        self._done = False
        self._last_action = np.zeros(2)
        return self._state()

    def _state(self) -> np.ndarray:
        inst = self._instance
        return np.array(
            [
                EPISODE_LENGTH - self._t,
                inst.shifts[0],
                inst.slopes[0],
                inst.shifts[1],
                inst.slopes[1],
                self._last_action[0],
                self._last_action[1],
            ],
            dtype=np.float64,
        )

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        if self._done:
            raise UsageError("step() called after episode end; call reset() first")
        indices = np.asarray(action, dtype=np.float64).round().astype(int)
        for d in range(2):
            if not 0 <= indices[d] < CARDINALITIES[d]:
                raise ValueError(f"action index {indices[d]} out of range for dimension {d}")
        reward = _step_reward(self._t, self._instance, indices)
        self._t += 1
        self._last_action = indices.astype(np.float64)
        self._done = self._t >= EPISODE_LENGTH
        return self._state(), reward, self._done


def sample_sigmoid_instances(n: int, rng: RngStream, role: str = "train") -> InstanceSet:
    """Draw n instances: shifts ~ U[0, 10], |slopes| ~ U[0.5, 5] with random sign."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    g = rng.rng
    instances = []
    for i in range(n):
        shifts = g.uniform(*SHIFT_RANGE, size=2)
        mags = g.uniform(*SLOPE_MAG_RANGE, size=2)
        signs = g.choice([-1.0, 1.0], size=2)
        instances.append(
            SigmoidInstance(
                id=i,
                shifts=(float(shifts[0]), float(shifts[1])),
                slopes=(float(mags[0] * signs[0]), float(mags[1] * signs[1])),
            )
        )
    return InstanceSet(role, tuple(instances))


def oracle_best_episode_reward(instance: SigmoidInstance) -> float:
    """Exact best episode reward over the action grid.

    The per-step reward is separable across steps and across dimensions,
    so the optimum is the sum over steps of the product over dimensions
    of the best per-dimension match.
    """
    total = 0.0
    for t in range(EPISODE_LENGTH):
        step_best = 1.0
        for d in range(2):
            target = sigmoid_value(t, instance.shifts[d], instance.slopes[d])
            grid = np.arange(CARDINALITIES[d]) / (CARDINALITIES[d] - 1)
            step_best *= float(np.max(1.0 - np.abs(target - grid)))
        total += step_best
    return total


def greedy_action_indices(instance: SigmoidInstance, t: int) -> np.ndarray:
    """Per-step argmax action against the known curve (attains the oracle)."""
    out = np.zeros(2)
    for d in range(2):
        target = sigmoid_value(t, instance.shifts[d], instance.slopes[d])
        grid = np.arange(CARDINALITIES[d]) / (CARDINALITIES[d] - 1)
        out[d] = int(np.argmax(1.0 - np.abs(target - grid)))
    return out
