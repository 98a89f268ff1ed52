"""Shared domain types for the contextual-MDP pipeline.

An *instance* is one task of the contextual MDP: a pair of sigmoid curve
parameters, or a BBOB (function, instance) pair. Instances carry a stable
integer id that every later stage (training, featurization, selection,
reporting) refers to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class UsageError(Exception):
    """Raised when an API is driven outside its contract (e.g. step after done)."""


class RepresentationError(Exception):
    """Raised when trajectories cannot be turned into the requested representation."""


class ReportError(Exception):
    """Raised when evaluation tables are inconsistent (e.g. missing instances)."""


@dataclass(frozen=True)
class SigmoidInstance:
    id: int
    shifts: tuple[float, float]
    slopes: tuple[float, float]


@dataclass(frozen=True)
class CmaesInstance:
    id: int
    function_id: int
    bbob_instance_id: int
    dimension: int = 10

    def __post_init__(self):
        if not 1 <= self.function_id <= 10:
            raise ValueError(f"function_id must be in 1..10, got {self.function_id}")
        if self.dimension < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dimension}")


Instance = SigmoidInstance | CmaesInstance

ROLES = ("train", "test", "selected", "random_subset")


@dataclass(frozen=True)
class InstanceSet:
    """An ordered collection of instances with unique ids and a role tag."""

    role: str
    instances: tuple[Instance, ...]

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        ids = [inst.id for inst in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError("instance ids must be unique within a set")

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    @property
    def ids(self) -> list[int]:
        return [inst.id for inst in self.instances]

    def by_id(self, instance_id: int) -> Instance:
        for inst in self.instances:
            if inst.id == instance_id:
                return inst
        raise KeyError(f"no instance with id {instance_id}")

    def subset(self, ids: Sequence[int], role: str) -> "InstanceSet":
        """Restrict to the given ids, preserving this set's ordering."""
        wanted = set(ids)
        missing = wanted - set(self.ids)
        if missing:
            raise KeyError(f"ids not in set: {sorted(missing)}")
        return InstanceSet(role, tuple(i for i in self.instances if i.id in wanted))

    def is_subset_of(self, parent: "InstanceSet") -> bool:
        return set(self.ids) <= set(parent.ids)


@dataclass
class EpisodeTrajectory:
    """Per-episode rollout record: one action vector and one reward per step."""

    instance_id: int
    episode_index: int
    actions: list[np.ndarray]
    rewards: list[float]

    def __post_init__(self):
        if len(self.actions) != len(self.rewards) or len(self.rewards) < 1:
            raise ValueError("|actions| must equal |rewards| and be >= 1")

    @property
    def length(self) -> int:
        return len(self.rewards)

    @property
    def episode_return(self) -> float:
        return float(sum(self.rewards))


@dataclass(frozen=True)
class ActionSpace:
    """Action space descriptor.

    kind="discrete": ``cardinalities`` holds the number of choices per
    action dimension. kind="continuous": ``low``/``high`` bound a box.
    """

    kind: str
    cardinalities: tuple[int, ...] = ()
    low: float = 0.0
    high: float = 1.0

    @property
    def n_dims(self) -> int:
        return len(self.cardinalities) if self.kind == "discrete" else 1


class CmdpEnv:
    """Contextual-MDP environment interface.

    A single-threaded state machine: ``reset(instance, seed)`` starts an
    episode on one instance, ``step(action)`` advances it. After ``done``
    is returned, ``step`` must not be called again until the next reset.
    """

    action_space: ActionSpace
    state_dim: int
    max_horizon: int
    reward_range: tuple[float, float]

    def reset(self, instance: Instance, seed: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        raise NotImplementedError
