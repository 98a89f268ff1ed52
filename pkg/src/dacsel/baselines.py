"""Reference policies the subselection results are judged against."""

from __future__ import annotations

from .agent import PpoConfig, train
from .agent.policy import ActorCritic
from .core import CmdpEnv, InstanceSet
from .rng import RngStream


def train_isa(
    env: CmdpEnv,
    test_set: InstanceSet,
    config: PpoConfig,
    rng: RngStream,
) -> dict[int, ActorCritic]:
    """One policy per test instance, each trained with the full step budget.

    These instance-specific agents anchor the upper end of per-instance
    normalization; each is only ever evaluated on its own instance.
    """
    if len(test_set) == 0:
        raise ValueError("test set must be non-empty")
    policies: dict[int, ActorCritic] = {}
    for inst in test_set.instances:
        single = InstanceSet(role="train", instances=(inst,))
        result = train(env, single, config, rng.child(f"inst{inst.id}"))
        policies[inst.id] = result.policy
    return policies
