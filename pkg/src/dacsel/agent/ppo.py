"""Clipped-surrogate policy gradient training.

The rollout buffer is cut into episode segments for advantage estimation,
so :func:`compute_gae` itself never sees episode boundaries. Updates run
a fixed number of epochs over shuffled minibatches with per-minibatch
advantage normalization.

Reward scaling: episode returns on the step-size benchmark span orders of
magnitude across instances, which stalls learning with a shared value
head. When enabled, rewards are divided by a running estimate of the mean
absolute episode return, refreshed once per update. This is a global
scaler, not a per-instance normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import CmdpEnv, EpisodeTrajectory, InstanceSet
from ..rng import RngStream
from .policy import ActorCritic


@dataclass
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    epochs_per_update: int = 10
    rollout_horizon: int = 256
    minibatch_size: int = 64
    learning_rate: float = 3e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    total_env_steps: int = 10_000
    reward_scaling: bool = False

    def __post_init__(self):
        for name in ("gamma", "gae_lambda", "clip_eps", "epochs_per_update",
                     "rollout_horizon", "minibatch_size", "learning_rate",
                     "value_coef", "entropy_coef", "total_env_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    last_value: float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over one contiguous segment.

    ``last_value`` bootstraps the value after the final step (zero when the
    segment ends the episode).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape or rewards.size < 1:
        raise ValueError("rewards and values must be equal-length, non-empty")
    next_values = np.append(values[1:], last_value)
    deltas = rewards + gamma * next_values - values
    advantages = np.zeros_like(deltas)
    acc = 0.0
    for t in range(len(deltas) - 1, -1, -1):
        acc = deltas[t] + gamma * lam * acc
        advantages[t] = acc
    return advantages, advantages + values


def ppo_surrogate_term(ratio, advantage, eps: float):
    """min(ratio * A, clip(ratio, 1-eps, 1+eps) * A); works elementwise."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    ratio = np.asarray(ratio, dtype=np.float64)
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps)
    return np.minimum(ratio * advantage, clipped * advantage)


@dataclass
class Batch:
    states: np.ndarray
    raws: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray  # already normalized
    returns: np.ndarray


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    std = advantages.std()
    return (advantages - advantages.mean()) / (std + 1e-8)


def ppo_loss(policy: ActorCritic, batch: Batch, cfg: PpoConfig) -> float:
    log_probs, entropies, _ = policy.evaluate_batch(batch.states, batch.raws)
    ratio = np.exp(log_probs - batch.old_log_probs)
    surrogate = ppo_surrogate_term(ratio, batch.advantages, cfg.clip_eps)
    values, _ = policy.value_batch(batch.states)
    return float(
        -surrogate.mean()
        + cfg.value_coef * np.mean((values - batch.returns) ** 2)
        - cfg.entropy_coef * entropies.mean()
    )


def ppo_loss_and_grads(policy: ActorCritic, batch: Batch, cfg: PpoConfig) -> tuple[float, dict[str, np.ndarray]]:
    n = batch.states.shape[0]
    log_probs, entropies, cache = policy.evaluate_batch(batch.states, batch.raws)
    ratio = np.exp(log_probs - batch.old_log_probs)
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
    surr_unclipped = ratio * batch.advantages
    surr = np.minimum(surr_unclipped, clipped * batch.advantages)

    # the min picks the unclipped branch wherever it is <= the clipped one;
    # only that branch carries gradient through the ratio
    unclipped_active = surr_unclipped <= clipped * batch.advantages
    d_log_prob = -(batch.advantages * ratio * unclipped_active) / n
    d_entropy = np.full(n, -cfg.entropy_coef / n)
    grads = policy.backward_policy(cache, d_log_prob, d_entropy)

    values, value_cache = policy.value_batch(batch.states)
    value_err = values - batch.returns
    grads.update(policy.backward_value(value_cache, cfg.value_coef * 2.0 * value_err / n))

    loss = float(
        -surr.mean() + cfg.value_coef * np.mean(value_err**2) - cfg.entropy_coef * entropies.mean()
    )
    return loss, grads


@dataclass
class TrainResult:
    policy: ActorCritic
    log: list[tuple[int, int, float]] = field(default_factory=list)  # (update, steps, mean_return)


class _RewardScaler:
    """Running mean of |episode return|, refreshed once per update."""

    def __init__(self, decay: float = 0.9):
        self.decay = decay
        self.scale: float | None = None

    def update(self, episode_returns: list[float]) -> None:
        if not episode_returns:
            return
        batch_mean = float(np.mean(np.abs(episode_returns)))
        self.scale = batch_mean if self.scale is None else self.decay * self.scale + (1 - self.decay) * batch_mean

    def apply(self, rewards: np.ndarray) -> np.ndarray:
        if self.scale is None or self.scale < 1e-12:
            return rewards
        return rewards / self.scale


def train(env: CmdpEnv, instance_set: InstanceSet, config: PpoConfig, rng: RngStream) -> TrainResult:
    """Train on an instance set for exactly ``total_env_steps`` steps.

    Each episode's instance is drawn uniformly from the set; all
    stochasticity comes from streams derived from ``rng``, so two calls
    with the same arguments produce bit-identical parameters.
    """
    if len(instance_set) == 0:
        raise ValueError("instance set must be non-empty")

    init_rng = rng.child("init")
    instance_rng = rng.child("instances").rng
    env_seed_rng = rng.child("env")
    policy_rng = rng.child("policy").rng
    shuffle_rng = rng.child("shuffle").rng

    policy = ActorCritic(env.state_dim, env.action_space, init_rng.rng)
    optimizer = policy.make_optimizer(config.learning_rate)
    scaler = _RewardScaler() if config.reward_scaling else None

    instances = instance_set.instances
    raw_dim = len(env.action_space.cardinalities) if env.action_space.kind == "discrete" else 1

    state = None
    done = True
    steps_done = 0
    update_idx = 0
    episode_reward_acc = 0.0
    log: list[tuple[int, int, float]] = []

    while steps_done < config.total_env_steps:
        horizon = min(config.rollout_horizon, config.total_env_steps - steps_done)
        states = np.zeros((horizon, env.state_dim))
        raws = np.zeros((horizon, raw_dim))
        log_probs = np.zeros(horizon)
        values = np.zeros(horizon)
        rewards = np.zeros(horizon)
        dones = np.zeros(horizon, dtype=bool)
        completed_returns: list[float] = []

        for t in range(horizon):
            if done:
                inst = instances[int(instance_rng.integers(len(instances)))]
                state = env.reset(inst, env_seed_rng.seed_int())
                done = False
                episode_reward_acc = 0.0
            step = policy.act_full(state, policy_rng, mode="sample")
            next_state, reward, done = env.step(step.action)
            states[t] = state
            raws[t] = step.raw
            log_probs[t] = step.log_prob
            values[t] = step.value
            rewards[t] = reward
            dones[t] = done
            episode_reward_acc += reward
            state = next_state
            if done:
                completed_returns.append(episode_reward_acc)
        steps_done += horizon

        if scaler is not None:
            scaler.update(completed_returns)
            train_rewards = scaler.apply(rewards)
        else:
            train_rewards = rewards

        advantages = np.zeros(horizon)
        returns = np.zeros(horizon)
        start = 0
        for t in range(horizon):
            if dones[t] or t == horizon - 1:
                seg = slice(start, t + 1)
                if dones[t]:
                    last_value = 0.0
                else:
                    last_value = float(policy.value_batch(state[None, :])[0][0])
                advantages[seg], returns[seg] = compute_gae(
                    train_rewards[seg], values[seg], last_value, config.gamma, config.gae_lambda
                )
                start = t + 1

        for _ in range(config.epochs_per_update):
            order = shuffle_rng.permutation(horizon)
            for begin in range(0, horizon, config.minibatch_size):
                idx = order[begin : begin + config.minibatch_size]
                batch = Batch(
                    states=states[idx],
                    raws=raws[idx],
                    old_log_probs=log_probs[idx],
                    advantages=normalize_advantages(advantages[idx]),
                    returns=returns[idx],
                )
                _, grads = ppo_loss_and_grads(policy, batch, config)
                optimizer.step(grads)

        update_idx += 1
        mean_return = float(np.mean(completed_returns)) if completed_returns else float("nan")
        log.append((update_idx, steps_done, mean_return))

    return TrainResult(policy=policy, log=log)


def evaluate_rollouts(
    policy: ActorCritic,
    env: CmdpEnv,
    instance_set: InstanceSet,
    rng: RngStream,
    episodes_per_instance: int = 10,
) -> tuple[list[EpisodeTrajectory], dict[int, float]]:
    """Stochastic evaluation: ``episodes_per_instance`` sampled episodes per instance.

    Sampling streams are derived per instance, so results do not depend on
    the order instances are visited; trajectories come back sorted by
    (instance id, episode index).
    """
    trajectories: list[EpisodeTrajectory] = []
    mean_returns: dict[int, float] = {}
    for inst in sorted(instance_set.instances, key=lambda i: i.id):
        inst_rng = rng.child(f"inst{inst.id}")
        sample_rng = inst_rng.child("policy").rng
        seed_rng = inst_rng.child("env")
        returns = []
        for episode in range(episodes_per_instance):
            state = env.reset(inst, seed_rng.seed_int())
            actions: list[np.ndarray] = []
            rewards: list[float] = []
            done = False
            while not done:
                action, _, _ = policy.act(state, sample_rng, mode="sample")
                state, reward, done = env.step(action)
                actions.append(np.asarray(action, dtype=np.float64))
                rewards.append(float(reward))
            trajectories.append(
                EpisodeTrajectory(
                    instance_id=inst.id, episode_index=episode, actions=actions, rewards=rewards
                )
            )
            returns.append(sum(rewards))
        mean_returns[inst.id] = float(np.mean(returns))
    return trajectories, mean_returns
