"""Policy-gradient trainer: advantage math, loss surface, training mechanics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dacsel.agent.policy import ActorCritic, log_squash_jacobian, squash
from dacsel.agent.ppo import (
    Batch,
    PpoConfig,
    _RewardScaler,
    compute_gae,
    evaluate_rollouts,
    normalize_advantages,
    ppo_loss_and_grads,
    ppo_surrogate_term,
    train,
)
from dacsel.core import ActionSpace, SigmoidInstance, InstanceSet
from dacsel.envs import SigmoidEnv
from dacsel.envs.sigmoid import oracle_best_episode_reward
from dacsel.rng import derive_rng_stream
from gradcheck import make_policy_and_batch, relative_gradient_errors

FLAT = SigmoidInstance(id=0, shifts=(5.0, 5.0), slopes=(0.0, 0.0))


# ------------------------------------------------------------------ advantages

def test_gae_undiscounted_reward_to_go():
    adv, ret = compute_gae([1.0, 1.0, 1.0], [0.0, 0.0, 0.0], 0.0, gamma=1.0, lam=1.0)
    assert adv.tolist() == [3.0, 2.0, 1.0]
    assert ret.tolist() == [3.0, 2.0, 1.0]


def test_gae_lambda_zero_is_one_step_td():
    rewards = [1.0, 1.0, 1.0]
    values = [0.5, 0.2, 0.1]
    adv, ret = compute_gae(rewards, values, 0.0, gamma=0.9, lam=0.0)
    deltas = [1 + 0.9 * 0.2 - 0.5, 1 + 0.9 * 0.1 - 0.2, 1 + 0.0 - 0.1]
    assert adv == pytest.approx(deltas, abs=1e-12)
    assert ret == pytest.approx((np.array(deltas) + values).tolist(), abs=1e-12)


def test_gae_gamma_zero_ignores_the_future():
    adv, _ = compute_gae([2.0, 3.0], [0.5, 1.0], 99.0, gamma=0.0, lam=0.7)
    assert adv.tolist() == [1.5, 2.0]


def test_gae_bootstraps_through_last_value():
    adv, ret = compute_gae([0.0], [0.0], 10.0, gamma=0.5, lam=0.95)
    assert adv.tolist() == [5.0]
    assert ret.tolist() == [5.0]


def test_gae_input_validation():
    with pytest.raises(ValueError):
        compute_gae([1.0, 2.0], [0.0], 0.0, 0.99, 0.95)
    with pytest.raises(ValueError):
        compute_gae([], [], 0.0, 0.99, 0.95)


# ------------------------------------------------------------------- surrogate

def test_surrogate_hand_values():
    assert ppo_surrogate_term(1.5, 1.0, 0.2) == 1.2
    assert ppo_surrogate_term(0.5, -1.0, 0.2) == -0.8
    assert ppo_surrogate_term(1.0, 3.25, 0.2) == 3.25
    assert ppo_surrogate_term(0.85, 2.0, 0.2) == 1.7  # inside the trust region


def test_surrogate_is_elementwise():
    out = ppo_surrogate_term(np.array([1.5, 0.5]), np.array([1.0, -1.0]), 0.2)
    assert out.tolist() == [1.2, -0.8]


def test_surrogate_rejects_bad_eps():
    with pytest.raises(ValueError):
        ppo_surrogate_term(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        ppo_surrogate_term(1.0, 1.0, -0.2)


@given(
    ratio=st.floats(0.01, 5.0),
    adv=st.floats(-10.0, 10.0),
    eps=st.floats(0.01, 0.5),
)
@settings(max_examples=120, deadline=None)
def test_surrogate_never_exceeds_either_branch(ratio, adv, eps):
    val = float(ppo_surrogate_term(ratio, adv, eps))
    clipped = min(max(ratio, 1 - eps), 1 + eps)
    assert val <= ratio * adv + 1e-12
    assert val <= clipped * adv + 1e-12
    if 1 - eps <= ratio <= 1 + eps:
        assert val == pytest.approx(ratio * adv, rel=1e-12, abs=1e-12)


def test_normalize_advantages_moments():
    a = np.array([1.0, 2.0, 3.0, 10.0])
    out = normalize_advantages(a)
    assert out.mean() == pytest.approx(0.0, abs=1e-12)
    assert out.std() == pytest.approx(1.0, abs=1e-7)
    # equal advantages collapse to zero instead of dividing by zero
    assert normalize_advantages(np.full(5, 3.3)).tolist() == [0.0] * 5


# ---------------------------------------------------------------------- config

def test_config_defaults():
    cfg = PpoConfig()
    assert cfg.gamma == 0.99
    assert cfg.gae_lambda == 0.95
    assert cfg.clip_eps == 0.2
    assert cfg.epochs_per_update == 10
    assert cfg.rollout_horizon == 256
    assert cfg.minibatch_size == 64
    assert cfg.learning_rate == 3e-4
    assert cfg.value_coef == 0.5
    assert cfg.entropy_coef == 0.01
    assert cfg.total_env_steps == 10_000


def test_config_rejects_nonpositive_fields():
    with pytest.raises(ValueError):
        PpoConfig(gamma=0.0)
    with pytest.raises(ValueError):
        PpoConfig(total_env_steps=-5)


# ---------------------------------------------------------------------- policy

def test_sampling_matches_uniform_when_logits_are_flat():
    g = np.random.default_rng(0)
    space = ActionSpace(kind="discrete", cardinalities=(5, 10))
    policy = ActorCritic(7, space, g)
    policy.actor.weights[-1][:] = 0.0
    policy.actor.biases[-1][:] = 0.0
    state = g.normal(size=7)
    draws = np.array([policy.act(state, g)[0] for _ in range(20_000)])
    for d, k in enumerate(space.cardinalities):
        freqs = np.bincount(draws[:, d].astype(int), minlength=k) / 20_000
        sigma = np.sqrt((1 / k) * (1 - 1 / k) / 20_000)
        assert np.all(np.abs(freqs - 1 / k) < 5 * sigma)


def test_mode_returns_the_argmax_action():
    g = np.random.default_rng(1)
    space = ActionSpace(kind="discrete", cardinalities=(5, 10))
    policy = ActorCritic(7, space, g)
    policy.actor.weights[-1][:] = 0.0
    policy.actor.biases[-1][:] = 0.0
    policy.actor.biases[-1][3] = 4.0   # head 0, index 3
    policy.actor.biases[-1][5 + 7] = 4.0  # head 1, index 7
    action, _, _ = policy.act(np.zeros(7), g, mode="mode")
    assert action.tolist() == [3.0, 7.0]


def test_continuous_actions_stay_in_the_box():
    g = np.random.default_rng(2)
    space = ActionSpace(kind="continuous", low=0.0, high=10.0)
    policy = ActorCritic(5, space, g)
    for _ in range(200):
        action, _, _ = policy.act(g.normal(size=5), g)
        assert 0.0 < action[0] < 10.0


def test_squash_bounds_and_jacobian():
    # saturated inputs land exactly on the box edge in float64
    u = np.array([-50.0, -1.0, 0.0, 1.0, 50.0])
    s = squash(u, 0.0, 10.0)
    assert np.all((s >= 0.0) & (s <= 10.0))
    assert np.all((s[1:4] > 0.0) & (s[1:4] < 10.0))
    assert squash(np.zeros(1), 0.0, 10.0)[0] == 5.0
    # log-derivative agrees with a numeric probe away from saturation
    for x in (-1.0, 0.0, 0.7):
        h = 1e-6
        num = (squash(np.array([x + h]), 0, 10) - squash(np.array([x - h]), 0, 10)) / (2 * h)
        assert log_squash_jacobian(np.array([x]), 0, 10)[0] == pytest.approx(
            np.log(num[0]), abs=1e-8
        )


def test_act_log_prob_agrees_with_batch_evaluation():
    for kind in ("discrete", "continuous"):
        policy, batch = make_policy_and_batch(kind, seed=3)
        g = np.random.default_rng(4)
        step = policy.act_full(batch.states[0], g, mode="sample")
        logp, _, _ = policy.evaluate_batch(batch.states[:1], step.raw[None, :].astype(float))
        assert logp[0] == pytest.approx(step.log_prob, abs=1e-10)


def test_entropy_bounds():
    policy, batch = make_policy_and_batch("discrete", seed=5)
    _, ents, _ = policy.evaluate_batch(batch.states, batch.raws)
    assert np.all(ents >= 0.0)
    assert np.all(ents <= np.log(5) + np.log(10) + 1e-12)
    cpolicy, cbatch = make_policy_and_batch("continuous", seed=5)
    _, cents, _ = cpolicy.evaluate_batch(cbatch.states, cbatch.raws)
    expect = float(np.sum(cpolicy.log_std + 0.5 * (np.log(2 * np.pi) + 1.0)))
    assert np.allclose(cents, expect)


def test_policy_array_roundtrip():
    policy, batch = make_policy_and_batch("discrete", seed=6)
    arrays, meta = policy.to_arrays()
    clone = ActorCritic.from_arrays(arrays, meta)
    a1, _, _ = policy.act(batch.states[0], np.random.default_rng(9))
    a2, _, _ = clone.act(batch.states[0], np.random.default_rng(9))
    assert a1.tolist() == a2.tolist()


# -------------------------------------------------------------------- gradient

def test_analytic_gradients_match_finite_differences():
    for kind in ("discrete", "continuous"):
        errors = np.array(relative_gradient_errors(kind, seed=11))
        assert errors.max() <= 1e-4, f"{kind}: worst {errors.max():.2e}"


def test_equal_advantages_zero_the_policy_gradient_branch():
    # with every advantage identical the normalized advantages vanish, so
    # the surrogate contributes nothing and a decisive argmax survives an
    # update step
    policy, batch = make_policy_and_batch("discrete", seed=7)
    policy.actor.biases[-1][2] = 6.0
    policy.actor.biases[-1][5 + 4] = 6.0
    batch = Batch(
        states=batch.states,
        raws=batch.raws,
        old_log_probs=batch.old_log_probs,
        advantages=normalize_advantages(np.full(batch.states.shape[0], 2.5)),
        returns=batch.returns,
    )
    assert np.all(batch.advantages == 0.0)
    cfg = PpoConfig()
    before = [policy.act(s, np.random.default_rng(0), mode="mode")[0] for s in batch.states]
    opt = policy.make_optimizer(cfg.learning_rate)
    _, grads = ppo_loss_and_grads(policy, batch, cfg)
    opt.step(grads)
    after = [policy.act(s, np.random.default_rng(0), mode="mode")[0] for s in batch.states]
    assert [a.tolist() for a in before] == [a.tolist() for a in after]


# -------------------------------------------------------------------- training

def _tiny_set(n=3):
    insts = tuple(
        SigmoidInstance(id=i, shifts=(2.0 + i, 6.0), slopes=(1.0, -1.0)) for i in range(n)
    )
    return InstanceSet("train", insts)


def test_train_consumes_exactly_the_step_budget():
    cfg = PpoConfig(total_env_steps=300)
    result = train(SigmoidEnv(), _tiny_set(), cfg, derive_rng_stream(0, "train/full"))
    updates = [u for u, _, _ in result.log]
    steps = [s for _, s, _ in result.log]
    assert updates == [1, 2]
    assert steps == [256, 300]  # the trailing rollout is truncated, not padded


def test_train_is_deterministic_per_seed():
    cfg = PpoConfig(total_env_steps=300)

    def params():
        res = train(SigmoidEnv(), _tiny_set(), cfg, derive_rng_stream(5, "train/full"))
        return res.policy.to_arrays()[0]

    a, b = params(), params()
    assert sorted(a) == sorted(b)
    for name in a:
        assert np.array_equal(a[name], b[name]), name


def test_train_seeds_differ():
    cfg = PpoConfig(total_env_steps=300)
    a = train(SigmoidEnv(), _tiny_set(), cfg, derive_rng_stream(1, "train/full"))
    b = train(SigmoidEnv(), _tiny_set(), cfg, derive_rng_stream(2, "train/full"))
    arrays_a, arrays_b = a.policy.to_arrays()[0], b.policy.to_arrays()[0]
    assert any(not np.array_equal(arrays_a[k], arrays_b[k]) for k in arrays_a)


def test_train_rejects_empty_instance_set():
    with pytest.raises(ValueError):
        train(SigmoidEnv(), InstanceSet("train", ()), PpoConfig(), derive_rng_stream(0, "t"))


def test_training_approaches_the_oracle_on_one_instance():
    iset = InstanceSet("train", (FLAT,))
    result = train(SigmoidEnv(), iset, PpoConfig(), derive_rng_stream(3, "train/full"))
    _, means = evaluate_rollouts(result.policy, SigmoidEnv(), iset, derive_rng_stream(3, "eval"))
    assert means[0] >= 0.9 * oracle_best_episode_reward(FLAT)


def test_reward_scaler_running_mean():
    s = _RewardScaler(decay=0.9)
    assert s.apply(np.array([4.0])).tolist() == [4.0]  # no scale learned yet
    s.update([2.0, -4.0])
    assert s.scale == 3.0
    s.update([6.0])
    assert s.scale == pytest.approx(0.9 * 3.0 + 0.1 * 6.0)
    assert s.apply(np.array([3.3])).tolist() == [3.3 / s.scale]
    s.update([])  # empty batches leave the estimate alone
    assert s.scale == pytest.approx(0.9 * 3.0 + 0.1 * 6.0)


# ------------------------------------------------------------------ evaluation

def test_evaluate_rollouts_counts_and_order():
    iset = _tiny_set()
    result = train(SigmoidEnv(), iset, PpoConfig(total_env_steps=300),
                   derive_rng_stream(0, "train/full"))
    trajs, means = evaluate_rollouts(result.policy, SigmoidEnv(), iset,
                                     derive_rng_stream(0, "eval"), episodes_per_instance=4)
    assert len(trajs) == 12
    assert [(t.instance_id, t.episode_index) for t in trajs] == [
        (i, e) for i in range(3) for e in range(4)
    ]
    assert set(means) == {0, 1, 2}
    for t in trajs:
        assert t.length == 10
        assert all(0.0 <= r <= 1.0 for r in t.rewards)
    for i in range(3):
        mine = np.mean([t.episode_return for t in trajs if t.instance_id == i])
        assert means[i] == pytest.approx(mine)


def test_evaluate_rollouts_ignores_instance_order():
    iset = _tiny_set()
    reversed_set = InstanceSet("train", tuple(reversed(iset.instances)))
    policy = train(SigmoidEnv(), iset, PpoConfig(total_env_steps=300),
                   derive_rng_stream(0, "train/full")).policy
    _, m1 = evaluate_rollouts(policy, SigmoidEnv(), iset, derive_rng_stream(9, "eval"))
    _, m2 = evaluate_rollouts(policy, SigmoidEnv(), reversed_set, derive_rng_stream(9, "eval"))
    assert m1 == m2
