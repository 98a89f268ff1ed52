"""Trajectory summaries: the 24-entry catalog, representation layout, scaling."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dacsel.core import (
    CmaesInstance,
    EpisodeTrajectory,
    InstanceSet,
    RepresentationError,
    SigmoidInstance,
)
from dacsel.features import (
    FEATURE_NAMES,
    RepresentationSpec,
    autocorrelation,
    build_feature_matrix,
    build_instance_representation,
    instance_feature_names,
    instance_features,
    raw_representation,
    representation_column_names,
    standardize,
    ts_feature_vector,
    ts_representation,
)

IDX = {name: i for i, name in enumerate(FEATURE_NAMES)}


def test_catalog_has_24_unique_names():
    assert len(FEATURE_NAMES) == 24
    assert len(set(FEATURE_NAMES)) == 24
    assert FEATURE_NAMES[0] == "mean"
    assert FEATURE_NAMES[-1] == "spectral_centroid"


def test_constant_series_conventions():
    v = ts_feature_vector([3.0, 3.0, 3.0, 3.0])
    assert v[IDX["mean"]] == 3.0
    assert v[IDX["median"]] == 3.0
    assert v[IDX["min"]] == 3.0
    assert v[IDX["max"]] == 3.0
    assert v[IDX["hist5_mode_prop"]] == 1.0
    kept = {IDX[k] for k in ("mean", "median", "min", "max", "hist5_mode_prop")}
    for i in range(24):
        if i not in kept:
            assert v[i] == 0.0, FEATURE_NAMES[i]


def test_ramp_series():
    v = ts_feature_vector(np.arange(10.0))
    assert abs(v[IDX["linear_slope"]] - 1.0) <= 1e-9
    assert abs(v[IDX["linear_r2"]] - 1.0) <= 1e-9
    assert v[IDX["mean"]] == 4.5
    assert v[IDX["median"]] == 4.5
    assert v[IDX["min"]] == 0.0 and v[IDX["max"]] == 9.0
    assert v[IDX["positive_diff_frac"]] == 1.0
    assert v[IDX["mean_abs_diff"]] == 1.0
    assert v[IDX["std_diff"]] == 0.0
    # the centered ramp changes sign exactly once over 9 transitions
    assert v[IDX["mean_crossing_frac"]] == pytest.approx(1.0 / 9.0)
    # never anticorrelated at any lag: the "first negative" probe hits its sentinel
    assert v[IDX["acf_first_negative"]] == 10.0


def test_alternating_series():
    v = ts_feature_vector(np.array([1.0, -1.0] * 10))
    assert abs(v[IDX["acf_lag1"]] - (-1.0)) <= 1e-9
    assert abs(v[IDX["acf_lag2"]] - 1.0) <= 1e-9
    assert v[IDX["acf_first_below_1e"]] == 1.0
    assert v[IDX["acf_first_negative"]] == 1.0
    assert v[IDX["mean"]] == 0.0
    assert v[IDX["std"]] == 1.0
    assert v[IDX["mean_crossing_frac"]] == 1.0
    assert v[IDX["longest_run_above_frac"]] == 0.05
    assert v[IDX["mean_abs_diff"]] == 2.0
    # the only spectral mass sits at the top frequency
    assert v[IDX["low_freq_power_frac"]] == 0.0
    assert v[IDX["spectral_centroid"]] == pytest.approx(1.0)


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        ts_feature_vector([])


def test_autocorrelation_conventions():
    x = np.arange(8.0)
    assert autocorrelation(x, 1) == pytest.approx(1.0)
    assert autocorrelation(x, 0) == 0.0
    assert autocorrelation(x, 8) == 0.0
    assert autocorrelation(np.array([1.0, 1.0, 1.0, 2.0]), 1) == 0.0  # constant segment


# indices by how they respond to s -> a*s + b with a > 0
_INVARIANT = [
    "acf_lag1", "acf_lag2", "acf_first_below_1e", "acf_first_negative",
    "linear_r2", "mean_crossing_frac", "longest_run_above_frac",
    "longest_run_below_frac", "positive_diff_frac", "hist10_entropy",
    "hist5_mode_prop", "skewness", "excess_kurtosis",
    "low_freq_power_frac", "spectral_centroid",
]
_AFFINE = ["mean", "median", "min", "max"]
_SCALED = ["std", "iqr", "linear_slope", "mean_abs_diff", "std_diff"]


def _edge_safe(x):
    """True when no point sits within rounding range of a histogram bin edge."""
    lo, hi = x.min(), x.max()
    span = hi - lo
    for bins in (5, 10):
        edges = np.linspace(lo, hi, bins + 1)[1:-1]
        if np.min(np.abs(x[:, None] - edges[None, :])) < 1e-9 * span:
            return False
    return True


@given(seed=st.integers(0, 10_000), n=st.integers(8, 40),
       a=st.floats(0.05, 20.0), b=st.floats(-50.0, 50.0))
@settings(max_examples=80, deadline=None)
def test_affine_response_of_catalog(seed, n, a, b):
    x = np.random.default_rng(seed).standard_normal(n)
    assume(_edge_safe(x) and _edge_safe(a * x + b))
    assume(np.min(np.abs(x - x.mean())) > 1e-9)
    # trailing lags hit the constant-segment convention and return exactly 0
    # for both series, so only genuinely computed correlations need margin
    acfs = np.array([autocorrelation(x, k) for k in range(1, n)])
    live = acfs[acfs != 0.0]
    assume(live.size == 0 or np.min(np.abs(live - 1.0 / math.e)) > 1e-9)
    assume(live.size == 0 or np.min(np.abs(live)) > 1e-9)

    v = ts_feature_vector(x)
    w = ts_feature_vector(a * x + b)
    for name in _INVARIANT:
        assert w[IDX[name]] == pytest.approx(v[IDX[name]], rel=1e-6, abs=1e-7), name
    for name in _AFFINE:
        assert w[IDX[name]] == pytest.approx(a * v[IDX[name]] + b, rel=1e-9, abs=1e-9), name
    for name in _SCALED:
        assert w[IDX[name]] == pytest.approx(a * v[IDX[name]], rel=1e-7, abs=1e-9), name


def _sigmoid_traj(inst_id=0, episode_index=0, seed=0, length=10):
    g = np.random.default_rng(seed)
    actions = [np.array([g.integers(0, 5), g.integers(0, 10)], dtype=float) for _ in range(length)]
    rewards = [float(g.uniform(0, 1)) for _ in range(length)]
    return EpisodeTrajectory(inst_id, episode_index, actions, rewards)


def _cmaes_traj(inst_id=0, episode_index=0, seed=0, length=25):
    g = np.random.default_rng(seed)
    actions = [np.array([g.uniform(0, 10)]) for _ in range(length)]
    rewards = [float(-g.uniform(0, 100)) for _ in range(length)]
    return EpisodeTrajectory(inst_id, episode_index, actions, rewards)


def test_raw_dimensions_for_ten_step_two_dim_episodes():
    traj = _sigmoid_traj()
    assert raw_representation(traj, "A").size == 20
    assert raw_representation(traj, "R").size == 10
    assert raw_representation(traj, "RA").size == 30


def test_raw_layout_actions_step_major_rewards_appended():
    actions = [np.array([1.0, 2.0]), np.array([3.0, 4.0])]
    traj = EpisodeTrajectory(0, 0, actions, [0.5, 0.25])
    assert raw_representation(traj, "RA").tolist() == [1.0, 2.0, 3.0, 4.0, 0.5, 0.25]
    assert raw_representation(traj, "R").tolist() == [0.5, 0.25]


def test_ts_dimensions():
    s = _sigmoid_traj()
    assert ts_representation(s, "A").size == 48
    assert ts_representation(s, "R").size == 24
    assert ts_representation(s, "RA").size == 72
    c = _cmaes_traj()
    assert ts_representation(c, "A").size == 24
    assert ts_representation(c, "RA").size == 48


def test_ts_reward_channel_matches_catalog_directly():
    traj = _sigmoid_traj(seed=3)
    got = ts_representation(traj, "R")
    assert got.tolist() == ts_feature_vector(np.array(traj.rewards)).tolist()


def test_instance_feature_layouts():
    sig = SigmoidInstance(id=1, shifts=(2.0, 8.0), slopes=(1.5, -3.0))
    assert instance_features(sig).tolist() == [2.0, 1.5, 8.0, -3.0]
    cma = CmaesInstance(id=1, function_id=4, bbob_instance_id=2)
    f = instance_features(cma)
    assert f.size == 11
    assert f[3] == 1.0 and f.sum() == 1.0 + 2.0
    assert instance_feature_names("sigmoid") == ["i_shift_0", "i_slope_0", "i_shift_1", "i_slope_1"]
    assert len(instance_feature_names("cmaes")) == 11


def test_build_averages_episode_vectors():
    t1 = _sigmoid_traj(seed=1, episode_index=0)
    t2 = _sigmoid_traj(seed=2, episode_index=1)
    spec = RepresentationSpec("R", "raw")
    rep = build_instance_representation([t1, t2], spec, SigmoidInstance(0, (1, 1), (1, 1)))
    expect = (np.array(t1.rewards) + np.array(t2.rewards)) / 2
    assert rep.vector.tolist() == expect.tolist()
    # identical episodes average to the single-episode vector
    rep2 = build_instance_representation([t1, t1], spec, SigmoidInstance(0, (1, 1), (1, 1)))
    assert rep2.vector.tolist() == np.array(t1.rewards).tolist()


def test_build_appends_instance_features():
    traj = _sigmoid_traj()
    inst = SigmoidInstance(0, (2.0, 3.0), (0.5, -0.5))
    rep = build_instance_representation([traj], RepresentationSpec("RA+I", "ts"), inst)
    assert rep.vector.size == 76
    assert rep.vector[-4:].tolist() == [2.0, 0.5, 3.0, -0.5]


def test_build_rejects_empty_and_mismatched_trajectories():
    inst = SigmoidInstance(0, (1, 1), (1, 1))
    spec = RepresentationSpec("R", "ts")
    with pytest.raises(ValueError):
        build_instance_representation([], spec, inst)
    with pytest.raises(ValueError):
        build_instance_representation([_sigmoid_traj(inst_id=9)], spec, inst)


def test_build_rejects_ragged_raw_episodes():
    inst = SigmoidInstance(0, (1, 1), (1, 1))
    short = _sigmoid_traj(length=5)
    long = _sigmoid_traj(length=8, episode_index=1)
    with pytest.raises(RepresentationError, match="instance 0"):
        build_instance_representation([short, long], RepresentationSpec("R", "raw"), inst)
    # the ts summary does not care about episode length
    rep = build_instance_representation([short, long], RepresentationSpec("R", "ts"), inst)
    assert rep.vector.size == 24


def test_build_rejects_non_finite_entries():
    traj = EpisodeTrajectory(0, 0, [np.array([0.0, 0.0])] * 3, [1.0, np.nan, 0.0])
    with pytest.raises(RepresentationError, match="non-finite"):
        build_instance_representation([traj], RepresentationSpec("R", "raw"),
                                      SigmoidInstance(0, (1, 1), (1, 1)))


def test_feature_matrix_row_order_and_missing_instance():
    insts = [SigmoidInstance(i, (float(i), 1.0), (1.0, 1.0)) for i in range(3)]
    iset = InstanceSet("train", tuple(insts))
    trajs = [_sigmoid_traj(inst_id=i, seed=i) for i in range(3)]
    spec = RepresentationSpec("RA+I", "ts")
    m = build_feature_matrix(trajs, iset, spec)
    assert m.shape == (3, 76)
    assert m[1, -4] == 1.0  # row order follows the instance set
    with pytest.raises(RepresentationError, match="instance 2"):
        build_feature_matrix(trajs[:2], iset, spec)


def test_column_names_match_matrix_width():
    for source in ("A", "R", "RA", "A+I", "R+I", "RA+I"):
        for ftype in ("raw", "ts"):
            spec = RepresentationSpec(source, ftype)
            names = representation_column_names(spec, 2, 10, "sigmoid")
            iset = InstanceSet("train", (SigmoidInstance(0, (1, 1), (1, 1)),))
            m = build_feature_matrix([_sigmoid_traj()], iset, spec)
            assert m.shape[1] == len(names)
            assert len(set(names)) == len(names)


def test_column_names_raw_needs_episode_length():
    with pytest.raises(ValueError):
        representation_column_names(RepresentationSpec("R", "raw"), 1, None, "cmaes")


def test_unknown_source_or_type_rejected():
    with pytest.raises(ValueError):
        RepresentationSpec("X", "ts")
    with pytest.raises(ValueError):
        RepresentationSpec("R", "histogram")


def test_standardize_basic():
    out = standardize(np.array([[1.0], [2.0], [3.0]]))
    root = math.sqrt(3.0 / 2.0)
    assert out[:, 0] == pytest.approx([-root, 0.0, root], abs=1e-12)


def test_standardize_zeroes_constant_columns():
    m = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    out = standardize(m)
    assert np.all(out[:, 1] == 0.0)
    assert out[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
    assert out[:, 0].std() == pytest.approx(1.0, abs=1e-12)


def test_standardize_input_checks():
    with pytest.raises(ValueError):
        standardize(np.zeros(5))
    with pytest.raises(ValueError):
        standardize(np.zeros((1, 5)))


@given(seed=st.integers(0, 5000), rows=st.integers(2, 30), cols=st.integers(1, 10))
@settings(max_examples=40, deadline=None)
def test_standardize_output_moments(seed, rows, cols):
    m = np.random.default_rng(seed).normal(5.0, 3.0, size=(rows, cols))
    out = standardize(m)
    assert np.allclose(out.mean(axis=0), 0.0, atol=1e-9)
    assert np.allclose(out.std(axis=0), 1.0, atol=1e-9)
