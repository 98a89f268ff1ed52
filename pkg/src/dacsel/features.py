"""Fixed-length per-instance representations built from rollout trajectories.

Two representation families:

* raw: concatenated action/reward sequences, usable only when every episode
  has the same length;
* ts: a fixed catalog of 24 summary statistics computed per channel (one
  channel per action dimension, one for rewards).

Per-episode vectors are averaged element-wise across an instance's
evaluation episodes; static instance parameters can be appended on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CmaesInstance,
    EpisodeTrajectory,
    Instance,
    InstanceSet,
    RepresentationError,
    SigmoidInstance,
)

SOURCES = ("A", "R", "RA", "A+I", "R+I", "RA+I")
FEATURE_TYPES = ("raw", "ts")

# catalog order is a file-format contract (feature CSV headers)
FEATURE_NAMES = (
    "mean",
    "std",
    "median",
    "iqr",
    "min",
    "max",
    "acf_lag1",
    "acf_lag2",
    "acf_first_below_1e",
    "acf_first_negative",
    "linear_slope",
    "linear_r2",
    "mean_crossing_frac",
    "longest_run_above_frac",
    "longest_run_below_frac",
    "positive_diff_frac",
    "mean_abs_diff",
    "std_diff",
    "hist10_entropy",
    "hist5_mode_prop",
    "skewness",
    "excess_kurtosis",
    "low_freq_power_frac",
    "spectral_centroid",
)


@dataclass(frozen=True)
class RepresentationSpec:
    source: str
    feature_type: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}, expected one of {SOURCES}")
        if self.feature_type not in FEATURE_TYPES:
            raise ValueError(
                f"unknown feature_type {self.feature_type!r}, expected one of {FEATURE_TYPES}"
            )

    @property
    def includes_actions(self) -> bool:
        return self.source.split("+")[0] in ("A", "RA")

    @property
    def includes_rewards(self) -> bool:
        return self.source.split("+")[0] in ("R", "RA")

    @property
    def includes_instance(self) -> bool:
        return self.source.endswith("+I")


@dataclass(frozen=True)
class InstanceRepresentation:
    instance_id: int
    vector: np.ndarray


def autocorrelation(x: np.ndarray, lag: int) -> float:
    """Pearson correlation between x[:-lag] and x[lag:]; 0 when either
    segment is constant or too short."""
    n = x.size
    if lag < 1 or lag >= n:
        return 0.0
    u = x[:-lag]
    v = x[lag:]
    su = u.std()
    sv = v.std()
    if su < 1e-12 or sv < 1e-12:
        return 0.0
    return float(np.mean((u - u.mean()) * (v - v.mean())) / (su * sv))


def _longest_run(mask: np.ndarray) -> int:
    best = 0
    run = 0
    for flag in mask:
        run = run + 1 if flag else 0
        best = max(best, run)
    return best


def ts_feature_vector(series) -> np.ndarray:
    """The 24-entry summary catalog for one numeric series.

    Constant series take documented zero conventions for every spread,
    correlation, trend, entropy, shape, and spectral entry; the 5-bin
    mode proportion is 1 because all mass sits in one bin.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("series must be non-empty")
    n = x.size
    mean = float(x.mean())
    mn = float(x.min())
    mx = float(x.max())
    med = float(np.median(x))
    out = np.zeros(24)
    out[0] = mean
    out[2] = med
    out[4] = mn
    out[5] = mx
    if mx == mn:
        out[19] = 1.0
        return out

    out[1] = float(x.std())
    q25, q75 = np.percentile(x, [25.0, 75.0])
    out[3] = float(q75 - q25)
    out[6] = autocorrelation(x, 1)
    out[7] = autocorrelation(x, 2)

    first_below = n
    first_neg = n
    inv_e = 1.0 / math.e
    for lag in range(1, n):
        r = autocorrelation(x, lag)
        if first_below == n and r < inv_e:
            first_below = lag
        if first_neg == n and r < 0.0:
            first_neg = lag
        if first_below < n and first_neg < n:
            break
    out[8] = float(first_below)
    out[9] = float(first_neg)

    t = np.arange(n, dtype=np.float64)
    t_centered = t - t.mean()
    centered = x - mean
    slope = float(np.dot(t_centered, centered) / np.dot(t_centered, t_centered))
    residual = centered - slope * t_centered
    ss_tot = float(np.dot(centered, centered))
    out[10] = slope
    out[11] = 1.0 - float(np.dot(residual, residual)) / ss_tot

    out[12] = float(np.count_nonzero(centered[:-1] * centered[1:] < 0)) / (n - 1)
    out[13] = _longest_run(x > mean) / n
    out[14] = _longest_run(x < mean) / n

    diffs = np.diff(x)
    out[15] = float(np.count_nonzero(diffs > 0)) / diffs.size
    out[16] = float(np.abs(diffs).mean())
    out[17] = float(diffs.std())

    counts10, _ = np.histogram(x, bins=10)
    p = counts10[counts10 > 0] / n
    out[18] = float(-(p * np.log(p)).sum())
    counts5, _ = np.histogram(x, bins=5)
    out[19] = float(counts5.max()) / n

    m2 = float(np.mean(centered**2))
    out[20] = float(np.mean(centered**3)) / m2**1.5
    out[21] = float(np.mean(centered**4)) / m2**2 - 3.0

    power = np.abs(np.fft.rfft(centered)[1:]) ** 2
    total = float(power.sum())
    if power.size and total > 0.0:
        m = power.size
        cut = math.ceil(m / 5)
        out[22] = float(power[:cut].sum()) / total
        out[23] = float(np.dot(np.arange(1, m + 1), power)) / total / m
    return out


def _action_matrix(traj: EpisodeTrajectory) -> np.ndarray:
    return np.stack([np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in traj.actions])


def raw_representation(traj: EpisodeTrajectory, source: str) -> np.ndarray:
    """Flatten a fixed-length episode: actions step-major, rewards appended."""
    spec = RepresentationSpec(source, "raw")
    parts = []
    if spec.includes_actions:
        parts.append(_action_matrix(traj).ravel())
    if spec.includes_rewards:
        parts.append(np.asarray(traj.rewards, dtype=np.float64))
    return np.concatenate(parts)


def ts_representation(traj: EpisodeTrajectory, source: str) -> np.ndarray:
    spec = RepresentationSpec(source, "ts")
    parts = []
    if spec.includes_actions:
        actions = _action_matrix(traj)
        for d in range(actions.shape[1]):
            parts.append(ts_feature_vector(actions[:, d]))
    if spec.includes_rewards:
        parts.append(ts_feature_vector(np.asarray(traj.rewards, dtype=np.float64)))
    return np.concatenate(parts)


def instance_features(instance: Instance) -> np.ndarray:
    if isinstance(instance, SigmoidInstance):
        return np.array(
            [
                instance.shifts[0],
                instance.slopes[0],
                instance.shifts[1],
                instance.slopes[1],
            ]
        )
    if isinstance(instance, CmaesInstance):
        one_hot = np.zeros(10)
        one_hot[instance.function_id - 1] = 1.0
        return np.append(one_hot, float(instance.bbob_instance_id))
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def instance_feature_names(benchmark: str) -> list[str]:
    if benchmark == "sigmoid":
        return ["i_shift_0", "i_slope_0", "i_shift_1", "i_slope_1"]
    if benchmark == "cmaes":
        return [f"i_fid_{fid}" for fid in range(1, 11)] + ["i_iid"]
    raise ValueError(f"unknown benchmark {benchmark!r}")


def build_instance_representation(
    trajectories: list[EpisodeTrajectory],
    spec: RepresentationSpec,
    instance: Instance,
) -> InstanceRepresentation:
    """Average per-episode vectors, then append instance features if asked."""
    if not trajectories:
        raise ValueError(f"instance {instance.id}: no trajectories")
    for traj in trajectories:
        if traj.instance_id != instance.id:
            raise ValueError(
                f"trajectory for instance {traj.instance_id} passed with instance {instance.id}"
            )
    per_episode = (
        raw_representation if spec.feature_type == "raw" else ts_representation
    )
    vectors = [per_episode(traj, spec.source) for traj in trajectories]
    dims = {v.size for v in vectors}
    if len(dims) > 1:
        raise RepresentationError(
            f"instance {instance.id}: episode vectors have inconsistent dimensions "
            f"{sorted(dims)}; raw representations need fixed-length episodes"
        )
    vector = np.mean(np.stack(vectors), axis=0)
    if spec.includes_instance:
        vector = np.concatenate([vector, instance_features(instance)])
    if not np.all(np.isfinite(vector)):
        raise RepresentationError(f"instance {instance.id}: non-finite representation entries")
    return InstanceRepresentation(instance_id=instance.id, vector=vector)


def build_feature_matrix(
    trajectories: list[EpisodeTrajectory],
    instance_set: InstanceSet,
    spec: RepresentationSpec,
) -> np.ndarray:
    """One row per instance, in instance-set order."""
    grouped: dict[int, list[EpisodeTrajectory]] = {}
    for traj in trajectories:
        grouped.setdefault(traj.instance_id, []).append(traj)
    rows = []
    for inst in instance_set.instances:
        if inst.id not in grouped:
            raise RepresentationError(f"instance {inst.id}: no trajectories in rollout data")
        rows.append(build_instance_representation(grouped[inst.id], spec, inst).vector)
    widths = {r.size for r in rows}
    if len(widths) > 1:
        raise RepresentationError(f"inconsistent representation dimensions across instances: {sorted(widths)}")
    return np.stack(rows)


def representation_column_names(
    spec: RepresentationSpec,
    n_action_dims: int,
    episode_length: int | None,
    benchmark: str,
) -> list[str]:
    """Header names for the feature CSV, matching build_feature_matrix layout."""
    names: list[str] = []
    if spec.feature_type == "raw":
        if episode_length is None:
            raise ValueError("raw representation needs a fixed episode length")
        if spec.includes_actions:
            names += [f"a{t}_d{d}" for t in range(episode_length) for d in range(n_action_dims)]
        if spec.includes_rewards:
            names += [f"r{t}" for t in range(episode_length)]
    else:
        if spec.includes_actions:
            for d in range(n_action_dims):
                names += [f"a{d}_{f}" for f in FEATURE_NAMES]
        if spec.includes_rewards:
            names += [f"r_{f}" for f in FEATURE_NAMES]
    if spec.includes_instance:
        names += instance_feature_names(benchmark)
    return names


def standardize(matrix) -> np.ndarray:
    """Per-column z-score with population std; constant columns become zero."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if m.shape[0] < 2:
        raise ValueError("standardization needs at least 2 rows")
    constant = m.max(axis=0) == m.min(axis=0)
    std = m.std(axis=0)
    std[constant] = 1.0
    out = (m - m.mean(axis=0)) / std
    out[:, constant] = 0.0
    return out
