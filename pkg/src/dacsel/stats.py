"""Score normalization and bootstrapped aggregate statistics.

Scores live in a flat table of (policy_label, instance_id, seed, value)
rows. Normalization is min-max per instance over every row that touches
the instance, so each policy is judged relative to the best and worst
anything achieved there. Aggregates (mean, median, IQM) come with
percentile bootstrap intervals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import InstanceSet, ReportError
from .rng import RngStream

ScoreRow = tuple[str, int, int, float]

STATISTICS = ("mean", "median", "iqm")


def iqm(values) -> float:
    """Interquartile mean: drop floor(n/4) per tail, average the rest.

    Fewer than 4 values cannot be trimmed symmetrically; plain mean then.
    """
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("iqm of empty values")
    if x.size < 4:
        return float(x.mean())
    cut = x.size // 4
    return float(x[cut : x.size - cut].mean())


def _stat_rows(rows: np.ndarray, stat: str) -> np.ndarray:
    """Row-wise statistic over a (n_boot, n) matrix of samples."""
    n = rows.shape[1]
    if stat == "mean":
        return rows.mean(axis=1)
    if stat == "median":
        return np.median(rows, axis=1)
    if stat == "iqm":
        if n < 4:
            return rows.mean(axis=1)
        cut = n // 4
        ordered = np.sort(rows, axis=1)
        return ordered[:, cut : n - cut].mean(axis=1)
    raise ValueError(f"unknown statistic {stat!r}, expected one of {STATISTICS}")


def bootstrap_statistic(
    values, stat: str, rng: np.random.Generator, n_boot: int = 5000
) -> tuple[float, float, float]:
    """Point estimate plus 95% percentile bootstrap interval."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("bootstrap of empty values")
    point = float(_stat_rows(x[None, :], stat)[0])
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    boots = _stat_rows(x[idx], stat)
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return point, float(lo), float(hi)


def normalize_per_instance(rows: list[ScoreRow]) -> list[ScoreRow]:
    """Min-max per instance over all (policy, seed) rows; flat pools -> 0.5."""
    by_instance: dict[int, list[float]] = {}
    for _, instance_id, _, value in rows:
        by_instance.setdefault(instance_id, []).append(value)
    bounds = {i: (min(v), max(v)) for i, v in by_instance.items()}
    out = []
    for label, instance_id, seed, value in rows:
        lo, hi = bounds[instance_id]
        scaled = 0.5 if hi == lo else (value - lo) / (hi - lo)
        out.append((label, instance_id, seed, scaled))
    return out


def random_subsets(
    train_set: InstanceSet,
    rng: RngStream,
    fraction: float = 0.1,
    k: int = 5,
) -> list[InstanceSet]:
    """k subsets of round(fraction * n) instances, drawn without replacement."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    n = len(train_set)
    size = int(round(fraction * n))
    if size < 1:
        raise ValueError(f"fraction {fraction} of {n} instances rounds to an empty subset")
    subsets = []
    for rep in range(k):
        gen = rng.child(f"rep{rep}").rng
        picked = gen.choice(n, size=size, replace=False)
        ids = [train_set.instances[i].id for i in sorted(picked)]
        subsets.append(train_set.subset(ids, role="random_subset"))
    return subsets


@dataclass(frozen=True)
class PolicyStatistics:
    label: str
    n_scores: int
    stats: dict[str, tuple[float, float, float]]  # stat -> (point, ci_low, ci_high)


@dataclass(frozen=True)
class AggregateReport:
    policies: tuple[PolicyStatistics, ...]
    subset_sizes: dict[str, int]
    n_boot: int
    seed: int
    n_instances: int
    normalized_rows: list[ScoreRow] = field(repr=False, default_factory=list)

    def policy(self, label: str) -> PolicyStatistics:
        for p in self.policies:
            if p.label == label:
                return p
        raise KeyError(label)


def build_report(
    rows: list[ScoreRow],
    rng: RngStream,
    n_boot: int = 5000,
    subset_sizes: dict[str, int] | None = None,
    partial_labels: frozenset[str] = frozenset(),
) -> AggregateReport:
    """Normalize jointly per instance, then bootstrap per-policy aggregates.

    Every policy label must cover the same instance set; gaps are a
    structural error, not something to paper over with NaNs. Labels in
    ``partial_labels`` are exempt (their scores still join the
    normalization pool, and their aggregates run over what they cover);
    that is meant for deliberately capped baselines, nothing else.
    """
    if not rows:
        raise ValueError("empty score table")
    labels = sorted({r[0] for r in rows})
    instances = sorted({r[1] for r in rows})
    full = set(instances)
    gaps = []
    for label in labels:
        if label in partial_labels:
            continue
        covered = {r[1] for r in rows if r[0] == label}
        missing = sorted(full - covered)
        if missing:
            gaps.append(f"{label}: missing instances {missing}")
    if gaps:
        raise ReportError("instance coverage mismatch; " + "; ".join(gaps))

    normalized = normalize_per_instance(rows)
    policies = []
    for label in labels:
        values = np.array([r[3] for r in normalized if r[0] == label])
        stats = {}
        for stat in STATISTICS:
            gen = rng.child(f"{label}/{stat}").rng
            stats[stat] = bootstrap_statistic(values, stat, gen, n_boot=n_boot)
        policies.append(PolicyStatistics(label=label, n_scores=values.size, stats=stats))
    return AggregateReport(
        policies=tuple(policies),
        subset_sizes=dict(subset_sizes or {}),
        n_boot=n_boot,
        seed=rng.root_seed,
        n_instances=len(instances),
        normalized_rows=normalized,
    )
