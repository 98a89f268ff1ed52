"""Report rendering: structured text, a flat CSV, and figures.

The text report and CSV are the comparison artifacts and must be
byte-stable across reruns, so every float is formatted explicitly and
nothing time- or path-dependent is written. Figures are rendered with the
Agg backend straight to PNG files next to them.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .config import ExperimentConfig
from .core import InstanceSet, SigmoidInstance
from .stats import STATISTICS, AggregateReport


def _label_order(label: str) -> tuple[int, str]:
    if label == "full":
        return (0, label)
    if label.startswith("selected_rep"):
        return (1, label)
    if label.startswith("random_rep"):
        return (2, label)
    if label == "isa":
        return (3, label)
    return (4, label)


def ordered_policies(report: AggregateReport):
    return sorted(report.policies, key=lambda p: _label_order(p.label))


def render_text_report(config: ExperimentConfig, report: AggregateReport) -> str:
    lines = [
        "Generalization report",
        "=====================",
        f"benchmark: {config.benchmark}",
        f"training seeds: {', '.join(str(s) for s in config.seeds)}",
        f"test instances: {report.n_instances}",
        f"representation: source={config.representation.source} "
        f"feature_type={config.representation.feature_type}",
        f"selection: method={config.selection.method} "
        f"threshold={config.selection.threshold} "
        f"repetitions={config.selection.repetitions}",
        f"bootstrap: n_boot={report.n_boot} seed={report.seed}",
        "",
        "normalized test performance (min-max per instance, pooled over instances x seeds)",
        "",
    ]
    header = f"{'policy':<18}{'n':>6}"
    for stat in STATISTICS:
        header += f"  {stat + ' [2.5%, 97.5%]':<28}"
    lines.append(header)
    lines.append("-" * len(header))
    for pol in ordered_policies(report):
        row = f"{pol.label:<18}{pol.n_scores:>6}"
        for stat in STATISTICS:
            point, lo, hi = pol.stats[stat]
            row += f"  {point:.4f} [{lo:.4f}, {hi:.4f}]  "
        lines.append(row.rstrip())
    lines.append("")
    if report.subset_sizes:
        lines.append("selected subset sizes:")
        for key in sorted(report.subset_sizes):
            lines.append(f"  {key}: {report.subset_sizes[key]}")
        lines.append("")
    return "\n".join(lines) + "\n"


def write_summary_csv(path: Path, report: AggregateReport) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "n_scores", "statistic", "point", "ci_low", "ci_high"])
        for pol in ordered_policies(report):
            for stat in STATISTICS:
                point, lo, hi = pol.stats[stat]
                writer.writerow(
                    [pol.label, pol.n_scores, stat, repr(point), repr(lo), repr(hi)]
                )


def plot_performance_intervals(path: Path, report: AggregateReport) -> None:
    policies = ordered_policies(report)
    fig, axes = plt.subplots(1, len(STATISTICS), figsize=(4 * len(STATISTICS), 0.5 + 0.45 * len(policies)), sharey=True)
    y = range(len(policies))
    for ax, stat in zip(axes, STATISTICS):
        points = [p.stats[stat][0] for p in policies]
        lows = [p.stats[stat][0] - p.stats[stat][1] for p in policies]
        highs = [p.stats[stat][2] - p.stats[stat][0] for p in policies]
        ax.errorbar(points, list(y), xerr=[lows, highs], fmt="o", capsize=3)
        ax.set_title(stat)
        ax.set_xlabel("normalized score")
        ax.grid(True, axis="x", alpha=0.3)
    axes[0].set_yticks(list(y))
    axes[0].set_yticklabels([p.label for p in policies])
    axes[0].invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_subset_sizes(path: Path, report: AggregateReport, full_size: int) -> None:
    keys = sorted(report.subset_sizes)
    sizes = [report.subset_sizes[k] for k in keys]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(keys)), 4))
    ax.bar(range(len(keys)), sizes)
    ax.axhline(full_size, color="crimson", linestyle="--", label=f"full train set ({full_size})")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("subset size")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_selected_instances(path: Path, train_set: InstanceSet, selected_ids: list[int]) -> None:
    """Where the kept instances sit in parameter space (curve benchmark only)."""
    chosen = set(selected_ids)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    for dim, ax in enumerate(axes):
        xs = [inst.shifts[dim] for inst in train_set.instances]
        ys = [inst.slopes[dim] for inst in train_set.instances]
        keep = [inst.id in chosen for inst in train_set.instances]
        ax.scatter(
            [x for x, k in zip(xs, keep) if not k],
            [y for y, k in zip(ys, keep) if not k],
            s=12, color="lightgray", label="dropped",
        )
        ax.scatter(
            [x for x, k in zip(xs, keep) if k],
            [y for y, k in zip(ys, keep) if k],
            s=18, color="tab:blue", label="selected",
        )
        ax.set_xlabel(f"shift_{dim}")
        ax.set_ylabel(f"slope_{dim}")
        ax.set_title(f"dimension {dim}")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_artifacts(
    config: ExperimentConfig,
    report: AggregateReport,
    train_set: InstanceSet,
    selections: dict[int, dict],
) -> None:
    outdir = config.output_dir / "report"
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.txt").write_text(render_text_report(config, report), encoding="utf-8")
    write_summary_csv(outdir / "summary.csv", report)
    plot_performance_intervals(outdir / "performance_intervals.png", report)
    if report.subset_sizes:
        plot_subset_sizes(outdir / "subset_sizes.png", report, len(train_set))
    if train_set.instances and isinstance(train_set.instances[0], SigmoidInstance):
        first_seed = config.seeds[0]
        reps = selections[first_seed]["repetitions"]
        plot_selected_instances(
            outdir / "selected_instances.png", train_set, reps[0]["instance_ids"]
        )
