"""Stage orchestration with persisted intermediate artifacts.

Every stage reads its inputs from the output directory and writes its
results back there, so any stage can be rerun in isolation and the whole
chain is reproducible from the config alone. Layout under ``output_dir``:

    config.json                 resolved settings echo
    instances/{train,test}.csv
    seed_<s>/policy_full.npz
    seed_<s>/training_log_full.csv
    seed_<s>/rollouts.jsonl
    seed_<s>/features.csv
    seed_<s>/selection.json
    seed_<s>/policy_selected_rep<r>.npz (+ logs)
    seed_<s>/policy_random_rep<k>.npz   (+ logs, optional)
    seed_<s>/isa/policy_inst<id>.npz    (optional)
    eval/scores.csv
    report/report.txt, report/summary.csv, report/*.png

Failures surface as :class:`StageError` naming the stage; artifacts
written before the failure stay on disk.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io, report as report_mod
from .agent import evaluate_rollouts, train
from .agent.policy import ActorCritic
from .baselines import train_isa
from .config import ExperimentConfig, config_echo
from .core import CmdpEnv, InstanceSet, UsageError
from .envs import make_env
from .envs.cmaes import cmaes_test_instances, cmaes_train_instances
from .envs.sigmoid import EPISODE_LENGTH, sample_sigmoid_instances
from .features import build_feature_matrix, representation_column_names
from .rng import RngStream
from .selector import read_selection, select_instances, write_selection
from .stats import build_report, random_subsets

STAGES = (
    "gen-instances",
    "train",
    "rollout",
    "featurize",
    "select",
    "retrain",
    "evaluate",
    "report",
)


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def seed_dir(config: ExperimentConfig, seed: int) -> Path:
    return config.output_dir / f"seed_{seed}"


def instances_path(config: ExperimentConfig, role: str) -> Path:
    return config.output_dir / "instances" / f"{role}.csv"


def scores_path(config: ExperimentConfig) -> Path:
    return config.output_dir / "eval" / "scores.csv"


def make_benchmark_env(config: ExperimentConfig) -> CmdpEnv:
    if config.benchmark == "sigmoid":
        return make_env("sigmoid")
    return make_env("cmaes", budget=config.cmaes_budget, dimension=config.cmaes_dimension)


def save_policy(path: Path, policy: ActorCritic) -> None:
    arrays, meta = policy.to_arrays()
    io.save_checkpoint(path, arrays, meta)


def load_policy(path: Path) -> ActorCritic:
    arrays, meta = io.load_checkpoint(path)
    return ActorCritic.from_arrays(arrays, meta)


def _load_instances(config: ExperimentConfig, role: str) -> InstanceSet:
    path = instances_path(config, role)
    if not path.is_file():
        raise FileNotFoundError(f"missing {path}; run gen-instances first")
    return io.read_instances(path, role)


def stage_gen_instances(config: ExperimentConfig) -> None:
    """Sample (or import) the train/test instance sets and persist them."""
    for role in ("train", "test"):
        if role in config.instance_paths:
            src = config.instance_paths[role]
            if not src.is_file():
                raise UsageError(f"instance file not found: {src}")
            instance_set = io.read_instances(src, role)
        elif config.benchmark == "sigmoid":
            n = config.n_train_instances if role == "train" else config.n_test_instances
            rng = RngStream(config.instance_seed, f"instances/{role}")
            instance_set = sample_sigmoid_instances(n, rng, role=role)
        else:
            grid = (
                cmaes_train_instances(config.cmaes_dimension)
                if role == "train"
                else cmaes_test_instances(config.cmaes_dimension)
            )
            n = config.n_train_instances if role == "train" else config.n_test_instances
            if n > len(grid):
                raise UsageError(
                    f"{role} wants {n} instances but the benchmark grid has {len(grid)}"
                )
            instance_set = InstanceSet(role=role, instances=grid.instances[:n])
        io.write_instances(instances_path(config, role), instance_set)

    echo = json.dumps(config_echo(config), sort_keys=True, indent=2) + "\n"
    config.output_dir.mkdir(parents=True, exist_ok=True)
    (config.output_dir / "config.json").write_text(echo, encoding="utf-8")


def stage_train(config: ExperimentConfig, seed: int) -> None:
    """Train the full-set policy for one seed."""
    train_set = _load_instances(config, "train")
    env = make_benchmark_env(config)
    result = train(env, train_set, config.ppo, RngStream(seed, "train/full"))
    out = seed_dir(config, seed)
    save_policy(out / "policy_full.npz", result.policy)
    io.write_training_log(out / "training_log_full.csv", result.log)


def stage_rollout(config: ExperimentConfig, seed: int) -> None:
    """Evaluation rollouts of the full policy on every training instance."""
    train_set = _load_instances(config, "train")
    env = make_benchmark_env(config)
    policy = load_policy(seed_dir(config, seed) / "policy_full.npz")
    trajectories, _ = evaluate_rollouts(
        policy, env, train_set, RngStream(seed, "rollout"), config.episodes_per_instance
    )
    io.write_trajectories(seed_dir(config, seed) / "rollouts.jsonl", trajectories)


def stage_featurize(config: ExperimentConfig, seed: int) -> None:
    train_set = _load_instances(config, "train")
    trajectories = io.read_trajectories(seed_dir(config, seed) / "rollouts.jsonl")
    spec = config.representation
    matrix = build_feature_matrix(trajectories, train_set, spec)
    n_action_dims = 2 if config.benchmark == "sigmoid" else 1
    episode_length = EPISODE_LENGTH if config.benchmark == "sigmoid" else None
    names = representation_column_names(spec, n_action_dims, episode_length, config.benchmark)
    io.write_feature_matrix(
        seed_dir(config, seed) / "features.csv", list(train_set.ids), matrix, names
    )


def stage_select(config: ExperimentConfig, seed: int) -> None:
    train_set = _load_instances(config, "train")
    ids, matrix, _ = io.read_feature_matrix(seed_dir(config, seed) / "features.csv")
    if list(ids) != list(train_set.ids):
        raise ValueError("features.csv rows do not match the training instance set")
    result = select_instances(matrix, train_set, config.selection, RngStream(seed, "select"))
    write_selection(seed_dir(config, seed) / "selection.json", result)


def _training_units(config: ExperimentConfig, seed: int) -> list[tuple[str, InstanceSet, RngStream]]:
    """All per-subset retraining jobs for one seed, in a fixed order."""
    train_set = _load_instances(config, "train")
    selection = read_selection(seed_dir(config, seed) / "selection.json")
    units = []
    for rep in selection["repetitions"]:
        label = f"selected_rep{rep['repetition']}"
        subset = train_set.subset(rep["instance_ids"], role="selected")
        units.append((label, subset, RngStream(seed, f"train/{label}")))
    if config.baselines.random_subsets:
        for k, subset in enumerate(
            random_subsets(train_set, RngStream(seed, "random_subsets"))
        ):
            label = f"random_rep{k}"
            units.append((label, subset, RngStream(seed, f"train/{label}")))
    return units


def _run_training_unit(args) -> str:
    config, seed, label, subset, rng = args
    env = make_benchmark_env(config)
    result = train(env, subset, config.ppo, rng)
    out = seed_dir(config, seed)
    save_policy(out / f"policy_{label}.npz", result.policy)
    io.write_training_log(out / f"training_log_{label}.csv", result.log)
    return label


def isa_instance_ids(config: ExperimentConfig, test_set: InstanceSet) -> list[int]:
    """Deterministic capped sample of test instances for the per-instance agents."""
    cap = config.baselines.isa_max_instances
    if cap >= len(test_set):
        return list(test_set.ids)
    gen = RngStream(config.instance_seed, "isa/sample").rng
    picked = gen.choice(len(test_set), size=cap, replace=False)
    return [test_set.instances[i].id for i in sorted(picked)]


def stage_retrain(config: ExperimentConfig, seed: int, jobs: int = 1) -> None:
    """Retrain per selected subset (and optional baselines) with the full budget."""
    units = _training_units(config, seed)
    args = [(config, seed, label, subset, rng) for label, subset, rng in units]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_run_training_unit, args))
    else:
        for unit in args:
            _run_training_unit(unit)

    if config.baselines.isa:
        test_set = _load_instances(config, "test")
        ids = isa_instance_ids(config, test_set)
        isa_set = test_set.subset(ids, role="test")
        env = make_benchmark_env(config)
        policies = train_isa(env, isa_set, config.ppo, RngStream(seed, "isa"))
        isa_dir = seed_dir(config, seed) / "isa"
        for inst_id, policy in sorted(policies.items()):
            save_policy(isa_dir / f"policy_inst{inst_id}.npz", policy)


def _policy_labels(config: ExperimentConfig) -> list[str]:
    labels = ["full"]
    labels += [f"selected_rep{r}" for r in range(config.selection.repetitions)]
    if config.baselines.random_subsets:
        labels += [f"random_rep{k}" for k in range(5)]
    return labels


def stage_evaluate(config: ExperimentConfig) -> None:
    """Evaluate every trained policy of every seed on the test set."""
    test_set = _load_instances(config, "test")
    env = make_benchmark_env(config)
    rows: list[tuple[str, int, int, float]] = []
    for seed in config.seeds:
        out = seed_dir(config, seed)
        for label in _policy_labels(config):
            policy = load_policy(out / f"policy_{label}.npz")
            _, means = evaluate_rollouts(
                policy, env, test_set, RngStream(seed, f"eval/{label}"),
                config.episodes_per_instance,
            )
            rows += [(label, inst_id, seed, means[inst_id]) for inst_id in test_set.ids]
        if config.baselines.isa:
            for inst_id in isa_instance_ids(config, test_set):
                policy = load_policy(out / "isa" / f"policy_inst{inst_id}.npz")
                own = test_set.subset([inst_id], role="test")
                _, means = evaluate_rollouts(
                    policy, env, own, RngStream(seed, f"eval/isa/inst{inst_id}"),
                    config.episodes_per_instance,
                )
                rows.append(("isa", inst_id, seed, means[inst_id]))
    io.write_score_table(scores_path(config), rows)


def stage_report(config: ExperimentConfig) -> None:
    rows = io.read_score_table(scores_path(config))
    selections = {
        seed: read_selection(seed_dir(config, seed) / "selection.json")
        for seed in config.seeds
    }
    subset_sizes: dict[str, int] = {}
    for seed, selection in selections.items():
        for rep in selection["repetitions"]:
            subset_sizes[f"seed{seed}/selected_rep{rep['repetition']}"] = rep["size"]
    train_set = _load_instances(config, "train")
    test_set = _load_instances(config, "test")
    partial = frozenset()
    if config.baselines.isa and config.baselines.isa_max_instances < len(test_set):
        partial = frozenset({"isa"})
    report = build_report(
        rows,
        RngStream(config.instance_seed, "report"),
        n_boot=config.n_boot,
        subset_sizes=subset_sizes,
        partial_labels=partial,
    )
    report_mod.write_report_artifacts(config, report, train_set, selections)


def run_pipeline(config: ExperimentConfig, jobs: int = 1) -> Path:
    """All stages in order; any failure is re-raised naming its stage."""
    per_seed = {
        "train": stage_train,
        "rollout": stage_rollout,
        "featurize": stage_featurize,
        "select": stage_select,
    }
    for stage in STAGES:
        try:
            if stage == "gen-instances":
                stage_gen_instances(config)
            elif stage in per_seed:
                for seed in config.seeds:
                    per_seed[stage](config, seed)
            elif stage == "retrain":
                for seed in config.seeds:
                    stage_retrain(config, seed, jobs=jobs)
            elif stage == "evaluate":
                stage_evaluate(config)
            else:
                stage_report(config)
        except UsageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc
    return config.output_dir
