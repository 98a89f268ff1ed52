"""Experiment configuration: a YAML file mapped onto typed settings.

Schema (all keys optional unless marked; defaults in parentheses):

    benchmark: sigmoid | cmaes           # required
    seeds: [1, 2, 3]                     # training seeds ([1])
    instance_seed: 42                    # instance sampling / report seed (42)
    output_dir: runs/out                 # required; relative paths resolve
                                         # against $DACSEL_OUTPUT_ROOT if set
    n_train_instances: 300               # (300 sigmoid / 40 cmaes)
    n_test_instances: 300                # (300 sigmoid / 10 cmaes)
    instances:                           # optional import instead of sampling
      train: path/to/train.csv
      test: path/to/test.csv
    ppo:                                 # overrides, e.g.
      total_env_steps: 10000             # (10000 sigmoid / 1000000 cmaes)
      learning_rate: 0.0003
      reward_scaling: false              # (true for cmaes)
    representation:
      source: R                          # A | R | RA | A+I | R+I | RA+I (R)
      feature_type: ts                   # raw | ts (ts)
    selection:
      method: MIS                        # DS | MIS (MIS)
      threshold: 0.7                     # (0.7)
      repetitions: 5                     # (5)
    baselines:
      random_subsets: false              # retrain on 5 random 10% subsets
      isa: false                         # per-test-instance agents
      isa_max_instances: 20              # cap on ISA instances (sampled)
    evaluation:
      episodes_per_instance: 10          # (10)
    report:
      n_boot: 5000                       # bootstrap resamples (5000)
    cmaes:
      budget: 2000                       # function evaluations per episode
      dimension: 10

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agent import PpoConfig
from .core import UsageError
from .features import RepresentationSpec
from .selector import SelectionConfig

OUTPUT_ROOT_ENV = "DACSEL_OUTPUT_ROOT"

BENCHMARK_DEFAULTS = {
    "sigmoid": {
        "n_train_instances": 300,
        "n_test_instances": 300,
        "total_env_steps": 10_000,
        "reward_scaling": False,
    },
    "cmaes": {
        "n_train_instances": 40,
        "n_test_instances": 10,
        "total_env_steps": 1_000_000,
        "reward_scaling": True,
    },
}


@dataclass(frozen=True)
class BaselineConfig:
    random_subsets: bool = False
    isa: bool = False
    isa_max_instances: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: str
    output_dir: Path
    seeds: tuple[int, ...] = (1,)
    instance_seed: int = 42
    n_train_instances: int = 300
    n_test_instances: int = 300
    instance_paths: dict[str, Path] = field(default_factory=dict)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    representation: RepresentationSpec = field(
        default_factory=lambda: RepresentationSpec("R", "ts")
    )
    selection: SelectionConfig = field(
        default_factory=lambda: SelectionConfig("MIS", 0.7)
    )
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    episodes_per_instance: int = 10
    n_boot: int = 5000
    cmaes_budget: int = 2000
    cmaes_dimension: int = 10


def _require_mapping(value, name: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise UsageError(f"config section {name!r} must be a mapping")
    return value


def _check_keys(section: dict, allowed: set[str], name: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise UsageError(f"unknown keys in {name}: {', '.join(unknown)}")


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise UsageError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must contain a mapping")
    return config_from_dict(data, seed_override=seed_override)


def config_from_dict(data: dict, seed_override: int | None = None) -> ExperimentConfig:
    _check_keys(
        data,
        {
            "benchmark", "seeds", "instance_seed", "output_dir",
            "n_train_instances", "n_test_instances", "instances", "ppo",
            "representation", "selection", "baselines", "evaluation",
            "report", "cmaes",
        },
        "config",
    )
    benchmark = data.get("benchmark")
    if benchmark not in BENCHMARK_DEFAULTS:
        raise UsageError(
            f"benchmark must be one of {sorted(BENCHMARK_DEFAULTS)}, got {benchmark!r}"
        )
    defaults = BENCHMARK_DEFAULTS[benchmark]

    if "output_dir" not in data:
        raise UsageError("config must set output_dir")
    output_dir = Path(str(data["output_dir"]))
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not output_dir.is_absolute():
        output_dir = Path(root) / output_dir

    seeds = data.get("seeds", [1])
    if seed_override is not None:
        seeds = [seed_override]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise UsageError("seeds must be a non-empty list of integers")
    if len(set(seeds)) != len(seeds):
        raise UsageError("seeds must be distinct")

    instance_paths = {}
    instances = _require_mapping(data.get("instances"), "instances")
    _check_keys(instances, {"train", "test"}, "instances")
    for role in ("train", "test"):
        if role in instances:
            instance_paths[role] = Path(str(instances[role]))

    ppo_section = _require_mapping(data.get("ppo"), "ppo")
    ppo_fields = set(PpoConfig.__dataclass_fields__)
    _check_keys(ppo_section, ppo_fields, "ppo")
    ppo_kwargs = {
        "total_env_steps": defaults["total_env_steps"],
        "reward_scaling": defaults["reward_scaling"],
    }
    ppo_kwargs.update(ppo_section)
    try:
        ppo = PpoConfig(**ppo_kwargs)
    except ValueError as exc:
        raise UsageError(f"bad ppo settings: {exc}") from exc

    rep_section = _require_mapping(data.get("representation"), "representation")
    _check_keys(rep_section, {"source", "feature_type"}, "representation")
    try:
        representation = RepresentationSpec(
            source=rep_section.get("source", "R"),
            feature_type=rep_section.get("feature_type", "ts"),
        )
    except ValueError as exc:
        raise UsageError(f"bad representation settings: {exc}") from exc

    sel_section = _require_mapping(data.get("selection"), "selection")
    _check_keys(sel_section, {"method", "threshold", "repetitions"}, "selection")
    try:
        selection = SelectionConfig(
            method=sel_section.get("method", "MIS"),
            threshold=float(sel_section.get("threshold", 0.7)),
            repetitions=int(sel_section.get("repetitions", 5)),
            spec=representation,
        )
    except ValueError as exc:
        raise UsageError(f"bad selection settings: {exc}") from exc

    base_section = _require_mapping(data.get("baselines"), "baselines")
    _check_keys(base_section, {"random_subsets", "isa", "isa_max_instances"}, "baselines")
    baselines = BaselineConfig(
        random_subsets=bool(base_section.get("random_subsets", False)),
        isa=bool(base_section.get("isa", False)),
        isa_max_instances=int(base_section.get("isa_max_instances", 20)),
    )
    if baselines.isa_max_instances < 1:
        raise UsageError("isa_max_instances must be at least 1")

    eval_section = _require_mapping(data.get("evaluation"), "evaluation")
    _check_keys(eval_section, {"episodes_per_instance"}, "evaluation")
    episodes = int(eval_section.get("episodes_per_instance", 10))
    if episodes < 1:
        raise UsageError("episodes_per_instance must be at least 1")

    report_section = _require_mapping(data.get("report"), "report")
    _check_keys(report_section, {"n_boot"}, "report")
    n_boot = int(report_section.get("n_boot", 5000))
    if n_boot < 1:
        raise UsageError("n_boot must be at least 1")

    cmaes_section = _require_mapping(data.get("cmaes"), "cmaes")
    _check_keys(cmaes_section, {"budget", "dimension"}, "cmaes")
    cmaes_budget = int(cmaes_section.get("budget", 2000))
    cmaes_dimension = int(cmaes_section.get("dimension", 10))
    if cmaes_budget < 1 or cmaes_dimension < 2:
        raise UsageError("cmaes budget must be >= 1 and dimension >= 2")

    n_train = int(data.get("n_train_instances", defaults["n_train_instances"]))
    n_test = int(data.get("n_test_instances", defaults["n_test_instances"]))
    if n_train < 1 or n_test < 1:
        raise UsageError("instance counts must be positive")

    return ExperimentConfig(
        benchmark=benchmark,
        output_dir=output_dir,
        seeds=tuple(seeds),
        instance_seed=int(data.get("instance_seed", 42)),
        n_train_instances=n_train,
        n_test_instances=n_test,
        instance_paths=instance_paths,
        ppo=ppo,
        representation=representation,
        selection=selection,
        baselines=baselines,
        episodes_per_instance=episodes,
        n_boot=n_boot,
        cmaes_budget=cmaes_budget,
        cmaes_dimension=cmaes_dimension,
    )


def config_echo(config: ExperimentConfig) -> dict:
    """Plain-data view of the resolved config, for artifact headers."""
    return {
        "benchmark": config.benchmark,
        "seeds": list(config.seeds),
        "instance_seed": config.instance_seed,
        "n_train_instances": config.n_train_instances,
        "n_test_instances": config.n_test_instances,
        "ppo": {
            "gamma": config.ppo.gamma,
            "gae_lambda": config.ppo.gae_lambda,
            "clip_eps": config.ppo.clip_eps,
            "epochs_per_update": config.ppo.epochs_per_update,
            "rollout_horizon": config.ppo.rollout_horizon,
            "minibatch_size": config.ppo.minibatch_size,
            "learning_rate": config.ppo.learning_rate,
            "value_coef": config.ppo.value_coef,
            "entropy_coef": config.ppo.entropy_coef,
            "total_env_steps": config.ppo.total_env_steps,
            "reward_scaling": config.ppo.reward_scaling,
        },
        "representation": {
            "source": config.representation.source,
            "feature_type": config.representation.feature_type,
        },
        "selection": {
            "method": config.selection.method,
            "threshold": config.selection.threshold,
            "repetitions": config.selection.repetitions,
        },
        "baselines": {
            "random_subsets": config.baselines.random_subsets,
            "isa": config.baselines.isa,
            "isa_max_instances": config.baselines.isa_max_instances,
        },
        "evaluation": {"episodes_per_instance": config.episodes_per_instance},
        "report": {"n_boot": config.n_boot},
        "cmaes": {"budget": config.cmaes_budget, "dimension": config.cmaes_dimension},
    }
