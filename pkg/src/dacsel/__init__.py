"""Instance subselection for dynamic algorithm configuration.

Train a policy-gradient agent across contextual-MDP instances, describe
each instance by meta-features of the agent's evaluation trajectories,
pick a representative subset via a similarity graph, retrain on the
subset with the same budget, and compare generalization on held-out
instances with bootstrapped statistics.
"""

from .agent import PpoConfig, compute_gae, evaluate_rollouts, ppo_surrogate_term, train
from .config import ExperimentConfig, load_config
from .core import (
    ActionSpace,
    CmaesInstance,
    EpisodeTrajectory,
    InstanceSet,
    ReportError,
    RepresentationError,
    SigmoidInstance,
    UsageError,
)
from .features import (
    FEATURE_NAMES,
    RepresentationSpec,
    build_instance_representation,
    instance_features,
    raw_representation,
    standardize,
    ts_feature_vector,
)
from .pipeline import run_pipeline
from .rng import RngStream, derive_rng_stream
from .selector import (
    SelectionConfig,
    build_similarity_graph,
    cosine_similarity,
    greedy_dominating_set,
    greedy_maximal_independent_set,
    select_instances,
)
from .stats import bootstrap_statistic, build_report, iqm, normalize_per_instance, random_subsets

__version__ = "0.1.0"

__all__ = [
    "ActionSpace",
    "CmaesInstance",
    "EpisodeTrajectory",
    "ExperimentConfig",
    "FEATURE_NAMES",
    "InstanceSet",
    "PpoConfig",
    "ReportError",
    "RepresentationError",
    "RepresentationSpec",
    "RngStream",
    "SelectionConfig",
    "SigmoidInstance",
    "UsageError",
    "bootstrap_statistic",
    "build_instance_representation",
    "build_report",
    "build_similarity_graph",
    "compute_gae",
    "cosine_similarity",
    "derive_rng_stream",
    "evaluate_rollouts",
    "greedy_dominating_set",
    "greedy_maximal_independent_set",
    "instance_features",
    "iqm",
    "load_config",
    "normalize_per_instance",
    "ppo_surrogate_term",
    "train",
    "random_subsets",
    "raw_representation",
    "run_pipeline",
    "select_instances",
    "standardize",
    "ts_feature_vector",
]
