"""Command-line entry point.

Each subcommand reruns one pipeline stage from the artifacts already on
disk; ``pipeline`` chains them all. Every subcommand takes ``--config``
(YAML, schema documented in :mod:`dacsel.config`) and ``--seed`` to
override the config's seed list with a single seed. Relative output
directories resolve against $DACSEL_OUTPUT_ROOT when that is set.

Exit codes: 0 success, 1 usage or config error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import OUTPUT_ROOT_ENV, load_config
from .core import UsageError

PER_SEED_STAGES = {
    "train": pipeline.stage_train,
    "rollout": pipeline.stage_rollout,
    "featurize": pipeline.stage_featurize,
    "select": pipeline.stage_select,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dacsel",
        description=(
            "Train policies on algorithm-configuration instances, build "
            "trajectory meta-features, subselect representative instances, "
            "and compare generalization of the retrained policies."
        ),
        epilog=f"Relative output dirs resolve against ${OUTPUT_ROOT_ENV} when set.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    stages = [
        ("gen-instances", "sample or import the train/test instance sets"),
        ("train", "train the full-set policy per seed"),
        ("rollout", "evaluation rollouts of the full policy on the train set"),
        ("featurize", "build the per-instance feature matrix from rollouts"),
        ("select", "build the similarity graph and pick instance subsets"),
        ("retrain", "retrain one policy per subset with the full step budget"),
        ("evaluate", "evaluate all trained policies on the test set"),
        ("report", "aggregate scores into the report, summary CSV, and figures"),
        ("pipeline", "run every stage in order"),
    ]
    for name, help_text in stages:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config file (YAML)")
        p.add_argument(
            "--seed", type=int, default=None,
            help="run only this training seed (overrides the config's seeds)",
        )
        if name in ("retrain", "pipeline"):
            p.add_argument(
                "--jobs", type=int, default=1,
                help="worker processes for per-subset retraining (default 1)",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed)
        if args.command == "pipeline":
            outdir = pipeline.run_pipeline(config, jobs=args.jobs)
            print(f"pipeline finished; artifacts in {outdir}")
        elif args.command == "gen-instances":
            pipeline.stage_gen_instances(config)
        elif args.command == "retrain":
            for seed in config.seeds:
                pipeline.stage_retrain(config, seed, jobs=args.jobs)
        elif args.command == "evaluate":
            pipeline.stage_evaluate(config)
        elif args.command == "report":
            pipeline.stage_report(config)
        else:
            for seed in config.seeds:
                PER_SEED_STAGES[args.command](config, seed)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except pipeline.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # single-stage subcommands fail as stage errors too
        if args.command in PER_SEED_STAGES or args.command in (
            "gen-instances", "retrain", "evaluate", "report",
        ):
            print(f"error: stage '{args.command}' failed: {exc}", file=sys.stderr)
            return 2
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
