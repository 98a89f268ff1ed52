"""File formats for pipeline artifacts.

All text artifacts are written deterministically (shortest round-trip
float repr, sorted JSON keys, no timestamps) so reruns with the same
config and seed are byte-identical.

Instance CSVs carry a header naming the benchmark's fields:
  sigmoid:  id,shift_0,slope_0,shift_1,slope_1
  cmaes:    id,function_id,bbob_instance_id,dimension

Trajectories are JSON lines, one episode per line with fields
instance_id, episode, actions (list of per-step vectors) and rewards.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import CmaesInstance, EpisodeTrajectory, InstanceSet, SigmoidInstance

SIGMOID_HEADER = ["id", "shift_0", "slope_0", "shift_1", "slope_1"]
CMAES_HEADER = ["id", "function_id", "bbob_instance_id", "dimension"]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_instances(path: str | Path, instance_set: InstanceSet) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    first = instance_set.instances[0]
    if isinstance(first, SigmoidInstance):
        header = SIGMOID_HEADER
        for inst in instance_set:
            rows.append(
                [inst.id, _fmt(inst.shifts[0]), _fmt(inst.slopes[0]), _fmt(inst.shifts[1]), _fmt(inst.slopes[1])]
            )
    else:
        header = CMAES_HEADER
        for inst in instance_set:
            rows.append([inst.id, inst.function_id, inst.bbob_instance_id, inst.dimension])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_instances(path: str | Path, role: str) -> InstanceSet:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if header == SIGMOID_HEADER:
        instances = tuple(
            SigmoidInstance(
                id=int(r[0]),
                shifts=(float(r[1]), float(r[3])),
                slopes=(float(r[2]), float(r[4])),
            )
            for r in rows
        )
    elif header == CMAES_HEADER:
        instances = tuple(
            CmaesInstance(
                id=int(r[0]), function_id=int(r[1]), bbob_instance_id=int(r[2]), dimension=int(r[3])
            )
            for r in rows
        )
    else:
        raise ValueError(f"{path}: unrecognized instance CSV header {header}")
    return InstanceSet(role, instances)


def write_trajectories(path: str | Path, trajectories: list[EpisodeTrajectory]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for traj in trajectories:
            record = {
                "instance_id": traj.instance_id,
                "episode": traj.episode_index,
                "actions": [[float(a) for a in step] for step in traj.actions],
                "rewards": [float(r) for r in traj.rewards],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_trajectories(path: str | Path) -> list[EpisodeTrajectory]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                EpisodeTrajectory(
                    instance_id=int(rec["instance_id"]),
                    episode_index=int(rec["episode"]),
                    actions=[np.asarray(a, dtype=np.float64) for a in rec["actions"]],
                    rewards=[float(r) for r in rec["rewards"]],
                )
            )
    return out


def write_feature_matrix(
    path: str | Path, instance_ids: list[int], matrix: np.ndarray, feature_names: list[str]
) -> None:
    matrix = np.asarray(matrix)
    if matrix.shape != (len(instance_ids), len(feature_names)):
        raise ValueError(
            f"matrix shape {matrix.shape} inconsistent with {len(instance_ids)} ids "
            f"and {len(feature_names)} feature names"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id"] + feature_names)
        for iid, row in zip(instance_ids, matrix):
            writer.writerow([iid] + [_fmt(v) for v in row])


def read_feature_matrix(path: str | Path) -> tuple[list[int], np.ndarray, list[str]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ids, rows = [], []
        for r in reader:
            ids.append(int(r[0]))
            rows.append([float(v) for v in r[1:]])
    return ids, np.array(rows, dtype=np.float64), header[1:]


def write_score_table(path: str | Path, rows: list[tuple[str, int, int, float]]) -> None:
    """Rows are (policy_label, instance_id, seed, mean_episode_return)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy_label", "instance_id", "seed", "mean_episode_return"])
        for label, iid, seed, score in rows:
            writer.writerow([label, iid, seed, _fmt(score)])


def read_score_table(path: str | Path) -> list[tuple[str, int, int, float]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [(r[0], int(r[1]), int(r[2]), float(r[3])) for r in reader]


def write_training_log(path: str | Path, log: list[tuple[int, int, float]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["update", "steps", "mean_return"])
        for update, steps, mean_return in log:
            writer.writerow([update, steps, _fmt(mean_return)])


CHECKPOINT_VERSION = 1


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Policy checkpoint: npz container with a version stamp and JSON metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {f"param/{k}": v for k, v in arrays.items()}
    payload["meta"] = np.frombuffer(
        json.dumps({"version": CHECKPOINT_VERSION, **meta}, sort_keys=True).encode(), dtype=np.uint8
    )
    np.savez(path, **payload)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(Path(path)) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.pop("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version")
        arrays = {k[len("param/") :]: data[k] for k in data.files if k.startswith("param/")}
    return arrays, meta
