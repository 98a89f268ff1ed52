"""Instance subselection over a similarity graph.

Representations are standardized, pairwise cosine similarity is thresholded
into an undirected graph, and a subset is picked with a greedy heuristic:
either a dominating set (every instance kept or similar to a kept one) or a
maximal independent set (no two kept instances similar). Both problems are
NP-hard; ties are broken by a seeded stream and each repetition uses its
own stream, which is how repeated selection runs differ.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import InstanceSet
from .features import RepresentationSpec, standardize
from .rng import RngStream

METHODS = ("DS", "MIS")
NORM_EPS = 1e-12


@dataclass(frozen=True)
class SimilarityGraph:
    ids: tuple[int, ...]
    neighbors: dict[int, frozenset[int]]
    threshold: float

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self.neighbors.values()) // 2

    @property
    def density(self) -> float:
        n = self.n_nodes
        if n < 2:
            return 0.0
        return self.n_edges / (n * (n - 1) / 2)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]


@dataclass(frozen=True)
class SelectionConfig:
    method: str
    threshold: float
    repetitions: int = 5
    spec: RepresentationSpec | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < NORM_EPS and nv < NORM_EPS:
        return 1.0
    if nu < NORM_EPS or nv < NORM_EPS:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def similarity_matrix(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    zero = norms < NORM_EPS
    safe = np.where(zero, 1.0, norms)
    unit = m / safe[:, None]
    sim = unit @ unit.T
    # zero-norm conventions: both degenerate -> 1, one degenerate -> 0
    sim[zero, :] = 0.0
    sim[:, zero] = 0.0
    sim[np.ix_(zero, zero)] = 1.0
    return sim


def build_similarity_graph(matrix, threshold: float, ids=None) -> SimilarityGraph:
    m = np.asarray(matrix, dtype=np.float64)
    n = m.shape[0]
    if ids is None:
        ids = tuple(range(n))
    else:
        ids = tuple(int(i) for i in ids)
    if len(ids) != n:
        raise ValueError("one id per matrix row required")
    sim = similarity_matrix(m)
    neighbors: dict[int, set[int]] = {i: set() for i in ids}
    for a in range(n):
        for b in range(a + 1, n):
            if sim[a, b] >= threshold:
                neighbors[ids[a]].add(ids[b])
                neighbors[ids[b]].add(ids[a])
    return SimilarityGraph(
        ids=ids,
        neighbors={k: frozenset(v) for k, v in neighbors.items()},
        threshold=threshold,
    )


def greedy_dominating_set(graph: SimilarityGraph, rng: np.random.Generator) -> set[int]:
    """Repeatedly take the node covering the most still-uncovered nodes.

    A node covers itself plus its neighbors. Ties are broken uniformly at
    random; isolated nodes always end up selected.
    """
    uncovered = set(graph.ids)
    unselected = list(graph.ids)
    selected: set[int] = set()
    while uncovered:
        gains = [len((graph.neighbors[node] | {node}) & uncovered) for node in unselected]
        best = max(gains)
        tied = [i for i, g in enumerate(gains) if g == best]
        pick = tied[int(rng.integers(len(tied)))]
        node = unselected.pop(pick)
        selected.add(node)
        uncovered -= graph.neighbors[node] | {node}
    return selected


def greedy_maximal_independent_set(graph: SimilarityGraph, rng: np.random.Generator) -> set[int]:
    """Scan a random node permutation, keeping nodes with no kept neighbor."""
    selected: set[int] = set()
    for idx in rng.permutation(len(graph.ids)):
        node = graph.ids[int(idx)]
        if not graph.neighbors[node] & selected:
            selected.add(node)
    return selected


@dataclass(frozen=True)
class SelectionResult:
    config: SelectionConfig
    graph: SimilarityGraph
    subsets: tuple[InstanceSet, ...]


def select_instances(
    representations,
    instance_set: InstanceSet,
    config: SelectionConfig,
    rng: RngStream,
) -> SelectionResult:
    """Run the configured method once per repetition.

    The graph is built once (it is deterministic); repetitions differ only
    in tie-breaking streams. A repetition that selects everything is kept
    as-is.
    """
    matrix = np.asarray(representations, dtype=np.float64)
    if matrix.shape[0] != len(instance_set):
        raise ValueError("one representation row per instance required")
    graph = build_similarity_graph(standardize(matrix), config.threshold, instance_set.ids)
    algorithm = greedy_dominating_set if config.method == "DS" else greedy_maximal_independent_set
    subsets = []
    for rep in range(config.repetitions):
        chosen = algorithm(graph, rng.child(f"rep{rep}").rng)
        subsets.append(instance_set.subset(sorted(chosen), role="selected"))
    return SelectionResult(config=config, graph=graph, subsets=tuple(subsets))


def selection_to_json(result: SelectionResult) -> str:
    payload = {
        "config": {
            "method": result.config.method,
            "threshold": result.config.threshold,
            "repetitions": result.config.repetitions,
            "source": result.config.spec.source if result.config.spec else None,
            "feature_type": result.config.spec.feature_type if result.config.spec else None,
        },
        "graph": {
            "nodes": result.graph.n_nodes,
            "edges": result.graph.n_edges,
            "density": result.graph.density,
        },
        "repetitions": [
            {"repetition": i, "size": len(s), "instance_ids": list(s.ids)}
            for i, s in enumerate(result.subsets)
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_selection(path, result: SelectionResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(selection_to_json(result))


def read_selection(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
