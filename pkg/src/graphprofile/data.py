"""Domain types, JSONL dataset IO, validation, and synthetic data generation.

A dataset is a list of records; each record carries one directed,
node-labeled dependency graph per semantic view plus an optional set of
class labels. The on-disk format is JSON Lines, one record per line:

    {"id": "app1", "labels": ["famA"],
     "graphs": {"api": {"labels": ["L1", "L2"], "edges": [[0, 1]]}, ...}}

Node count is implied by the length of the per-graph ``labels`` array.
The view list is not stored in the file; it comes from config (or is
inferred from the file when not given).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DatasetError

logger = logging.getLogger(__name__)

DEFAULT_VIEWS = ("api", "perm", "srcsink")


@dataclass(frozen=True)
class DependencyGraph:
    """Directed node-labeled graph; nodes are the indices 0..len(node_labels)."""

    view_name: str
    node_labels: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def num_nodes(self) -> int:
        return len(self.node_labels)

    def label(self, node: int) -> str:
        return self.node_labels[node]

    def out_neighbors(self) -> list[list[int]]:
        """Adjacency lists over outgoing edges, in edge-list order."""
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for src, dst in self.edges:
            adj[src].append(dst)
        return adj


def empty_graph(view_name: str) -> DependencyGraph:
    return DependencyGraph(view_name, (), ())


@dataclass(frozen=True)
class GraphRecord:
    """One embeddable unit: a record id, per-view graphs, optional labels."""

    id: str
    graphs: Mapping[str, DependencyGraph]
    labels: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Dataset:
    views: tuple[str, ...]
    records: tuple[GraphRecord, ...]
    label_alphabet: frozenset[str] = field(init=False)

    def __post_init__(self):
        alphabet = frozenset().union(*(r.labels for r in self.records)) if self.records else frozenset()
        object.__setattr__(self, "label_alphabet", alphabet)

    def __len__(self) -> int:
        return len(self.records)

    def record_ids(self) -> list[str]:
        return [r.id for r in self.records]


@dataclass(frozen=True)
class ValidationReport:
    """First violated invariant (if any) plus non-fatal notes."""

    violation: str | None = None
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.violation is None


def validate(record: GraphRecord, views: Sequence[str]) -> ValidationReport:
    """Check one record's structural invariants against the declared view list.

    Returns the first violation with a path to the offending field.
    Self-loops are accepted but reported in ``notes``.
    """
    notes: list[str] = []
    for view_name, graph in record.graphs.items():
        if view_name not in views:
            return ValidationReport(f"graphs['{view_name}']: unknown view (declared: {list(views)})", tuple(notes))
        n = graph.num_nodes
        seen: set[tuple[int, int]] = set()
        for i, (src, dst) in enumerate(graph.edges):
            if not (0 <= src < n) or not (0 <= dst < n):
                return ValidationReport(
                    f"graphs['{view_name}'].edges[{i}]: endpoint ({src},{dst}) out of range for {n} nodes",
                    tuple(notes),
                )
            if (src, dst) in seen:
                return ValidationReport(
                    f"graphs['{view_name}'].edges[{i}]: duplicate edge ({src},{dst})", tuple(notes)
                )
            seen.add((src, dst))
            if src == dst:
                notes.append(f"graphs['{view_name}'].edges[{i}]: self-loop at node {src}")
    return ValidationReport(None, tuple(notes))


def _parse_graph(view_name: str, obj, where: str) -> DependencyGraph:
    if not isinstance(obj, dict):
        raise DatasetError(f"{where}: graph for view '{view_name}' must be an object")
    labels = obj.get("labels")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise DatasetError(f"{where}: graphs['{view_name}'].labels must be a list of strings")
    edges_raw = obj.get("edges", [])
    if not isinstance(edges_raw, list):
        raise DatasetError(f"{where}: graphs['{view_name}'].edges must be a list of [src, dst] pairs")
    edges = []
    for i, e in enumerate(edges_raw):
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in e)
        ):
            raise DatasetError(f"{where}: graphs['{view_name}'].edges[{i}] is not an [src, dst] integer pair")
        edges.append((e[0], e[1]))
    return DependencyGraph(view_name, tuple(labels), tuple(edges))


def parse_record(line: str, where: str) -> GraphRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{where}: invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
        raise DatasetError(f"{where}: record must be an object with a string 'id'")
    rid = obj["id"]
    labels_raw = obj.get("labels", [])
    if not isinstance(labels_raw, list) or not all(isinstance(x, str) for x in labels_raw):
        raise DatasetError(f"{where}: record '{rid}': 'labels' must be a list of strings")
    graphs_raw = obj.get("graphs", {})
    if not isinstance(graphs_raw, dict):
        raise DatasetError(f"{where}: record '{rid}': 'graphs' must be an object")
    graphs = {v: _parse_graph(v, g, f"{where}: record '{rid}'") for v, g in graphs_raw.items()}
    return GraphRecord(rid, graphs, frozenset(labels_raw))


def load_dataset(path: str | Path, views: Sequence[str] | None = None) -> Dataset:
    """Read a JSON-Lines dataset, validating every record.

    ``views`` declares the view list; when None it is inferred from the
    file in first-appearance order. A record missing a declared view gets
    an empty graph substituted (with a warning), so training degrades
    gracefully when an extractor failed for one view.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    records: list[GraphRecord] = []
    seen_ids: set[str] = set()
    inferred: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = parse_record(line, f"line {lineno}")
            if record.id in seen_ids:
                raise DatasetError(f"line {lineno}: duplicate record id '{record.id}'")
            seen_ids.add(record.id)
            for v in record.graphs:
                if v not in inferred:
                    inferred.append(v)
            records.append(record)

    declared = tuple(views) if views is not None else tuple(inferred)
    filled: list[GraphRecord] = []
    for lineno, record in enumerate(records, start=1):
        report = validate(record, declared)
        if not report.ok:
            raise DatasetError(f"record '{record.id}': {report.violation}")
        for note in report.notes:
            logger.info("record '%s': %s", record.id, note)
        missing = [v for v in declared if v not in record.graphs]
        if missing:
            logger.warning("record '%s': missing views %s, substituting empty graphs", record.id, missing)
            graphs = dict(record.graphs)
            for v in missing:
                graphs[v] = empty_graph(v)
            record = GraphRecord(record.id, graphs, record.labels)
        filled.append(record)
    return Dataset(declared, tuple(filled))


def record_to_json(record: GraphRecord, views: Sequence[str]) -> str:
    graphs = {}
    for v in views:
        g = record.graphs.get(v)
        if g is None or (g.num_nodes == 0 and not g.edges):
            continue
        graphs[v] = {"labels": list(g.node_labels), "edges": [list(e) for e in g.edges]}
    obj = {"id": record.id, "labels": sorted(record.labels), "graphs": graphs}
    return json.dumps(obj, separators=(",", ":"))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Inverse of load_dataset; record order and edge order are preserved."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in dataset.records:
            fh.write(record_to_json(record, dataset.views))
            fh.write("\n")


def dataset_to_bytes(dataset: Dataset) -> bytes:
    lines = [record_to_json(r, dataset.views) for r in dataset.records]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


# ---------------------------------------------------------------------------
# Synthetic datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """Desk-scale synthetic dataset with a planted per-class token signal.

    Each class prefers a disjoint slice of the node-label alphabet; a node
    draws its label from the class slice with probability
    ``class_signal_strength`` and uniformly from the whole alphabet
    otherwise, so rooted-subgraph distributions separate by class with
    controllable strength. ``view_signal_split`` restricts which views
    carry which classes' signal (views not listed for a class draw that
    class's labels from the background distribution).
    """

    num_classes: int
    records_per_class: int
    nodes_per_graph: int
    label_alphabet_size: int
    class_signal_strength: float
    view_signal_split: Mapping[str, tuple[int, ...]] | None = None
    views: tuple[str, ...] = DEFAULT_VIEWS
    edges_per_node: float = 2.0
    seed: int = 0

    def validated(self) -> "SynthConfig":
        for name in ("num_classes", "records_per_class", "nodes_per_graph", "label_alphabet_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"SynthConfig.{name} must be positive")
        if not 0.0 <= self.class_signal_strength <= 1.0:
            raise ConfigError("SynthConfig.class_signal_strength must be in [0, 1]")
        if not self.views:
            raise ConfigError("SynthConfig.views must be nonempty")
        if self.edges_per_node < 0:
            raise ConfigError("SynthConfig.edges_per_node must be nonnegative")
        if self.view_signal_split is not None:
            for v, classes in self.view_signal_split.items():
                if v not in self.views:
                    raise ConfigError(f"view_signal_split names unknown view '{v}'")
                for c in classes:
                    if not 0 <= c < self.num_classes:
                        raise ConfigError(f"view_signal_split class {c} out of range")
        return self


def _random_edges(rng: np.random.Generator, num_nodes: int, target: int) -> tuple[tuple[int, int], ...]:
    # No self-loops or parallel duplicates; may fall short on tiny graphs.
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    attempts = 0
    max_attempts = 20 * target + 20
    while len(edges) < target and attempts < max_attempts:
        src = int(rng.integers(num_nodes))
        dst = int(rng.integers(num_nodes))
        attempts += 1
        if src == dst or (src, dst) in seen:
            continue
        seen.add((src, dst))
        edges.append((src, dst))
    return tuple(edges)


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Generate a labeled dataset; a pure function of the config.

    Records are emitted in round-robin class order (class0, class1, ...,
    class0, ...), so any prefix of the dataset is class-balanced. Every
    record carries its class name as a label; strip labels downstream for
    unsupervised experiments.
    """
    cfg = cfg.validated()
    rng = np.random.default_rng(cfg.seed)
    alphabet = [f"L{i}" for i in range(cfg.label_alphabet_size)]
    # Round-robin slice of the alphabet per class; nonempty when alphabet >= classes.
    preferred = {
        c: [i for i in range(cfg.label_alphabet_size) if i % cfg.num_classes == c] or [c % cfg.label_alphabet_size]
        for c in range(cfg.num_classes)
    }
    target_edges = int(round(cfg.edges_per_node * cfg.nodes_per_graph))

    records: list[GraphRecord] = []
    for r in range(cfg.records_per_class):
        for c in range(cfg.num_classes):
            graphs = {}
            for view in cfg.views:
                if cfg.view_signal_split is None:
                    carries = True
                else:
                    carries = c in cfg.view_signal_split.get(view, ())
                labels = []
                for _ in range(cfg.nodes_per_graph):
                    if carries and rng.random() < cfg.class_signal_strength:
                        pool = preferred[c]
                        labels.append(alphabet[pool[int(rng.integers(len(pool)))]])
                    else:
                        labels.append(alphabet[int(rng.integers(cfg.label_alphabet_size))])
                edges = _random_edges(rng, cfg.nodes_per_graph, target_edges)
                graphs[view] = DependencyGraph(view, tuple(labels), edges)
            records.append(GraphRecord(f"class{c}_r{r:03d}", graphs, frozenset({f"class{c}"})))
    return Dataset(tuple(cfg.views), tuple(records))


def true_class(record_id: str) -> str:
    """Ground-truth class of a synthetic record, recoverable after label stripping."""
    return record_id.split("_")[0]


def drop_labels(dataset: Dataset) -> Dataset:
    records = tuple(GraphRecord(r.id, r.graphs, frozenset()) for r in dataset.records)
    return Dataset(dataset.views, records)


def subsample_labels(dataset: Dataset, fraction: float, seed: int = 0) -> Dataset:
    """Keep labels on a random ``fraction`` of the labeled records, strip the rest."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError("label fraction must be in [0, 1]")
    labeled = [i for i, r in enumerate(dataset.records) if r.labels]
    keep_n = int(round(fraction * len(labeled)))
    rng = np.random.default_rng(seed)
    keep = set(rng.permutation(len(labeled))[:keep_n].tolist())
    keep_idx = {labeled[j] for j in keep}
    records = tuple(
        r if i in keep_idx or not r.labels else GraphRecord(r.id, r.graphs, frozenset())
        for i, r in enumerate(dataset.records)
    )
    return Dataset(dataset.views, records)
