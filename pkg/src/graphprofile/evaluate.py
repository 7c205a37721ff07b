"""Downstream-task harness: clustering, classification, link prediction.

All metrics and models here are self-contained (numpy only): Lloyd's
k-means with k-means++ seeding, adjusted Rand index, a softmax-regression
classifier trained by full-batch gradient descent, and rank-based ROC
AUC. Everything is deterministic given its seed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetError


@dataclass(frozen=True)
class EmbeddingSet:
    ids: tuple[str, ...]
    vectors: np.ndarray  # (len(ids), dim)

    def __post_init__(self):
        if len(self.ids) != self.vectors.shape[0]:
            raise ValueError("ids and vector rows must align")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("embedding ids must be unique")

    def subset(self, idx: Sequence[int]) -> "EmbeddingSet":
        return EmbeddingSet(tuple(self.ids[i] for i in idx), self.vectors[list(idx)])


def read_embeddings_tsv(path: str | Path) -> EmbeddingSet:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"embeddings file not found: {path}")
    ids: list[str] = []
    rows: list[list[float]] = []
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if not header or header[0] != "record_id":
            raise DatasetError(f"{path}: expected a TSV header starting with 'record_id'")
        width = len(header) - 1
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != width + 1:
                raise DatasetError(f"{path}:{lineno}: expected {width + 1} columns, got {len(parts)}")
            ids.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    return EmbeddingSet(tuple(ids), np.asarray(rows, dtype=np.float64).reshape(len(ids), width))


def read_labels_csv(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"labels file not found: {path}")
    out: dict[str, str] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["record_id", "label"]:
            raise DatasetError(f"{path}: expected header 'record_id,label'")
        for row in reader:
            if len(row) != 2:
                raise DatasetError(f"{path}: malformed row {row!r}")
            out[row[0]] = row[1]
    return out


# ---------------------------------------------------------------------------
# k-means + ARI
# ---------------------------------------------------------------------------


@dataclass
class KMeansResult:
    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    inertia_history: list[float]


def kmeans(vectors: np.ndarray, k: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, Euclidean metric."""
    n = vectors.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, vectors.shape[1]))
    centers[0] = vectors[rng.integers(n)]
    d2 = ((vectors - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2 / total), rng.random(), side="right"))
            idx = min(idx, n - 1)
        else:
            # All remaining mass on chosen points (duplicates): pick any unchosen index.
            chosen = {int(np.flatnonzero((vectors == centers[j]).all(axis=1))[0]) for j in range(c)}
            remaining = [i for i in range(n) if i not in chosen]
            idx = remaining[int(rng.integers(len(remaining)))] if remaining else int(rng.integers(n))
        centers[c] = vectors[idx]
        d2 = np.minimum(d2, ((vectors - centers[c]) ** 2).sum(axis=1))

    assignments = np.zeros(n, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iter):
        dists = ((vectors[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dists.argmin(axis=1)
        inertia = float(dists[np.arange(n), new_assign].sum())
        history.append(inertia)
        for c in range(k):
            members = vectors[new_assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # Re-seed an empty cluster at the point farthest from its center.
                worst = int(dists[np.arange(n), new_assign].argmax())
                centers[c] = vectors[worst]
                new_assign[worst] = c
        if (new_assign == assignments).all() and len(history) > 1:
            assignments = new_assign
            break
        assignments = new_assign
    dists = ((vectors[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(dists[np.arange(n), assignments].sum())
    return KMeansResult(assignments, centers, inertia, history)


def ari(pred: Sequence, truth: Sequence) -> float:
    """Adjusted Rand index between two partitions of the same elements.

    Computed with exact integer arithmetic from the contingency table,
    with a single float division at the end; 1.0 for identical
    partitions, 0.0 expected for independent ones.
    """
    if len(pred) != len(truth):
        raise ValueError("partitions must cover the same elements")
    n = len(pred)
    if n == 0:
        return 1.0
    cells: dict[tuple, int] = {}
    a_count: dict = {}
    b_count: dict = {}
    for p, t in zip(pred, truth):
        cells[(p, t)] = cells.get((p, t), 0) + 1
        a_count[p] = a_count.get(p, 0) + 1
        b_count[t] = b_count.get(t, 0) + 1

    def c2(x: int) -> int:
        return x * (x - 1) // 2

    index = sum(c2(v) for v in cells.values())
    sum_a = sum(c2(v) for v in a_count.values())
    sum_b = sum(c2(v) for v in b_count.values())
    total = c2(n)
    # ARI = (index - sum_a*sum_b/total) / ((sum_a+sum_b)/2 - sum_a*sum_b/total),
    # scaled by 2*total to stay in integers.
    num = 2 * (total * index - sum_a * sum_b)
    den = total * (sum_a + sum_b) - 2 * sum_a * sum_b
    if den == 0:
        return 1.0 if num == 0 else 0.0
    return num / den


# ---------------------------------------------------------------------------
# Linear classifier + P/R/F
# ---------------------------------------------------------------------------


class LogisticClassifier:
    """Multinomial logistic regression, full-batch gradient descent, L2 penalty."""

    def __init__(self, l2: float = 1e-3, lr: float = 0.5, iters: int = 500):
        self.l2 = l2
        self.lr = lr
        self.iters = iters
        self.classes_: list = []
        self.weights: np.ndarray | None = None  # (num_classes, dim + 1)

    def fit(self, X: np.ndarray, y: Sequence) -> "LogisticClassifier":
        self.classes_ = sorted(set(y))
        idx = {c: i for i, c in enumerate(self.classes_)}
        yi = np.asarray([idx[v] for v in y])
        n, d = X.shape
        Xb = np.concatenate([X, np.ones((n, 1))], axis=1)
        W = np.zeros((len(self.classes_), d + 1))
        onehot = np.zeros((n, len(self.classes_)))
        onehot[np.arange(n), yi] = 1.0
        for _ in range(self.iters):
            logits = Xb @ W.T
            logits -= logits.max(axis=1, keepdims=True)
            expz = np.exp(logits)
            probs = expz / expz.sum(axis=1, keepdims=True)
            grad = (probs - onehot).T @ Xb / n + self.l2 * W
            W -= self.lr * grad
        self.weights = W
        return self

    def scores(self, X: np.ndarray) -> np.ndarray:
        Xb = np.concatenate([X, np.ones((X.shape[0], 1))], axis=1)
        return Xb @ self.weights.T

    def predict(self, X: np.ndarray) -> list:
        return [self.classes_[i] for i in self.scores(X).argmax(axis=1)]


def precision_recall_f1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def classify_eval(
    train_X: np.ndarray,
    train_y: Sequence,
    test_X: np.ndarray,
    test_y: Sequence,
) -> dict:
    """Train the built-in linear classifier and report P/R/F on the test set.

    Binary problems report the positive class (the lexicographically
    larger label); multiclass problems report macro averages.
    """
    train_classes = set(train_y)
    missing = sorted(set(test_y) - train_classes)
    if missing:
        raise ValueError(f"classes absent from the training set: {missing}")
    clf = LogisticClassifier().fit(train_X, train_y)
    pred = clf.predict(test_X)
    classes = sorted(train_classes)
    per_class = {}
    for c in classes:
        tp = sum(1 for p, t in zip(pred, test_y) if p == c and t == c)
        fp = sum(1 for p, t in zip(pred, test_y) if p == c and t != c)
        fn = sum(1 for p, t in zip(pred, test_y) if p != c and t == c)
        per_class[c] = precision_recall_f1(tp, fp, fn)
    if len(classes) == 2:
        pos = classes[1]
        p, r, f = per_class[pos]
        return {"precision": p, "recall": r, "f1": f, "positive_class": pos, "averaging": "binary"}
    ps, rs, fs = zip(*per_class.values())
    return {
        "precision": float(np.mean(ps)),
        "recall": float(np.mean(rs)),
        "f1": float(np.mean(fs)),
        "averaging": "macro",
    }


# ---------------------------------------------------------------------------
# Link prediction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecGraph:
    """Undirected recommendation graph over record ids."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        node_set = set(self.nodes)
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop at '{a}'")
            if a not in node_set or b not in node_set:
                raise ValueError(f"edge ({a},{b}) references an unknown node")


def read_edge_list(path: str | Path) -> list[tuple[str, str]]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"edge list not found: {path}")
    edges = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise DatasetError(f"{path}:{lineno}: expected 'id1<TAB>id2'")
            edges.append((parts[0], parts[1]))
    return edges


def auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    """ROC AUC via tie-averaged ranks (equal to pairwise ordering counts)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative examples")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    rank_sum = ranks[labels == 1].sum()
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _connected(nodes: Sequence[str], edges: Sequence[tuple[str, str]]) -> bool:
    if not nodes:
        return True
    adj: dict[str, list[str]] = {v: [] for v in nodes}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(nodes)


def split_edges_connected(
    graph: RecGraph, removal_frac: float, rng: np.random.Generator
) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Remove a fraction of edges while keeping the residual graph connected.

    A random spanning tree is protected; removals are drawn from the
    remaining edges. Returns (residual_edges, removed_edges).
    """
    if not _connected(graph.nodes, graph.edges):
        raise ValueError("recommendation graph must be connected")
    if not 0.0 < removal_frac < 1.0:
        raise ValueError("removal fraction must be in (0, 1)")
    n_remove = int(round(removal_frac * len(graph.edges)))
    order = rng.permutation(len(graph.edges))
    parent = {v: v for v in graph.nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    tree: set[int] = set()
    for ei in order:
        a, b = graph.edges[ei]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.add(int(ei))
    removable = [i for i in order.tolist() if i not in tree]
    if n_remove > len(removable):
        raise ValueError(
            f"cannot remove {n_remove} edges and stay connected (only {len(removable)} non-tree edges)"
        )
    removed_idx = set(removable[:n_remove])
    residual = [e for i, e in enumerate(graph.edges) if i not in removed_idx]
    removed = [graph.edges[i] for i in sorted(removed_idx)]
    return residual, removed


def link_predict_eval(
    embeddings: EmbeddingSet,
    graph: RecGraph,
    removal_frac: float,
    seed: int = 0,
    negative_ratio: float = 1.0,
    folds: int = 5,
) -> dict:
    """Edge-removal link prediction with element-wise-product edge features.

    Removed edges are positives; an equal number (times ``negative_ratio``)
    of uniformly sampled non-edges are negatives. The built-in linear
    classifier scores edges over a seeded k-fold split; the mean ROC AUC
    across folds is returned.
    """
    missing = [v for v in graph.nodes if v not in embeddings.ids]
    if missing:
        raise ValueError(f"graph nodes missing from the embedding set: {missing[:3]}")
    rng = np.random.default_rng(seed)
    _, removed = split_edges_connected(graph, removal_frac, rng)

    row = {rid: i for i, rid in enumerate(embeddings.ids)}
    edge_set = {frozenset(e) for e in graph.edges}
    n_neg = int(round(len(removed) * negative_ratio))
    nodes = list(graph.nodes)
    negatives: list[tuple[str, str]] = []
    seen: set[frozenset] = set()
    attempts = 0
    while len(negatives) < n_neg and attempts < 200 * n_neg + 200:
        a = nodes[int(rng.integers(len(nodes)))]
        b = nodes[int(rng.integers(len(nodes)))]
        attempts += 1
        key = frozenset((a, b))
        if a == b or key in edge_set or key in seen:
            continue
        seen.add(key)
        negatives.append((a, b))
    if len(negatives) < n_neg:
        raise ValueError("could not sample enough non-edges")

    pairs = removed + negatives
    labels = np.concatenate([np.ones(len(removed)), np.zeros(len(negatives))]).astype(np.int64)
    feats = np.stack([embeddings.vectors[row[a]] * embeddings.vectors[row[b]] for a, b in pairs])

    order = rng.permutation(len(pairs))
    fold_ids = np.array_split(order, folds)
    aucs = []
    for f in range(folds):
        test_idx = fold_ids[f]
        train_idx = np.concatenate([fold_ids[j] for j in range(folds) if j != f])
        if labels[train_idx].min() == labels[train_idx].max() or labels[test_idx].min() == labels[test_idx].max():
            continue  # degenerate fold on tiny inputs
        clf = LogisticClassifier().fit(feats[train_idx], labels[train_idx].tolist())
        scores = clf.scores(feats[test_idx])[:, 1] - clf.scores(feats[test_idx])[:, 0]
        aucs.append(auc_score(scores, labels[test_idx]))
    if not aucs:
        raise ValueError("all folds were degenerate; too few edges for link prediction")
    return {
        "auc": float(np.mean(aucs)),
        "removed_edges": len(removed),
        "negatives": len(negatives),
        "folds_used": len(aucs),
    }
