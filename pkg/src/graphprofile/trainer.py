"""Skipgram training over multi-view rooted-subgraph contexts.

One shared input row per record (and per class label, when labels are
present) is trained to predict the record's subgraph tokens in every
view; each view owns its vocabulary, noise distribution, and hash-
embedded output layer. The softmax over a view's vocabulary is never
materialized: each (input row, token) pair takes one negative-sampling
SGD step

    loss = -log sigmoid(u . v+) - sum_j log sigmoid(-u . v_j)

with the negatives drawn from the view's own noise distribution
("view" mode) or from the union distribution across views ("global"
mode). Label steps reuse the record's context tokens and are scaled by
``label_weight``.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, GraphRecord
from .errors import ConfigError, NumericError, VocabularyError
from .hashembed import HashEmbeddingTable, init_table, plain_embedding_matrix
from .vocab import NoiseTable, UnionNoiseTable, Vocabulary, build_vocab
from .wl import token_texts_by_degree

_MAX_REDRAW_ROUNDS = 100

StepHook = Callable[[str, int, list[tuple[str, int]]], None]


@dataclass(frozen=True)
class TrainConfig:
    max_degree: int = 2
    dim: int = 64
    epochs: int = 100
    num_buckets: int | None = None  # None: ceil(distinct tokens / 10) per view
    num_hashes: int = 2
    learning_rate: float = 0.1
    min_learning_rate: float | None = None  # None: 1e-4 * learning_rate
    negatives: int = 2
    smoothing: float = 0.75
    label_weight: float = 1.0
    negative_mode: str = "view"  # "view" | "global"
    train_views: tuple[str, ...] | None = None  # None: all dataset views
    vocab_mode: str = "dict"  # "dict" | "hash"
    hash_capacity: int = 2**22
    exclude_context: bool = False  # exclude the whole context set, not just the positive
    seed: int = 0
    threads: int = 1

    def validated(self) -> "TrainConfig":
        if self.max_degree < 0:
            raise ConfigError("max_degree must be >= 0")
        if self.dim <= 0:
            raise ConfigError("dim must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.num_buckets is not None and self.num_buckets <= 0:
            raise ConfigError("num_buckets must be positive")
        if self.num_hashes <= 0:
            raise ConfigError("num_hashes must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.min_learning_rate is not None and not 0 <= self.min_learning_rate <= self.learning_rate:
            raise ConfigError("min_learning_rate must be in [0, learning_rate]")
        if self.negatives < 0:
            raise ConfigError("negatives must be >= 0")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be >= 0")
        if not 0.0 <= self.label_weight <= 1.0:
            raise ConfigError("label_weight must be in [0, 1]")
        if self.negative_mode not in ("view", "global"):
            raise ConfigError("negative_mode must be 'view' or 'global'")
        if self.vocab_mode not in ("dict", "hash"):
            raise ConfigError("vocab_mode must be 'dict' or 'hash'")
        if self.hash_capacity <= 0:
            raise ConfigError("hash_capacity must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self

    @property
    def floor_lr(self) -> float:
        return self.min_learning_rate if self.min_learning_rate is not None else 1e-4 * self.learning_rate


@dataclass
class Model:
    """Trained parameters: record/label input rows plus per-view output layers."""

    config: TrainConfig
    views: tuple[str, ...]
    record_ids: list[str]
    label_names: list[str]
    record_vecs: np.ndarray
    label_vecs: np.ndarray
    vocabs: dict[str, Vocabulary]
    tables: dict[str, HashEmbeddingTable]

    def __post_init__(self):
        self.record_rows = {rid: i for i, rid in enumerate(self.record_ids)}
        self.label_rows = {name: i for i, name in enumerate(self.label_names)}

    @property
    def dim(self) -> int:
        return self.record_vecs.shape[1]

    def embedding_of(self, record_id: str) -> np.ndarray:
        return self.record_vecs[self.record_rows[record_id]]

    def register_record(self, record_id: str, vec: np.ndarray) -> None:
        """Add or replace a record row (online mode)."""
        row = self.record_rows.get(record_id)
        if row is None:
            self.record_rows[record_id] = len(self.record_ids)
            self.record_ids.append(record_id)
            self.record_vecs = np.vstack([self.record_vecs, vec[None, :]])
        else:
            self.record_vecs[row] = vec


@dataclass
class EpochStats:
    epoch: int
    record_loss_per_view: dict[str, float]
    label_loss: float
    steps: int
    seconds: float


# ---------------------------------------------------------------------------
# Step math
# ---------------------------------------------------------------------------


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x):
    return np.logaddexp(0.0, x)


def step_loss(u: np.ndarray, table: HashEmbeddingTable, pos_id: int, neg_ids: Sequence[int]) -> float:
    """Negative-sampling loss of one step at the current parameters."""
    ids = np.concatenate([[pos_id], np.asarray(neg_ids, dtype=np.int64)]).astype(np.int64)
    _, _, _, vecs = table.lookup(ids)
    dots = vecs @ u
    return float(_softplus(-dots[0]) + _softplus(dots[1:]).sum())


@dataclass
class StepGradients:
    """Exact gradients of the step loss at the evaluation point.

    ``importances`` maps (token id, hash index) to a scalar;
    ``components`` maps a bucket row to its accumulated gradient vector.
    Duplicate negatives and colliding buckets are summed, so applying
    ``-lr * grad`` reproduces a simultaneous SGD step exactly.
    """

    loss: float
    input_row: np.ndarray
    importances: dict[tuple[int, int], float]
    components: dict[int, np.ndarray]


def step_gradients(
    u: np.ndarray, table: HashEmbeddingTable, pos_id: int, neg_ids: Sequence[int]
) -> StepGradients:
    ids = np.concatenate([[pos_id], np.asarray(neg_ids, dtype=np.int64)]).astype(np.int64)
    bkts, ps, comps, vecs = table.lookup(ids)
    dots = vecs @ u
    g = _sigmoid(dots)
    g[0] -= 1.0
    loss = float(_softplus(-dots[0]) + _softplus(dots[1:]).sum())
    grad_u = vecs.T @ g
    grad_p = (comps @ u) * g[:, None]  # (m, k)
    coef = ps * g[:, None]  # (m, k)
    grad_imp: dict[tuple[int, int], float] = {}
    grad_comp: dict[int, np.ndarray] = {}
    k = table.num_hashes
    for m in range(len(ids)):
        tid = int(ids[m])
        for i in range(k):
            key = (tid, i)
            grad_imp[key] = grad_imp.get(key, 0.0) + float(grad_p[m, i])
            b = int(bkts[m, i])
            if b in grad_comp:
                grad_comp[b] = grad_comp[b] + coef[m, i] * u
            else:
                grad_comp[b] = coef[m, i] * u
    return StepGradients(loss, grad_u, grad_imp, grad_comp)


def _apply_step_view(
    u: np.ndarray,
    table: HashEmbeddingTable,
    ids: np.ndarray,
    lr: float,
    update_outputs: bool = True,
) -> float:
    """One negative-sampling step within a single view's table; in-place.

    ``ids[0]`` is the positive, the rest are negatives. All parameter
    reads use pre-update values, making the update the exact gradient of
    the step loss even under bucket collisions or duplicate negatives.
    """
    bkts, ps, comps, vecs = table.lookup(ids)
    dots = vecs @ u
    g = _sigmoid(dots)
    g[0] -= 1.0
    loss = float(_softplus(-dots[0]) + _softplus(dots[1:]).sum())
    if update_outputs:
        u_before = u.copy()
        u -= lr * (vecs.T @ g)
        np.subtract.at(table.importances, ids, (lr * (comps @ u_before)) * g[:, None])
        np.subtract.at(
            table.components,
            bkts.reshape(-1),
            np.outer((ps * g[:, None]).reshape(-1), lr * u_before),
        )
    else:
        u -= lr * (vecs.T @ g)
    return loss


def _apply_step_global(
    u: np.ndarray,
    tables: Sequence[HashEmbeddingTable],
    token_views: np.ndarray,
    token_ids: np.ndarray,
    lr: float,
    update_outputs: bool = True,
) -> float:
    """Like _apply_step_view but tokens may live in different views' tables."""
    m = len(token_ids)
    dim = u.shape[0]
    vecs = np.empty((m, dim))
    gathered = []
    for j in range(m):
        table = tables[token_views[j]]
        bk = table.buckets[token_ids[j]]
        pj = table.importances[token_ids[j]].copy()
        cj = table.components[bk].copy()
        gathered.append((table, bk, pj, cj))
        vecs[j] = pj @ cj
    dots = vecs @ u
    g = _sigmoid(dots)
    g[0] -= 1.0
    loss = float(_softplus(-dots[0]) + _softplus(dots[1:]).sum())
    u_before = u.copy()
    u -= lr * (vecs.T @ g)
    if update_outputs:
        for j in range(m):
            table, bk, pj, cj = gathered[j]
            table.importances[token_ids[j]] -= lr * g[j] * (cj @ u_before)
            np.subtract.at(table.components, bk, np.outer(lr * g[j] * pj, u_before))
    return loss


# ---------------------------------------------------------------------------
# Negative drawing (batched per record and view)
# ---------------------------------------------------------------------------


def _draw_negatives_matrix(
    noise: NoiseTable,
    rng: np.random.Generator,
    pos_ids: np.ndarray,
    eta: int,
    exclude_set: np.ndarray | None = None,
) -> np.ndarray:
    """(len(pos_ids), eta) negatives; row t may not contain pos_ids[t]
    (or any member of ``exclude_set`` when the stricter exclusion is on)."""
    n = len(pos_ids)
    out = noise.draw(rng, n * eta).reshape(n, eta)
    if n == 0 or eta == 0:
        return out
    def bad(draws):
        if exclude_set is not None:
            return np.isin(draws, exclude_set)
        return draws == pos_ids[:, None]
    mask = bad(out)
    rounds = 0
    while mask.any():
        rounds += 1
        if rounds > _MAX_REDRAW_ROUNDS:
            raise VocabularyError("no valid negative after 100 redraws; noise distribution too constrained")
        out[mask] = noise.draw(rng, int(mask.sum()))
        mask = bad(out)
    return out


def _draw_union_matrix(
    union: UnionNoiseTable,
    rng: np.random.Generator,
    view_index: int,
    pos_ids: np.ndarray,
    eta: int,
    exclude_set: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    n = len(pos_ids)
    views, ids = union.draw(rng, n * eta)
    views = views.reshape(n, eta)
    ids = ids.reshape(n, eta)
    if n == 0 or eta == 0:
        return views, ids
    def bad(vs, ds):
        if exclude_set is not None:
            return (vs == view_index) & np.isin(ds, exclude_set)
        return (vs == view_index) & (ds == pos_ids[:, None])
    mask = bad(views, ids)
    rounds = 0
    while mask.any():
        rounds += 1
        if rounds > _MAX_REDRAW_ROUNDS:
            raise VocabularyError("no valid negative after 100 redraws; noise distribution too constrained")
        m = int(mask.sum())
        views[mask], ids[mask] = union.draw(rng, m)
        mask = bad(views, ids)
    return views, ids


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _context_token_texts(record: GraphRecord, views: Sequence[str], max_degree: int) -> list[list[str]]:
    """Flattened token texts per view (node-major, degree-minor)."""
    out = []
    for view in views:
        graph = record.graphs.get(view)
        if graph is None or graph.num_nodes == 0:
            out.append([])
            continue
        levels = token_texts_by_degree(graph, max_degree)
        out.append([levels[d][n] for n in range(graph.num_nodes) for d in range(max_degree + 1)])
    return out


def _resolve_views(dataset: Dataset, cfg: TrainConfig) -> tuple[str, ...]:
    if cfg.train_views is None:
        return tuple(dataset.views)
    unknown = [v for v in cfg.train_views if v not in dataset.views]
    if unknown:
        raise ConfigError(f"train_views {unknown} not in dataset views {list(dataset.views)}")
    if not cfg.train_views:
        raise ConfigError("train_views must name at least one view")
    return tuple(cfg.train_views)


class _Trainer:
    def __init__(self, dataset: Dataset, cfg: TrainConfig, step_hook: StepHook | None = None):
        self.cfg = cfg.validated()
        self.views = _resolve_views(dataset, cfg)
        self.dataset = dataset
        self.step_hook = step_hook

        texts = [_context_token_texts(r, self.views, cfg.max_degree) for r in dataset.records]
        self.vocabs: dict[str, Vocabulary] = {}
        for vi, view in enumerate(self.views):
            stream = (t for per_record in texts for t in per_record[vi])
            vocab = build_vocab(
                stream, view, cfg.smoothing, mode=cfg.vocab_mode,
                capacity=cfg.hash_capacity if cfg.vocab_mode == "hash" else None,
            )
            if vocab.num_distinct == 0:
                raise VocabularyError(f"empty vocabulary for view '{view}'")
            self.vocabs[view] = vocab
        self.contexts: list[list[np.ndarray]] = [
            [
                np.asarray([self.vocabs[view].id_of_text(t) for t in per_record[vi]], dtype=np.int64)
                for vi, view in enumerate(self.views)
            ]
            for per_record in texts
        ]

        seq = np.random.SeedSequence(cfg.seed)
        ss_records, ss_labels, ss_shuffle, ss_negatives, ss_tables = seq.spawn(5)
        self.label_names = sorted(dataset.label_alphabet)
        self.record_vecs = plain_embedding_matrix(len(dataset.records), cfg.dim, ss_records)
        self.label_vecs = plain_embedding_matrix(len(self.label_names), cfg.dim, ss_labels)
        self.shuffle_rng = np.random.default_rng(ss_shuffle)
        self.neg_rng = np.random.default_rng(ss_negatives)

        self.tables: dict[str, HashEmbeddingTable] = {}
        for view, table_seq in zip(self.views, ss_tables.spawn(len(self.views))):
            vocab = self.vocabs[view]
            buckets = cfg.num_buckets if cfg.num_buckets is not None else max(1, -(-vocab.num_distinct // 10))
            self.tables[view] = init_table(
                vocab.capacity, buckets, cfg.dim, cfg.num_hashes, table_seq, view_name=view
            )

        self.union = UnionNoiseTable([self.vocabs[v] for v in self.views]) if cfg.negative_mode == "global" else None

        label_rows = {name: i for i, name in enumerate(self.label_names)}
        self.record_label_rows = [
            [label_rows[l] for l in sorted(r.labels)] if cfg.label_weight > 0 else []
            for r in dataset.records
        ]
        self.tokens_per_record = [sum(len(ids) for ids in ctx) for ctx in self.contexts]
        self.total_steps = cfg.epochs * sum(self.tokens_per_record)
        self.degenerate_views = sum(1 for ctx in self.contexts for ids in ctx if len(ids) == 0)

    def lr_at(self, step: int) -> float:
        cfg = self.cfg
        if self.total_steps <= 1:
            return cfg.learning_rate
        frac = step / self.total_steps
        return cfg.learning_rate - (cfg.learning_rate - cfg.floor_lr) * frac

    def _record_pass(self, ridx: int, step_base: int, rng: np.random.Generator, stats) -> int:
        """All SGD steps contributed by one record in one epoch; returns steps taken."""
        cfg = self.cfg
        eta = cfg.negatives
        u = self.record_vecs[ridx]
        label_rows = self.record_label_rows[ridx]
        beta = cfg.label_weight
        taken = 0
        for vi, view in enumerate(self.views):
            pos = self.contexts[ridx][vi]
            n_tok = len(pos)
            if n_tok == 0:
                continue
            table = self.tables[view]
            reps = 1 + len(label_rows)
            pos_rep = np.tile(pos, reps)
            exclude_set = np.unique(pos) if cfg.exclude_context else None
            if self.union is None:
                negs = _draw_negatives_matrix(self.vocabs[view].noise, rng, pos_rep, eta, exclude_set)
                ids_mat = np.concatenate([pos_rep[:, None], negs], axis=1)
                for t in range(n_tok):
                    lr = self.lr_at(step_base + taken)
                    loss = _apply_step_view(u, table, ids_mat[t], lr)
                    if self.step_hook is not None:
                        self.step_hook(view, int(pos[t]), [(view, int(x)) for x in ids_mat[t, 1:]])
                    stats[0][vi] += loss
                    stats[1][vi] += 1
                    for li, lrow in enumerate(label_rows):
                        row = ids_mat[(li + 1) * n_tok + t]
                        l_loss = _apply_step_view(self.label_vecs[lrow], table, row, lr * beta)
                        if self.step_hook is not None:
                            self.step_hook(view, int(pos[t]), [(view, int(x)) for x in row[1:]])
                        stats[2][0] += l_loss
                        stats[2][1] += 1
                    taken += 1
            else:
                neg_views, neg_ids = _draw_union_matrix(self.union, rng, vi, pos_rep, eta, exclude_set)
                tviews = np.concatenate([np.full((len(pos_rep), 1), vi, dtype=np.int64), neg_views], axis=1)
                tids = np.concatenate([pos_rep[:, None], neg_ids], axis=1)
                tables = [self.tables[v] for v in self.views]
                for t in range(n_tok):
                    lr = self.lr_at(step_base + taken)
                    loss = _apply_step_global(u, tables, tviews[t], tids[t], lr)
                    if self.step_hook is not None:
                        pairs = [(self.views[v], int(x)) for v, x in zip(tviews[t, 1:], tids[t, 1:])]
                        self.step_hook(view, int(pos[t]), pairs)
                    stats[0][vi] += loss
                    stats[1][vi] += 1
                    for li, lrow in enumerate(label_rows):
                        r = (li + 1) * n_tok + t
                        l_loss = _apply_step_global(
                            self.label_vecs[lrow], tables, tviews[r], tids[r], lr * beta
                        )
                        if self.step_hook is not None:
                            pairs = [(self.views[v], int(x)) for v, x in zip(tviews[r, 1:], tids[r, 1:])]
                            self.step_hook(view, int(pos[t]), pairs)
                        stats[2][0] += l_loss
                        stats[2][1] += 1
                    taken += 1
        return taken

    def _check_finite(self) -> None:
        arrays = [self.record_vecs, self.label_vecs]
        for view in self.views:
            arrays.extend([self.tables[view].components, self.tables[view].importances])
        for arr in arrays:
            if arr.size and not np.isfinite(arr).all():
                raise NumericError("non-finite values in trained parameters")

    def run(self, epoch_callback: Callable[[EpochStats], None] | None = None) -> Model:
        step = 0
        for epoch in range(self.cfg.epochs):
            t0 = time.perf_counter()
            order = self.shuffle_rng.permutation(len(self.dataset.records))
            stats = [
                [0.0] * len(self.views),  # record-branch loss sums per view
                [0] * len(self.views),  # record-branch step counts per view
                [0.0, 0],  # label-branch loss sum / count
            ]
            if self.cfg.threads == 1:
                for ridx in order:
                    step += self._record_pass(int(ridx), step, self.neg_rng, stats)
            else:
                step = self._run_epoch_hogwild(order, step, stats)
            self._check_finite()
            if epoch_callback is not None:
                per_view = {
                    view: (stats[0][vi] / stats[1][vi] if stats[1][vi] else 0.0)
                    for vi, view in enumerate(self.views)
                }
                label_mean = stats[2][0] / stats[2][1] if stats[2][1] else 0.0
                epoch_callback(
                    EpochStats(epoch, per_view, label_mean, sum(stats[1]), time.perf_counter() - t0)
                )
        return Model(
            self.cfg,
            self.views,
            [r.id for r in self.dataset.records],
            self.label_names,
            self.record_vecs,
            self.label_vecs,
            self.vocabs,
            self.tables,
        )

    def _run_epoch_hogwild(self, order: np.ndarray, step: int, stats) -> int:
        """Unsynchronized parallel updates; final quality, not bitwise state,
        is the contract in this mode."""
        n_threads = self.cfg.threads
        shards = np.array_split(order, n_threads)
        rngs = [np.random.default_rng(s) for s in np.random.SeedSequence((self.cfg.seed, step)).spawn(n_threads)]
        counter = [step]

        def work(shard, rng):
            for ridx in shard:
                taken = self._record_pass(int(ridx), counter[0], rng, stats)
                counter[0] += taken  # benign race: lr schedule is approximate in hogwild mode

        threads = [threading.Thread(target=work, args=(sh, rng)) for sh, rng in zip(shards, rngs)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        return counter[0]


def train(
    dataset: Dataset,
    cfg: TrainConfig,
    epoch_callback: Callable[[EpochStats], None] | None = None,
    step_hook: StepHook | None = None,
) -> Model:
    """Train input-row embeddings for every record in the dataset.

    Deterministic for a given seed when ``threads == 1``: the shuffle
    order, all initializations, and every negative draw derive from
    ``cfg.seed``. With ``label_weight == 0`` the label branch is skipped
    entirely (no RNG draws), so the result is bit-identical to training
    on the same dataset with all labels removed.
    """
    if not dataset.records:
        raise ConfigError("cannot train on an empty dataset")
    return _Trainer(dataset, cfg, step_hook).run(epoch_callback)


def sgd_step(
    model: Model,
    u: np.ndarray,
    token_id: int,
    view: str,
    lr: float,
    rng: np.random.Generator,
    scale: float = 1.0,
    update_outputs: bool = True,
) -> float:
    """One negative-sampling step of an input row against one context token."""
    if view not in model.vocabs:
        raise ConfigError(f"unknown view '{view}'")
    eta = model.config.negatives
    if model.config.negative_mode == "global":
        union = UnionNoiseTable([model.vocabs[v] for v in model.views])
        vi = model.views.index(view)
        neg_views, neg_ids = union.sample(rng, eta, exclude=(vi, token_id))
        tviews = np.concatenate([[vi], neg_views]).astype(np.int64)
        tids = np.concatenate([[token_id], neg_ids]).astype(np.int64)
        tables = [model.tables[v] for v in model.views]
        return _apply_step_global(u, tables, tviews, tids, lr * scale, update_outputs)
    negs = model.vocabs[view].noise.sample(rng, eta, exclude=token_id)
    ids = np.concatenate([[token_id], negs]).astype(np.int64)
    return _apply_step_view(u, model.tables[view], ids, lr * scale, update_outputs)


def embed_online(
    record: GraphRecord,
    model: Model,
    steps: int,
    freeze_outputs: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """Embed one new record against a trained hash-mode model.

    A fresh input row is initialized exactly like a training row, then
    refined with ``steps`` passes over the record's context tokens. With
    ``freeze_outputs`` the output layers are left untouched (pure
    inference); otherwise they keep adapting, as in batch training. The
    record id is registered in the model either way.
    """
    for view in model.views:
        if model.vocabs[view].mode != "hash":
            raise VocabularyError("online embedding requires hash-mode vocabularies; retrain with vocab_mode='hash'")
    cfg = model.config
    seq = np.random.SeedSequence(seed)
    ss_init, ss_negs = seq.spawn(2)
    u = plain_embedding_matrix(1, model.dim, ss_init)[0]
    rng = np.random.default_rng(ss_negs)

    texts = _context_token_texts(record, model.views, cfg.max_degree)
    ids_per_view = [
        np.asarray([model.vocabs[view].id_of_text(t) for t in texts[vi]], dtype=np.int64)
        for vi, view in enumerate(model.views)
    ]
    total = steps * sum(len(x) for x in ids_per_view)
    union = (
        UnionNoiseTable([model.vocabs[v] for v in model.views])
        if cfg.negative_mode == "global"
        else None
    )
    done = 0
    for _ in range(steps):
        for vi, view in enumerate(model.views):
            pos = ids_per_view[vi]
            if len(pos) == 0:
                continue
            exclude_set = np.unique(pos) if cfg.exclude_context else None
            if union is None:
                negs = _draw_negatives_matrix(model.vocabs[view].noise, rng, pos, cfg.negatives, exclude_set)
                ids_mat = np.concatenate([pos[:, None], negs], axis=1)
                for t in range(len(pos)):
                    frac = done / total if total > 1 else 0.0
                    lr = cfg.learning_rate - (cfg.learning_rate - cfg.floor_lr) * frac
                    _apply_step_view(u, model.tables[view], ids_mat[t], lr, update_outputs=not freeze_outputs)
                    done += 1
            else:
                neg_views, neg_ids = _draw_union_matrix(union, rng, vi, pos, cfg.negatives, exclude_set)
                tables = [model.tables[v] for v in model.views]
                for t in range(len(pos)):
                    frac = done / total if total > 1 else 0.0
                    lr = cfg.learning_rate - (cfg.learning_rate - cfg.floor_lr) * frac
                    tviews = np.concatenate([[vi], neg_views[t]]).astype(np.int64)
                    tids = np.concatenate([[pos[t]], neg_ids[t]]).astype(np.int64)
                    _apply_step_global(u, tables, tviews, tids, lr, update_outputs=not freeze_outputs)
                    done += 1
    model.register_record(record.id, u)
    return u.copy()


def concat_single_views(
    dataset: Dataset, cfg: TrainConfig, epoch_callback: Callable[[EpochStats], None] | None = None
) -> tuple[list[str], np.ndarray]:
    """Train one single-view model per dataset view and concatenate the rows.

    Row order matches dataset record order; the result is
    len(records) x (num_views * dim) wide.
    """
    blocks = []
    for view in dataset.views:
        model = train(dataset, replace(cfg, train_views=(view,)), epoch_callback)
        blocks.append(model.record_vecs)
    return [r.id for r in dataset.records], np.concatenate(blocks, axis=1)
