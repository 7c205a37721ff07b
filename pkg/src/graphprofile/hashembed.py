"""Feature-hashed output-layer embeddings.

A token id is routed by k seeded hash functions to k rows of a shared
component pool (buckets x dim); the token's embedding is the importance-
weighted sum of those rows. Only buckets*dim + capacity*k reals are
trainable, versus capacity*dim for a standard table, and gradients flow
to both the pool and the importances.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def bucket_indices(ids: np.ndarray, seeds: np.ndarray, num_buckets: int) -> np.ndarray:
    """Bucket of each (id, hash function) pair via a seeded mix of the id.

    A fixed multiply-xor-shift avalanche over the 64-bit id keyed by each
    seed; pure integer arithmetic, so the mapping is identical across runs
    and platforms.
    """
    ids = np.asarray(ids, dtype=np.uint64)
    out = np.empty((ids.shape[0], len(seeds)), dtype=np.int64)
    b = np.uint64(num_buckets)
    with np.errstate(over="ignore"):
        for i, seed in enumerate(seeds):
            x = (ids * _GOLDEN) ^ np.uint64(seed)
            x = (x ^ (x >> np.uint64(30))) * _MIX1
            x = (x ^ (x >> np.uint64(27))) * _MIX2
            x = x ^ (x >> np.uint64(31))
            out[:, i] = (x % b).astype(np.int64)
    return out


@dataclass
class HashEmbeddingTable:
    """Shared component pool plus per-token importances for one view."""

    view_name: str
    capacity: int  # id space size
    num_buckets: int
    dim: int
    num_hashes: int
    hash_seeds: np.ndarray  # (num_hashes,) distinct uint64
    components: np.ndarray  # (num_buckets, dim)
    importances: np.ndarray  # (capacity, num_hashes)
    buckets: np.ndarray  # (capacity, num_hashes) precomputed routing

    def __post_init__(self):
        assert self.param_count == self.num_buckets * self.dim + self.capacity * self.num_hashes
        assert (self.buckets < self.num_buckets).all()
        assert len(set(self.hash_seeds.tolist())) == self.num_hashes

    @property
    def param_count(self) -> int:
        return self.components.size + self.importances.size

    def hash_emb(self, token_id: int) -> np.ndarray:
        """Embedding of one token: sum_i importances[id, i] * components[H_i(id)]."""
        if not 0 <= token_id < self.capacity:
            raise IndexError(f"token id {token_id} out of range [0, {self.capacity})")
        rows = self.components[self.buckets[token_id]]  # (k, dim)
        return self.importances[token_id] @ rows

    def lookup(self, ids: np.ndarray):
        """Batched routing for the training loop.

        Returns (buckets (m,k), importances (m,k), component rows (m,k,dim),
        embeddings (m,dim)) read at the current parameter values.
        """
        bkts = self.buckets[ids]
        ps = self.importances[ids]
        comps = self.components[bkts]
        vecs = np.einsum("mk,mkd->md", ps, comps)
        return bkts, ps, comps, vecs

    def accumulate_grad(self, token_id: int, upstream: np.ndarray, lr: float) -> None:
        """One SGD update of the parameters behind a single token's embedding.

        All reads happen before any write, so the importance gradient uses
        the pre-update component rows even when hash functions collide.
        """
        if not 0 <= token_id < self.capacity:
            raise IndexError(f"token id {token_id} out of range [0, {self.capacity})")
        bkts = self.buckets[token_id]
        p_before = self.importances[token_id].copy()
        comps_before = self.components[bkts].copy()  # (k, dim)
        self.importances[token_id] -= lr * (comps_before @ upstream)
        for i in range(self.num_hashes):
            self.components[bkts[i]] -= lr * p_before[i] * upstream


def init_table(
    capacity: int,
    num_buckets: int,
    dim: int,
    num_hashes: int,
    seed: int | np.random.SeedSequence,
    view_name: str = "",
) -> HashEmbeddingTable:
    """Deterministically initialize a table from a seed.

    Components start Uniform(-0.5/dim, 0.5/dim); importances start at
    1/num_hashes so the initial embedding is the plain mean of the
    selected component rows.
    """
    if capacity <= 0 or num_buckets <= 0 or dim <= 0 or num_hashes <= 0:
        raise ValueError("capacity, num_buckets, dim and num_hashes must all be positive")
    if num_buckets > capacity:
        logger.warning(
            "num_buckets (%d) exceeds capacity (%d); the pool cannot be fully used", num_buckets, capacity
        )
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = seq.generate_state(num_hashes, dtype=np.uint64)
    extra = 1
    while len(set(seeds.tolist())) < num_hashes:  # pragma: no cover - vanishingly rare
        seeds = seq.generate_state(num_hashes + extra, dtype=np.uint64)
        seeds = np.unique(seeds)[:num_hashes]
        extra += 1
    rng = np.random.default_rng(seq.spawn(1)[0])
    half = 0.5 / dim
    components = rng.uniform(-half, half, size=(num_buckets, dim))
    importances = np.full((capacity, num_hashes), 1.0 / num_hashes)
    buckets = bucket_indices(np.arange(capacity, dtype=np.uint64), seeds, num_buckets)
    return HashEmbeddingTable(
        view_name, capacity, num_buckets, dim, num_hashes, seeds, components, importances, buckets
    )


def plain_embedding_matrix(rows: int, dim: int, seed: int | np.random.SeedSequence) -> np.ndarray:
    """Standard (non-hashed) embedding table for the input layers."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(seq)
    half = 0.5 / dim
    return rng.uniform(-half, half, size=(rows, dim))
