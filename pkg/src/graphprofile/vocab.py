"""Per-view token vocabularies and smoothed noise distributions.

Two token-to-id modes:

* ``dict`` -- a closed dictionary built ahead of training; ids are
  assigned in first-occurrence order over the token stream.
* ``hash`` -- an open, streaming-friendly mapping: the id is a fixed,
  seedless 64-bit hash of the token text reduced modulo the capacity, so
  ids are stable across runs and processes and unseen tokens always map
  somewhere. Collisions merge tokens; pick the capacity large enough that
  they are rare.

Negative sampling draws ids from the per-view noise distribution
Pr(id) proportional to count**smoothing over the observed tokens. The
union distribution over all views (for the global sampling baseline) is
built by :class:`UnionNoiseTable`.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import VocabularyError
from .wl import SubgraphToken

DEFAULT_SMOOTHING = 0.75
DEFAULT_HASH_CAPACITY = 2**22
_MAX_REDRAW_ROUNDS = 100


def stable_token_hash(text: str) -> int:
    """Seedless 64-bit hash of the token text; identical across processes."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class NoiseTable:
    """Sampler over ids with probability proportional to count**smoothing."""

    def __init__(self, counts: dict[int, int], smoothing: float):
        if not counts:
            raise VocabularyError("cannot build a noise table over an empty vocabulary")
        self.ids = np.fromiter(counts.keys(), dtype=np.int64, count=len(counts))
        weights = np.fromiter(counts.values(), dtype=np.float64, count=len(counts)) ** smoothing
        self.probs = weights / weights.sum()
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0
        self._prob_by_id = dict(zip(self.ids.tolist(), self.probs.tolist()))

    def prob(self, token_id: int) -> float:
        return self._prob_by_id.get(int(token_id), 0.0)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.ids[np.searchsorted(self._cum, rng.random(n), side="right")]

    def sample(self, rng: np.random.Generator, n: int, exclude=None) -> np.ndarray:
        """n i.i.d. draws; any draw hitting ``exclude`` (an id or a set of ids)
        is redrawn, erroring out after a bounded number of rounds."""
        out = self.draw(rng, n)
        if exclude is None or n == 0:
            return out
        excluded = np.asarray(sorted(exclude) if isinstance(exclude, (set, frozenset)) else [exclude])
        mask = np.isin(out, excluded)
        rounds = 0
        while mask.any():
            rounds += 1
            if rounds > _MAX_REDRAW_ROUNDS:
                raise VocabularyError("no valid negative after 100 redraws; noise distribution too constrained")
            out[mask] = self.draw(rng, int(mask.sum()))
            mask = np.isin(out, excluded)
        return out


@dataclass
class Vocabulary:
    """Token-to-id mapping plus frequency statistics for one view.

    Immutable after build apart from ``skipped``, a diagnostic count of
    unknown-token lookups in dict mode (not synchronized across threads).
    """

    view_name: str
    mode: str  # "dict" | "hash"
    capacity: int
    smoothing: float = DEFAULT_SMOOTHING
    token_ids: dict[str, int] | None = None
    counts: dict[int, int] = field(default_factory=dict)
    skipped: int = 0

    def __post_init__(self):
        self._noise: NoiseTable | None = None

    @property
    def num_distinct(self) -> int:
        return len(self.counts)

    @property
    def noise(self) -> NoiseTable:
        if self._noise is None:
            self._noise = NoiseTable(self.counts, self.smoothing)
        return self._noise

    def id_of_text(self, text: str) -> int | None:
        if self.mode == "hash":
            return stable_token_hash(text) % self.capacity
        tid = self.token_ids.get(text)
        if tid is None:
            self.skipped += 1
        return tid

    def top_tokens(self, n: int = 10) -> list[tuple[str, int]]:
        """Most frequent tokens (dict mode) or ids rendered as text (hash mode)."""
        if self.mode == "dict":
            by_id = {tid: text for text, tid in self.token_ids.items()}
            items = [(by_id[tid], cnt) for tid, cnt in self.counts.items()]
        else:
            items = [(f"id:{tid}", cnt) for tid, cnt in self.counts.items()]
        items.sort(key=lambda kv: (-kv[1], kv[0]))
        return items[:n]


def build_vocab(
    tokens: Iterable[SubgraphToken | str],
    view: str,
    smoothing: float = DEFAULT_SMOOTHING,
    mode: str = "dict",
    capacity: int | None = None,
) -> Vocabulary:
    """Build a vocabulary for one view from a token stream.

    Dict mode assigns ids by first occurrence and sets the capacity to
    the number of distinct tokens. Hash mode uses the stable hash with a
    fixed ``capacity`` (default 2**22); frequencies are keyed by hashed
    id, so colliding tokens pool their counts.
    """
    if mode not in ("dict", "hash"):
        raise VocabularyError(f"unknown vocabulary mode '{mode}'")
    if mode == "hash":
        cap = capacity if capacity is not None else DEFAULT_HASH_CAPACITY
        if cap <= 0:
            raise VocabularyError("hash capacity must be positive")
    token_ids: dict[str, int] = {}
    counts: dict[int, int] = {}
    for tok in tokens:
        if isinstance(tok, SubgraphToken):
            if tok.view_name != view:
                raise VocabularyError(f"token from view '{tok.view_name}' in the '{view}' stream")
            text = tok.text
        else:
            text = tok
        if mode == "dict":
            tid = token_ids.setdefault(text, len(token_ids))
        else:
            tid = stable_token_hash(text) % cap
        counts[tid] = counts.get(tid, 0) + 1
    if mode == "dict":
        return Vocabulary(view, "dict", len(token_ids), smoothing, token_ids, counts)
    return Vocabulary(view, "hash", cap, smoothing, None, counts)


def token_id(vocab: Vocabulary, token: SubgraphToken | str) -> int | None:
    """Map a token to its id; None marks an unknown token in dict mode."""
    text = token.text if isinstance(token, SubgraphToken) else token
    return vocab.id_of_text(text)


def sample_negatives(vocab: Vocabulary, rng: np.random.Generator, n: int, exclude=None) -> np.ndarray:
    """Draw n negative ids from this view's noise distribution."""
    if n < 0:
        raise VocabularyError("negative sample count must be >= 0")
    if vocab.num_distinct == 0:
        raise VocabularyError(f"empty vocabulary for view '{vocab.view_name}'")
    return vocab.noise.sample(rng, n, exclude)


class UnionNoiseTable:
    """Noise distribution over the union of several views' vocabularies.

    Entries are (view_index, id) pairs weighted by count**smoothing and
    normalized over the whole union, so a view's share of draws follows
    its share of the smoothed mass.
    """

    def __init__(self, vocabs: Sequence[Vocabulary]):
        if not vocabs:
            raise VocabularyError("union noise table needs at least one vocabulary")
        view_idx: list[int] = []
        ids: list[int] = []
        weights: list[float] = []
        for vi, vocab in enumerate(vocabs):
            smoothing = vocab.smoothing
            for tid, cnt in vocab.counts.items():
                view_idx.append(vi)
                ids.append(tid)
                weights.append(cnt**smoothing)
        if not ids:
            raise VocabularyError("union noise table over empty vocabularies")
        self.view_names = [v.view_name for v in vocabs]
        self.view_idx = np.asarray(view_idx, dtype=np.int64)
        self.ids = np.asarray(ids, dtype=np.int64)
        w = np.asarray(weights, dtype=np.float64)
        self.probs = w / w.sum()
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0
        key = self.view_idx.tolist()
        val = self.ids.tolist()
        self._prob_by_entry = {(k, v): p for k, v, p in zip(key, val, self.probs.tolist())}
        self.view_mass = np.zeros(len(vocabs))
        np.add.at(self.view_mass, self.view_idx, self.probs)

    def prob(self, view_index: int, token_id: int) -> float:
        return self._prob_by_entry.get((view_index, int(token_id)), 0.0)

    def draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        pos = np.searchsorted(self._cum, rng.random(n), side="right")
        return self.view_idx[pos], self.ids[pos]

    def sample(
        self, rng: np.random.Generator, n: int, exclude: tuple[int, int] | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """n draws of (view_index, id); ``exclude`` is one (view_index, id) pair."""
        views, ids = self.draw(rng, n)
        if exclude is None or n == 0:
            return views, ids
        ev, ei = exclude
        mask = (views == ev) & (ids == ei)
        rounds = 0
        while mask.any():
            rounds += 1
            if rounds > _MAX_REDRAW_ROUNDS:
                raise VocabularyError("no valid negative after 100 redraws; noise distribution too constrained")
            m = int(mask.sum())
            views[mask], ids[mask] = self.draw(rng, m)
            mask = (views == ev) & (ids == ei)
        return views, ids
