"""Model persistence: a one-line JSON header plus a raw float64 payload.

The header carries the format version, config, view list, id maps, and
per-view vocabulary/table metadata; the payload is the concatenation of
all matrices as row-major little-endian 64-bit reals in the order listed
in the header. Everything is written deterministically, so two runs with
the same seed produce byte-identical files.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import IO

import numpy as np

from .errors import DatasetError
from .hashembed import HashEmbeddingTable, bucket_indices
from .trainer import Model, TrainConfig
from .vocab import Vocabulary

FORMAT_TAG = "graphprofile-checkpoint-1"


def _config_to_json(cfg: TrainConfig) -> dict:
    out = dataclasses.asdict(cfg)
    if out["train_views"] is not None:
        out["train_views"] = list(out["train_views"])
    return out


def _config_from_json(obj: dict) -> TrainConfig:
    if obj.get("train_views") is not None:
        obj["train_views"] = tuple(obj["train_views"])
    return TrainConfig(**obj)


def save_checkpoint(model: Model, path: str | Path) -> None:
    matrices: list[tuple[str, np.ndarray]] = [
        ("record_vecs", model.record_vecs),
        ("label_vecs", model.label_vecs),
    ]
    vocab_meta = {}
    table_meta = {}
    for view in model.views:
        vocab = model.vocabs[view]
        table = model.tables[view]
        meta = {
            "mode": vocab.mode,
            "capacity": vocab.capacity,
            "smoothing": vocab.smoothing,
            "counts": sorted((int(k), int(v)) for k, v in vocab.counts.items()),
        }
        if vocab.mode == "dict":
            by_id = sorted(vocab.token_ids.items(), key=lambda kv: kv[1])
            meta["tokens"] = [text for text, _ in by_id]
        vocab_meta[view] = meta
        table_meta[view] = {
            "capacity": table.capacity,
            "num_buckets": table.num_buckets,
            "dim": table.dim,
            "num_hashes": table.num_hashes,
            "hash_seeds": [int(s) for s in table.hash_seeds],
        }
        matrices.append((f"components:{view}", table.components))
        matrices.append((f"importances:{view}", table.importances))

    header = {
        "format": FORMAT_TAG,
        "config": _config_to_json(model.config),
        "views": list(model.views),
        "record_ids": list(model.record_ids),
        "label_names": list(model.label_names),
        "vocabs": vocab_meta,
        "tables": table_meta,
        "matrices": [[name, list(arr.shape)] for name, arr in matrices],
    }
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        for _, arr in matrices:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> Model:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"checkpoint file not found: {path}")
    with path.open("rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DatasetError(f"{path}: not a checkpoint file") from exc
    if header.get("format") != FORMAT_TAG:
        raise DatasetError(f"{path}: unsupported checkpoint format {header.get('format')!r}")

    arrays = {}
    offset = 0
    for name, shape in header["matrices"]:
        size = int(np.prod(shape)) if shape else 0
        end = offset + size * 8
        if end > len(payload):
            raise DatasetError(f"{path}: truncated payload for matrix '{name}'")
        arrays[name] = np.frombuffer(payload, dtype="<f8", count=size, offset=offset).reshape(shape).copy()
        offset = end
    if offset != len(payload):
        raise DatasetError(f"{path}: {len(payload) - offset} trailing payload bytes")

    views = tuple(header["views"])
    vocabs = {}
    tables = {}
    for view in views:
        vm = header["vocabs"][view]
        counts = {int(k): int(v) for k, v in vm["counts"]}
        token_ids = None
        if vm["mode"] == "dict":
            token_ids = {text: i for i, text in enumerate(vm["tokens"])}
        vocabs[view] = Vocabulary(view, vm["mode"], vm["capacity"], vm["smoothing"], token_ids, counts)
        tm = header["tables"][view]
        seeds = np.asarray(tm["hash_seeds"], dtype=np.uint64)
        buckets = bucket_indices(np.arange(tm["capacity"], dtype=np.uint64), seeds, tm["num_buckets"])
        tables[view] = HashEmbeddingTable(
            view,
            tm["capacity"],
            tm["num_buckets"],
            tm["dim"],
            tm["num_hashes"],
            seeds,
            arrays[f"components:{view}"],
            arrays[f"importances:{view}"],
            buckets,
        )
    return Model(
        _config_from_json(header["config"]),
        views,
        list(header["record_ids"]),
        list(header["label_names"]),
        arrays["record_vecs"],
        arrays["label_vecs"],
        vocabs,
        tables,
    )


def format_embedding_row(record_id: str, vec: np.ndarray) -> str:
    return "\t".join([record_id] + [repr(float(x)) for x in vec])


def embedding_header(dim: int) -> str:
    return "\t".join(["record_id"] + [f"v{i + 1}" for i in range(dim)])


def export_embeddings(model: Model, out: str | Path | IO[str]) -> None:
    """Write the record rows as TSV: record_id, then one column per dimension."""
    def _write(fh: IO[str]) -> None:
        fh.write(embedding_header(model.dim) + "\n")
        for rid in model.record_ids:
            fh.write(format_embedding_row(rid, model.embedding_of(rid)) + "\n")

    if hasattr(out, "write"):
        _write(out)
    else:
        with Path(out).open("w", encoding="utf-8") as fh:
            _write(fh)
