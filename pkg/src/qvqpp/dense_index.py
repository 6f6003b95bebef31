"""Exact cosine-similarity kNN over externally precomputed embeddings.

No embedding model runs in-process: vectors are ingested from a text
dump (header ``count dim``, then one ``id f1 .. fdim`` row per vector)
and searched by exhaustive scan, so results are exact and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection, Sequence

import numpy as np

from .corpus_io import RankedList


@dataclass
class EmbeddingStore:
    """Immutable id -> vector store with precomputed norms."""

    dim: int
    ids: list[str]
    matrix: np.ndarray  # shape (len(ids), dim), float64
    index_of: dict[str, int] = field(repr=False)
    norms: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.index_of

    def vector(self, item_id: str) -> np.ndarray:
        return self.matrix[self.index_of[item_id]]


def _make_store(dim: int, ids: list[str], matrix: np.ndarray) -> EmbeddingStore:
    index_of = {item_id: i for i, item_id in enumerate(ids)}
    norms = np.linalg.norm(matrix, axis=1)
    return EmbeddingStore(dim=dim, ids=ids, matrix=matrix, index_of=index_of, norms=norms)


def load_vectors(path) -> EmbeddingStore:
    """Read an embedding dump, checking the declared count and dimension.

    Zero-norm rows are tolerated at load; they are simply never returned
    by :func:`knn_cosine`.
    """
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'count dim', got {header!r}")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ValueError(f"{path}: non-integer header fields {header!r}") from None
        if count < 0 or dim < 1:
            raise ValueError(f"{path}: invalid header count={count} dim={dim}")
        ids: list[str] = []
        rows: list[list[float]] = []
        seen: set[str] = set()
        for number, raw in enumerate(handle, start=2):
            fields = raw.split()
            if not fields:
                raise ValueError(f"{path}:{number}: empty row")
            row_id = fields[0]
            if row_id in seen:
                raise ValueError(f"{path}:{number}: duplicate id {row_id!r}")
            if len(fields) - 1 != dim:
                raise ValueError(
                    f"{path}:{number}: row {row_id!r} has {len(fields) - 1} values, expected {dim}"
                )
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError:
                raise ValueError(f"{path}:{number}: non-numeric value in row {row_id!r}") from None
            seen.add(row_id)
            ids.append(row_id)
            rows.append(values)
    if len(ids) != count:
        raise ValueError(f"{path}: header declares {count} vectors but file has {len(ids)}")
    matrix = np.asarray(rows, dtype=np.float64).reshape(len(ids), dim)
    return _make_store(dim, ids, matrix)


def store_from_arrays(ids: Sequence[str], matrix: np.ndarray) -> EmbeddingStore:
    """Build a store directly from in-memory vectors (mainly for tests/demos)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("matrix must be 2-D with one row per id")
    if len(set(ids)) != len(ids):
        raise ValueError("ids must be unique")
    return _make_store(matrix.shape[1], list(ids), matrix)


def knn_cosine(
    store: EmbeddingStore,
    query_vec: Sequence[float],
    depth: int,
    exclude: Collection[str] = (),
    *,
    query_id: str = "",
) -> RankedList:
    """Exhaustive-scan top-``depth`` ids by cosine similarity.

    Ties are broken by id ascending. Stored zero-norm vectors score
    -inf and are never returned; a zero-norm query is an error.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape != (store.dim,):
        raise ValueError(f"query vector has shape {q.shape}, expected ({store.dim},)")
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise ValueError("query vector has zero norm")
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = (store.matrix @ q) / (store.norms * qnorm)
    sims = np.where(store.norms == 0.0, -np.inf, sims)
    # primary key: similarity desc; secondary: id asc
    order = np.lexsort((np.asarray(store.ids), -sims))
    excluded = set(exclude)
    entries: list[tuple[str, float]] = []
    for i in order:
        sim = float(sims[i])
        if sim == -np.inf:
            break  # -inf rows sort last
        item_id = store.ids[i]
        if item_id in excluded:
            continue
        entries.append((item_id, sim))
        if len(entries) == depth:
            break
    return RankedList(query_id, entries)
