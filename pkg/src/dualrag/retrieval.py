"""Hybrid dense + lexical retrieval over immutable chunk indices.

Each retriever scores the whole corpus: cosine similarity on unit-norm
embeddings blended with min-max-normalized Okapi BM25,

    hybrid = alpha * dense + (1 - alpha) * bm25_norm,   alpha = 0.75

then hands the top candidates to a reranker for the final cut (documents
and context: 10 -> 4; questions: 25 -> 5). Corpora are desk-scale, so an
exact scan is used throughout; there is no approximate-NN structure.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .corpus import Chunk, Question
from .providers import ProviderError
from .textutil import tokenize

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.75
DOC_STAGE1_K = 10
DOC_FINAL_K = 4
QUESTION_STAGE1_K = 25
QUESTION_FINAL_K = 5
DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

INDEX_FORMAT_VERSION = 1


class IndexBuildError(Exception):
    pass


class IndexFormatError(Exception):
    pass


@dataclass(frozen=True)
class ScoredChunk:
    """One retrieval candidate with its score decomposition."""

    chunk_id: str
    dense_sim: float
    bm25_raw: float
    bm25_norm: float
    hybrid: float


@dataclass
class Index:
    """Immutable searchable view over items that expose ``.id`` and ``.text``."""

    items: list[Any]
    vectors: np.ndarray
    inverted: dict[str, list[tuple[int, int]]]
    doc_lengths: list[int]
    avg_doc_length: float
    idf: dict[str, float]
    k1: float
    b: float
    embedder: Any
    by_id: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.by_id:
            self.by_id = {item.id: item for item in self.items}

    def __len__(self) -> int:
        return len(self.items)


def build_index(items: Sequence[Any], embedder, k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Index:
    """Embed and lexically index a corpus.

    Raises :class:`IndexBuildError` on an empty corpus, duplicate ids, or
    inconsistent embedding dimensions.
    """
    items = list(items)
    if not items:
        raise IndexBuildError("cannot index an empty corpus")
    ids = [item.id for item in items]
    if len(set(ids)) != len(ids):
        raise IndexBuildError("duplicate item ids in corpus")

    vectors = np.asarray(embedder.embed([item.text for item in items]), dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != len(items):
        raise IndexBuildError(f"embedder returned shape {vectors.shape} for {len(items)} items")

    inverted: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    for ordinal, item in enumerate(items):
        tokens = tokenize(item.text)
        doc_lengths.append(len(tokens))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            inverted.setdefault(term, []).append((ordinal, tf))

    n = len(items)
    avg_len = sum(doc_lengths) / n
    # Smoothed idf (always positive) keeps raw BM25 scores non-negative.
    idf = {
        term: math.log(1.0 + (n - len(postings) + 0.5) / (len(postings) + 0.5))
        for term, postings in inverted.items()
    }
    return Index(
        items=items,
        vectors=vectors,
        inverted=inverted,
        doc_lengths=doc_lengths,
        avg_doc_length=avg_len,
        idf=idf,
        k1=k1,
        b=b,
        embedder=embedder,
    )


def bm25_scores(index: Index, query: str) -> np.ndarray:
    """Raw Okapi BM25 score of every indexed item against the query."""
    scores = np.zeros(len(index.items))
    for term in tokenize(query):
        postings = index.inverted.get(term)
        if not postings:
            continue
        idf = index.idf[term]
        for ordinal, tf in postings:
            norm_len = index.doc_lengths[ordinal] / index.avg_doc_length
            denom = tf + index.k1 * (1.0 - index.b + index.b * norm_len)
            scores[ordinal] += idf * (tf * (index.k1 + 1.0)) / denom
    return scores


def hybrid_search(index: Index, query: str, k: int, alpha: float = DEFAULT_ALPHA) -> list[ScoredChunk]:
    """Top-k items by the blended dense/lexical score, ties by ascending id.

    bm25_norm is the per-query min-max normalization of the raw scores over
    the full candidate set; when every raw score is equal the normalized
    value is 0.5 for all items.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not index.items:
        return []

    q_vec = np.asarray(index.embedder.embed([query])[0], dtype=np.float64)
    if q_vec.shape[0] != index.vectors.shape[1]:
        raise IndexFormatError(
            f"query embedding dim {q_vec.shape[0]} != index dim {index.vectors.shape[1]}"
        )
    dense = index.vectors @ q_vec
    raw = bm25_scores(index, query)
    lo, hi = float(raw.min()), float(raw.max())
    if hi - lo > 0.0:
        norm = (raw - lo) / (hi - lo)
    else:
        norm = np.full_like(raw, 0.5)

    scored = [
        ScoredChunk(
            chunk_id=item.id,
            dense_sim=float(dense[i]),
            bm25_raw=float(raw[i]),
            bm25_norm=float(norm[i]),
            hybrid=alpha * float(dense[i]) + (1.0 - alpha) * float(norm[i]),
        )
        for i, item in enumerate(index.items)
    ]
    scored.sort(key=lambda s: (-s.hybrid, s.chunk_id))
    return scored[:k]


def retrieve_scored(
    index: Index,
    query: str,
    stage1_k: int,
    final_k: int,
    reranker,
    alpha: float = DEFAULT_ALPHA,
) -> list[ScoredChunk]:
    """Two-stage retrieval returning the final candidates with stage-1 scores.

    Stage 1 takes the hybrid top ``stage1_k``; stage 2 reranks down to
    ``final_k``. A reranker failure degrades to hybrid-score order (logged),
    so the result is always a subset of the stage-1 set.
    """
    if final_k > stage1_k:
        raise ValueError(f"final_k {final_k} must be <= stage1_k {stage1_k}")
    stage1 = hybrid_search(index, query, stage1_k, alpha)
    if not stage1:
        return []
    candidates = [index.by_id[s.chunk_id] for s in stage1]
    by_id = {s.chunk_id: s for s in stage1}
    try:
        final_ids = reranker.rerank(query, candidates, final_k)
    except ProviderError as exc:
        log.warning("reranker unavailable, degrading to hybrid order: %s", exc)
        final_ids = [s.chunk_id for s in stage1[:final_k]]
    return [by_id[cid] for cid in final_ids]


def retrieve(
    index: Index,
    query: str,
    stage1_k: int,
    final_k: int,
    reranker,
    alpha: float = DEFAULT_ALPHA,
) -> list[Any]:
    """Two-stage retrieval returning the final items themselves."""
    return [index.by_id[s.chunk_id] for s in retrieve_scored(index, query, stage1_k, final_k, reranker, alpha)]


def save_index(index: Index, path: str | Path) -> None:
    """Persist the index next to its chunk store (JSON, version-stamped).

    Embeddings are stored; the lexical side is cheap and rebuilt on load.
    """
    if index.items and isinstance(index.items[0], Question):
        item_type = "question"
        items = [q.to_json() for q in index.items]
    else:
        item_type = "chunk"
        items = [c.to_json() for c in index.items]
    payload = {
        "version": INDEX_FORMAT_VERSION,
        "item_type": item_type,
        "bm25": {"k1": index.k1, "b": index.b},
        "dim": int(index.vectors.shape[1]),
        "items": items,
        "vectors": [[float(x) for x in row] for row in index.vectors],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")


def load_index(path: str | Path, embedder) -> Index:
    """Load a persisted index, re-deriving the lexical structures.

    The stored format version must match; the supplied embedder is attached
    for query-time embedding and its dimension is checked lazily at query
    time against the stored vectors.
    """
    payload = json.loads(Path(path).read_text())
    version = payload.get("version")
    if version != INDEX_FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index format version {version!r}")
    if payload["item_type"] == "question":
        items: list[Any] = [Question.from_json(rec) for rec in payload["items"]]
    else:
        items = [Chunk.from_json(rec) for rec in payload["items"]]
    vectors = np.asarray(payload["vectors"], dtype=np.float64)
    if vectors.shape != (len(items), payload["dim"]):
        raise IndexFormatError("stored vectors do not match item count/dim")

    rebuilt = build_index(items, _PrecomputedEmbedder(vectors), k1=payload["bm25"]["k1"], b=payload["bm25"]["b"])
    rebuilt.embedder = embedder
    return rebuilt


class _PrecomputedEmbedder:
    """Feeds stored vectors straight back during an index reload."""

    def __init__(self, vectors: np.ndarray):
        self._vectors = vectors

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if len(texts) != self._vectors.shape[0]:
            raise IndexFormatError("stored vector count does not match items")
        return self._vectors
