"""The inference-time compliance query pipeline.

A query runs the document and context retrievers concurrently (each a
hybrid 10 -> rerank 4 pass), renders the same prompt template used to
build the fine-tuning dataset, calls the LLM, and attributes every quoted
span back to a retrieved document chunk. Spans that match no chunk are
flagged UNMATCHED rather than hidden: the unmatched fraction is the
pipeline's hallucination smoke signal.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .prompts import SYSTEM_PREAMBLE, extract_quotes, render_assessment_prompt
from .providers import ProviderError
from .retrieval import DOC_FINAL_K, DOC_STAGE1_K, Index, ScoredChunk, retrieve_scored
from .textutil import normalize_ws

log = logging.getLogger(__name__)


class QueryError(Exception):
    """Raised when a query cannot complete; carries partial retrievals."""

    def __init__(self, message: str, retrieved_docs=None, retrieved_ctx=None):
        super().__init__(message)
        self.retrieved_docs = retrieved_docs or []
        self.retrieved_ctx = retrieved_ctx or []


@dataclass(frozen=True)
class AttributedQuote:
    span: str
    source_chunk_id: str | None  # None == UNMATCHED

    def to_json(self) -> dict:
        return {"span": self.span, "source_chunk_id": self.source_chunk_id or "UNMATCHED"}


@dataclass
class AssessmentAnswer:
    query: str
    answer_text: str
    retrieved_docs: list[ScoredChunk]
    retrieved_ctx: list[ScoredChunk]
    quotes: list[AttributedQuote] = field(default_factory=list)
    latency_seconds: float = 0.0

    @property
    def unmatched_fraction(self) -> float:
        if not self.quotes:
            return 0.0
        return sum(1 for q in self.quotes if q.source_chunk_id is None) / len(self.quotes)

    def to_json(self) -> dict:
        return {
            "query": self.query,
            "answer_text": self.answer_text,
            "retrieved_docs": [vars(s) for s in self.retrieved_docs],
            "retrieved_ctx": [vars(s) for s in self.retrieved_ctx],
            "quotes": [q.to_json() for q in self.quotes],
            "unmatched_fraction": self.unmatched_fraction,
            "latency_seconds": self.latency_seconds,
        }


def attribute_quotes(answer_text: str, retrieved_docs: list[tuple[str, str]]) -> list[AttributedQuote]:
    """Match marker-delimited spans to source chunks.

    ``retrieved_docs`` is (chunk_id, text) in prompt document order; the
    first chunk containing the normalized span wins. Unmatched spans are
    kept with a None source.
    """
    out = []
    for span in extract_quotes(answer_text):
        needle = normalize_ws(span)
        source = None
        if needle:
            for chunk_id, text in retrieved_docs:
                if needle in normalize_ws(text):
                    source = chunk_id
                    break
        out.append(AttributedQuote(span=span, source_chunk_id=source))
    return out


def answer_query(
    query: str,
    doc_index: Index,
    ctx_index: Index,
    llm,
    reranker,
    stage1_k: int = DOC_STAGE1_K,
    final_k: int = DOC_FINAL_K,
) -> AssessmentAnswer:
    """Run the dual-retrieval pipeline for one compliance query.

    The two retrievals execute in parallel; failure of either aborts the
    query (a compliance answer without its regulatory context would be
    misleading). A chat failure raises :class:`QueryError` carrying the
    completed retrievals for debugging.
    """
    if not query or not query.strip():
        raise ValueError("query must be non-empty")
    started = time.monotonic()

    with ThreadPoolExecutor(max_workers=2) as pool:
        doc_future = pool.submit(retrieve_scored, doc_index, query, stage1_k, final_k, reranker)
        ctx_future = pool.submit(retrieve_scored, ctx_index, query, stage1_k, final_k, reranker)
        doc_scored = doc_future.result()
        ctx_scored = ctx_future.result()

    doc_pairs = [(s.chunk_id, doc_index.by_id[s.chunk_id].text) for s in doc_scored]
    ctx_pairs = [(s.chunk_id, ctx_index.by_id[s.chunk_id].text) for s in ctx_scored]
    prompt = render_assessment_prompt(
        query,
        [(i, text) for i, (_, text) in enumerate(doc_pairs, start=1)],
        [(i, text) for i, (_, text) in enumerate(ctx_pairs, start=1)],
    )
    try:
        answer_text = llm.chat(
            [{"role": "system", "content": SYSTEM_PREAMBLE}, {"role": "user", "content": prompt}]
        )
    except ProviderError as exc:
        raise QueryError(str(exc), retrieved_docs=doc_scored, retrieved_ctx=ctx_scored) from exc

    return AssessmentAnswer(
        query=query,
        answer_text=answer_text,
        retrieved_docs=doc_scored,
        retrieved_ctx=ctx_scored,
        quotes=attribute_quotes(answer_text, doc_pairs),
        latency_seconds=time.monotonic() - started,
    )
