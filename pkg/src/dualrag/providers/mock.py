"""Deterministic offline stand-ins for the three provider interfaces.

All three are pure functions of their inputs, which makes every pipeline
built on them reproducible under test: hash-bucketed token counts for
embeddings, Jaccard token overlap for reranking, and prompt-derived canned
text for chat.
"""
from __future__ import annotations

import hashlib
from typing import Callable, Sequence

import numpy as np

from ..prompts import (
    QUOTE_BEGIN,
    QUOTE_END,
    extract_user_docs_section,
    split_doc_blocks,
)
from ..textutil import tokenize
from . import validate_messages

MOCK_DIM = 256

# Marker the pairing module embeds in its selection prompts; the mock keys
# its reply format off it.
SELECTION_MARKER = "Reply with the number of the single most relevant question"


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class MockEmbeddings:
    """Feature-hashed token counts, L2-normalized. Vocabulary-sensitive and
    deterministic; no model download."""

    def __init__(self, dim: int = MOCK_DIM):
        self.dim = dim

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if any(not t for t in texts):
            raise ValueError("embed requires non-empty texts")
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for token in tokenize(text):
                out[i, _bucket(token, self.dim)] += 1.0
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out


class MockReranker:
    """Normalized token-overlap (Jaccard) scoring; ties by ascending id."""

    def rerank(self, query: str, candidates: Sequence, top_k: int) -> list[str]:
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        q_tokens = set(tokenize(query))
        ranked = sorted(
            candidates,
            key=lambda c: (-_jaccard(q_tokens, set(tokenize(c.text))), c.id),
        )
        return [c.id for c in ranked[:top_k]]


def _jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 0.0


class MockChatModel:
    """Canned completions derived deterministically from the prompt.

    A custom ``responder`` (messages -> reply) can be injected for scripted
    tests; the default recognizes the two prompt families used by the
    pipeline and answers in their expected formats, quoting verbatim from
    the prompt's document blocks so generated answers validate.
    """

    def __init__(self, responder: Callable[[Sequence[dict]], str] | None = None):
        self.responder = responder
        self.call_count = 0

    def chat(self, messages: Sequence[dict]) -> str:
        validate_messages(messages)
        self.call_count += 1
        if self.responder is not None:
            return self.responder(messages)
        prompt = messages[-1]["content"]
        if SELECTION_MARKER in prompt:
            return "1"
        if "**Question:**" in prompt and "**User Documentation**" in prompt:
            return self._assessment_reply(prompt)
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:8]
        return f"Acknowledged (ref {digest})."

    @staticmethod
    def _assessment_reply(prompt: str) -> str:
        blocks = split_doc_blocks(extract_user_docs_section(prompt))
        # Quote the first sentence of up to two blocks; any contiguous span
        # of a block is verbatim by construction.
        quotes = [(label, text.split(". ")[0][:300]) for label, text in blocks[:2]]
        lines = [
            "To answer the question I examined each supplied document for "
            "statements matching the queried evidence, using the contextual "
            "material to interpret the requirement.",
            "",
        ]
        for label, sentence in quotes:
            lines.append(f"Document {label} is meaningful because it directly records the queried activity.")
            lines.append(f"{QUOTE_BEGIN}{sentence}{QUOTE_END}")
        lines += [
            "",
            "In summary, the documentation above contains the quoted evidence, "
            "so the queried requirement is addressed by the cited passages.",
        ]
        return "\n".join(lines)
