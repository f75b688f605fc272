"""HTTP JSON adapters for live embedding, chat, and rerank services.

Wire schemas (one per adapter, all POST, JSON in/out):

  embeddings:  {model, input: [str]}            -> {data: [{embedding: [f]}]}
  chat:        {model, messages: [{role,content}]} -> {choices: [{message: {content}}]}
  rerank:      {model, query, documents: [str], top_n}
                                                -> {results: [{index, relevance_score}]}

Retries use capped exponential backoff without jitter (deterministic under
test); a request is retried only after a failure, never after a confirmed
success. A semaphore caps in-flight requests per client at
``max_concurrency``.
"""
from __future__ import annotations

import logging
import threading
import time
from typing import Sequence

import httpx
import numpy as np

from . import ProviderConfig, ProviderError, validate_messages

log = logging.getLogger(__name__)

BACKOFF_BASE_SECONDS = 0.5
BACKOFF_CAP_SECONDS = 8.0
EMBED_BATCH_SIZE = 64


class _RetryableReply(Exception):
    """A well-formed response that must nevertheless be retried."""


class _HttpClientBase:
    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None,
                 sleep=time.sleep):
        self.config = config
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(config.max_concurrency)
        headers = {}
        key = config.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            base_url=config.endpoint,
            timeout=config.timeout,
            headers=headers,
            transport=transport,
        )

    def _post_json(self, path: str, payload: dict) -> dict:
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(min(BACKOFF_CAP_SECONDS, BACKOFF_BASE_SECONDS * 2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    response = self._client.post(path, json=payload)
                if response.status_code >= 500:
                    raise _RetryableReply(f"server error {response.status_code}")
                response.raise_for_status()
                return response.json()
            except (httpx.TransportError, _RetryableReply, ValueError) as exc:
                last_error = exc
                log.warning("%s attempt %d/%d failed: %s", path, attempt + 1, attempts, exc)
            except httpx.HTTPStatusError as exc:
                raise ProviderError(f"{path}: {exc}", attempts=attempt + 1) from exc
        raise ProviderError(
            f"{path} failed after {attempts} attempts: {last_error}", attempts=attempts
        )


class HttpEmbeddings(_HttpClientBase):
    """Batching embeddings client; vectors are L2-normalized client-side so
    dot products equal cosine similarity regardless of the service."""

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if any(not t for t in texts):
            raise ValueError("embed requires non-empty texts")
        rows: list[list[float]] = []
        for start in range(0, len(texts), EMBED_BATCH_SIZE):
            batch = list(texts[start : start + EMBED_BATCH_SIZE])
            reply = self._post_json(
                "/embeddings", {"model": self.config.model_name, "input": batch}
            )
            data = reply.get("data", [])
            if len(data) != len(batch):
                raise ProviderError(
                    f"/embeddings returned {len(data)} vectors for {len(batch)} inputs"
                )
            rows.extend(item["embedding"] for item in data)
        out = np.asarray(rows, dtype=np.float64)
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out


class HttpChatModel(_HttpClientBase):
    def chat(self, messages: Sequence[dict]) -> str:
        validate_messages(messages)
        attempts = self.config.max_retries + 1
        for attempt in range(attempts):
            reply = self._post_json(
                "/chat/completions",
                {"model": self.config.model_name, "messages": list(messages)},
            )
            try:
                content = reply["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise ProviderError(f"/chat/completions: malformed reply: {exc}") from exc
            if content:
                return content
            log.warning("empty completion, attempt %d/%d", attempt + 1, attempts)
        raise ProviderError(f"empty completion after {attempts} attempts", attempts=attempts)


class HttpReranker(_HttpClientBase):
    def rerank(self, query: str, candidates: Sequence, top_k: int) -> list[str]:
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        candidates = list(candidates)
        reply = self._post_json(
            "/rerank",
            {
                "model": self.config.model_name,
                "query": query,
                "documents": [c.text for c in candidates],
                "top_n": min(top_k, len(candidates)),
            },
        )
        results = sorted(
            reply.get("results", []), key=lambda r: -float(r["relevance_score"])
        )
        ids = []
        for r in results[:top_k]:
            idx = int(r["index"])
            if not 0 <= idx < len(candidates):
                raise ProviderError(f"/rerank returned out-of-range index {idx}")
            ids.append(candidates[idx].id)
        return ids
