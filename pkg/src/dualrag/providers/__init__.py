"""Clients for the three external model services (embeddings, chat LLM,
reranker) plus deterministic offline mocks.

Every other module talks to providers only through the three call shapes
below, so any HTTP-compatible service can be configured and the whole
pipeline runs without network access under the mocks.
"""
from __future__ import annotations

import os
from dataclasses import dataclass


class ProviderError(Exception):
    """A provider call failed after exhausting retries."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ProviderConfigError(Exception):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    """Connection settings for one remote service.

    API keys are read from the named environment variable, never from
    config files.
    """

    endpoint: str
    model_name: str
    api_key_env: str = ""
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ProviderConfigError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ProviderConfigError("max_concurrency must be >= 1")

    def api_key(self) -> str:
        return os.environ.get(self.api_key_env, "") if self.api_key_env else ""


def validate_messages(messages) -> None:
    """Shared chat precondition: non-empty, first role system or user."""
    if not messages:
        raise ValueError("chat requires at least one message")
    first = messages[0].get("role")
    if first not in ("system", "user"):
        raise ValueError(f"first message role must be system or user, got {first!r}")


from .mock import MockChatModel, MockEmbeddings, MockReranker  # noqa: E402
from .http import HttpChatModel, HttpEmbeddings, HttpReranker  # noqa: E402

__all__ = [
    "ProviderError",
    "ProviderConfigError",
    "ProviderConfig",
    "validate_messages",
    "MockChatModel",
    "MockEmbeddings",
    "MockReranker",
    "HttpChatModel",
    "HttpEmbeddings",
    "HttpReranker",
]
