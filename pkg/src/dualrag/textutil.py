"""Small text helpers shared across modules."""
from __future__ import annotations

import re

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased Unicode-word tokenization (BM25, mocks, overlap scoring)."""
    return _WORD_RE.findall(text.lower())


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs and trim; used for verbatim-quote matching."""
    return " ".join(text.split())
