"""Extraction of section/annex references from question text and their
resolution to passages of the standards corpus.

Compliance questions frequently cite the standard they were derived from,
e.g. "... a Verification Report (see 6.2.4.13)" or "... as described in
Annex A". Those citations carry meaning the question text alone does not,
so they are extracted up front and resolved against the context corpus
whenever a question is shown to a selector or generator model.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class RefKind(str, Enum):
    SECTION = "section"
    ANNEX = "annex"


@dataclass(frozen=True)
class Reference:
    """One extracted citation: the matched substring and its normalized path."""

    raw: str
    kind: RefKind
    path: str


# Recognized citation forms, one auditable table. Order matters only for
# overlap resolution (earlier+longer match wins); recall is preferred over
# precision since a false positive merely adds context passages.
#   (see 6.2.4.13)      parenthesised cross-reference, >=1 dot
#   7.2.4.5             bare dotted section, >=2 dots
#   Annex A / annex L.2 annex letter, optional dotted digits
#   clause 6.2          explicit clause citation, >=1 dot
_PATTERNS: list[tuple[RefKind, re.Pattern[str]]] = [
    (RefKind.SECTION, re.compile(r"\(\s*see\s+(\d+(?:\.\d+)+)\s*\)", re.IGNORECASE)),
    (RefKind.ANNEX, re.compile(r"\bannex\s+([A-Z])(?:\.(\d+(?:\.\d+)*))?\b", re.IGNORECASE)),
    (RefKind.SECTION, re.compile(r"\bclause\s+(\d+(?:\.\d+)+)\b", re.IGNORECASE)),
    (RefKind.SECTION, re.compile(r"\b\d+(?:\.\d+){2,}\b")),
]


def _annex_path(match: re.Match[str]) -> str:
    letter = match.group(1).upper()
    digits = match.group(2)
    return f"{letter}.{digits}" if digits else letter


def extract_references(text: str) -> list[Reference]:
    """Return all non-overlapping references in document order.

    De-duplicated by normalized path; the first occurrence wins.
    """
    candidates: list[tuple[int, int, Reference]] = []
    for kind, pattern in _PATTERNS:
        for m in pattern.finditer(text):
            if kind is RefKind.ANNEX:
                path = _annex_path(m)
            elif m.groups():
                path = m.group(1)
            else:
                path = m.group(0)
            candidates.append((m.start(), -m.end(), Reference(m.group(0), kind, path)))

    candidates.sort(key=lambda c: (c[0], c[1]))
    out: list[Reference] = []
    seen_paths: set[str] = set()
    covered_until = -1
    for start, neg_end, ref in candidates:
        end = -neg_end
        if start < covered_until:
            continue
        covered_until = end
        if ref.path in seen_paths:
            continue
        seen_paths.add(ref.path)
        out.append(ref)
    return out


# Heading-like occurrences inside context chunks: a dotted section number at
# the start of a line, or an Annex/clause citation anywhere.
_HEADING_SECTION_RE = re.compile(r"^\s*(\d+(?:\.\d+)+)\b", re.MULTILINE)
_HEADING_ANNEX_RE = re.compile(r"\bannex\s+([A-Z])(?:\.(\d+(?:\.\d+)*))?\b", re.IGNORECASE)
_HEADING_CLAUSE_RE = re.compile(r"\bclause\s+(\d+(?:\.\d+)+)\b", re.IGNORECASE)


@dataclass
class RefMap:
    """Normalized path -> ids of context chunks carrying that heading."""

    entries: dict[str, list[str]] = field(default_factory=dict)
    texts: dict[str, str] = field(default_factory=dict)

    def lookup(self, path: str) -> list[str]:
        return list(self.entries.get(path, []))


def build_reference_map(context_chunks) -> RefMap:
    """Index context chunks by the section/annex headings they contain.

    A chunk is listed under path P iff its text contains a heading-like
    occurrence of P: a line-initial dotted number, or a path following the
    word "Annex" or "clause".
    """
    refmap = RefMap()
    for chunk in context_chunks:
        if getattr(chunk.corpus_kind, "value", chunk.corpus_kind) != "context":
            raise ValueError(f"chunk {chunk.id} is not a context chunk")
        paths: list[str] = []
        paths.extend(m.group(1) for m in _HEADING_SECTION_RE.finditer(chunk.text))
        paths.extend(_annex_path(m) for m in _HEADING_ANNEX_RE.finditer(chunk.text))
        paths.extend(m.group(1) for m in _HEADING_CLAUSE_RE.finditer(chunk.text))
        refmap.texts[chunk.id] = chunk.text
        for path in paths:
            bucket = refmap.entries.setdefault(path, [])
            if chunk.id not in bucket:
                bucket.append(chunk.id)
    return refmap


def resolve(
    references: list[Reference],
    refmap: RefMap,
    max_tokens: int | None = None,
) -> tuple[list[str], list[Reference]]:
    """Resolve references to unique passages, in reference order.

    Returns (passages, unresolved). Passages are the verbatim text of
    context chunks; unresolvable references are reported, never dropped
    silently. When ``max_tokens`` is set, passages stop being added once
    the running whitespace-token total exceeds it (at least one passage is
    always kept per resolvable reference list).
    """
    passages: list[str] = []
    unresolved: list[Reference] = []
    seen: set[str] = set()
    total_tokens = 0
    for ref in references:
        chunk_ids = refmap.entries.get(ref.path)
        if not chunk_ids:
            unresolved.append(ref)
            continue
        for cid in chunk_ids:
            if cid in seen:
                continue
            seen.add(cid)
            text = refmap.texts[cid]
            if max_tokens is not None and passages and total_tokens >= max_tokens:
                continue
            passages.append(text)
            total_tokens += len(text.split())
    return passages, unresolved


def reference_coverage(questions) -> dict:
    """Fraction of questions carrying at least one extracted reference."""
    total = len(questions)
    with_refs = sum(1 for q in questions if q.references)
    return {
        "total_questions": total,
        "with_references": with_refs,
        "fraction": (with_refs / total) if total else 0.0,
    }
