"""Pairing of training document chunks with their most relevant compliance
question.

For each train chunk, a question retriever proposes up to five candidates
(25 by hybrid score, reranked to 5); the selector LLM then picks the single
most relevant one, seeing the chunk, the numbered candidates, and the
standard passages resolved from any references the candidates carry. A
chunk that matches no question is recorded with a NONE sentinel: it stays
out of the pair set but remains eligible as a distractor.

Pairings are journaled to JSONL as they complete, so an interrupted batch
resumes without re-querying the LLM for finished chunks.
"""
from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Chunk, Question
from .refextract import RefMap, resolve
from .retrieval import QUESTION_FINAL_K, QUESTION_STAGE1_K, Index, retrieve

log = logging.getLogger(__name__)

SELECTION_INSTRUCTIONS = (
    "Reply with the number of the single most relevant question, or NONE if "
    "no candidate is answerable from this document chunk."
)
STRICT_RETRY_INSTRUCTIONS = (
    "Your previous reply could not be parsed. Answer with ONLY a single "
    "integer between 1 and {n}, or the single word NONE."
)

_REPLY_RE = re.compile(r"\b(none|\d+)\b", re.IGNORECASE)


@dataclass(frozen=True)
class Pair:
    """One chunk's pairing outcome. question_id is None for NONE verdicts."""

    chunk_id: str
    question_id: str | None
    candidate_ids: tuple[str, ...]
    selection_rationale: str = ""

    def to_json(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "question_id": self.question_id,
            "candidate_ids": list(self.candidate_ids),
            "selection_rationale": self.selection_rationale,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Pair":
        return cls(
            chunk_id=rec["chunk_id"],
            question_id=rec["question_id"],
            candidate_ids=tuple(rec["candidate_ids"]),
            selection_rationale=rec.get("selection_rationale", ""),
        )


def candidate_questions(
    chunk: Chunk,
    question_index: Index,
    reranker,
    stage1_k: int = QUESTION_STAGE1_K,
    final_k: int = QUESTION_FINAL_K,
) -> list[Question]:
    """Retrieve candidate questions for a chunk (the question retriever)."""
    return retrieve(question_index, chunk.text, stage1_k, final_k, reranker)


def build_selection_prompt(chunk: Chunk, candidates: Sequence[Question], refmap: RefMap) -> str:
    """Selection prompt: chunk text, numbered candidates, resolved passages.

    Each candidate's extracted references are resolved against the
    standards corpus so the selector sees the complete meaning of questions
    that cite sections or annexes it would otherwise not know.
    """
    lines = [
        "A document chunk from safety-critical software documentation follows.",
        "",
        "--- Document chunk ---",
        chunk.text,
        "--- End of chunk ---",
        "",
        "Candidate compliance questions:",
    ]
    for i, question in enumerate(candidates, start=1):
        lines.append(f"{i}. {question.text}")
        passages, unresolved = resolve(list(question.references), refmap)
        for passage in passages:
            lines.append(f"   Referenced standard passage for question {i}:")
            lines.append(f"   {passage}")
        for ref in unresolved:
            lines.append(f"   (reference {ref.path} could not be resolved)")
    lines += ["", SELECTION_INSTRUCTIONS]
    return "\n".join(lines)


def parse_selection_reply(reply: str, n_candidates: int) -> int | None:
    """Parse the selector's reply to a 1-based ordinal, or None for NONE.

    Raises ValueError when no verdict can be extracted.
    """
    match = _REPLY_RE.search(reply)
    if not match:
        raise ValueError(f"no verdict in reply: {reply!r}")
    token = match.group(1).lower()
    if token == "none":
        return None
    ordinal = int(token)
    if not 1 <= ordinal <= n_candidates:
        raise ValueError(f"ordinal {ordinal} outside 1..{n_candidates}")
    return ordinal


def select_question(chunk: Chunk, candidates: Sequence[Question], refmap: RefMap, llm) -> Pair:
    """Ask the LLM for the single most relevant candidate.

    An unparseable reply earns one retry with a stricter instruction; a
    second failure yields a NONE pair with the raw replies as diagnostic.
    """
    candidate_ids = tuple(q.id for q in candidates)
    if not candidates:
        return Pair(chunk.id, None, (), "no candidates retrieved")

    prompt = build_selection_prompt(chunk, candidates, refmap)
    reply = llm.chat([{"role": "user", "content": prompt}])
    try:
        ordinal = parse_selection_reply(reply, len(candidates))
    except ValueError:
        strict = prompt + "\n\n" + STRICT_RETRY_INSTRUCTIONS.format(n=len(candidates))
        retry_reply = llm.chat([{"role": "user", "content": strict}])
        try:
            ordinal = parse_selection_reply(retry_reply, len(candidates))
        except ValueError:
            log.warning("chunk %s: unparseable selection replies", chunk.id)
            return Pair(
                chunk.id, None, candidate_ids,
                f"unparseable replies: {reply!r} / {retry_reply!r}",
            )
        reply = retry_reply

    question_id = candidates[ordinal - 1].id if ordinal is not None else None
    return Pair(chunk.id, question_id, candidate_ids, reply.strip())


def load_journal(path: str | Path) -> list[Pair]:
    pairs = []
    path = Path(path)
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    pairs.append(Pair.from_json(json.loads(line)))
    return pairs


def matched_pairs(pairs: Sequence[Pair]) -> list[Pair]:
    """The pair set proper: NONE verdicts are audit records, not members."""
    return [p for p in pairs if p.question_id is not None]


def build_pairs(
    train_chunks: Sequence[Chunk],
    question_index: Index,
    refmap: RefMap,
    llm,
    reranker,
    journal_path: str | Path,
    resume: bool = False,
    max_workers: int = 1,
) -> list[Pair]:
    """Pair every train chunk, journaling incrementally.

    With ``resume``, chunks already present in the journal are skipped.
    Per-chunk failures are recorded as NONE pairs with a diagnostic and
    never abort the batch. Results are appended in input-chunk order
    regardless of worker count, so reruns with the same seed and mock
    providers produce byte-identical journals.
    """
    journal_path = Path(journal_path)
    done: dict[str, Pair] = {}
    if resume:
        for pair in load_journal(journal_path):
            done[pair.chunk_id] = pair
    elif journal_path.exists():
        journal_path.unlink()

    todo = [c for c in train_chunks if c.id not in done]

    def work(chunk: Chunk) -> Pair:
        try:
            candidates = candidate_questions(chunk, question_index, reranker)
            return select_question(chunk, candidates, refmap, llm)
        except Exception as exc:  # noqa: BLE001 - batch must survive any one chunk
            log.error("pairing failed for chunk %s: %s", chunk.id, exc)
            return Pair(chunk.id, None, (), f"error: {exc}")

    new_pairs: list[Pair] = []
    with open(journal_path, "a", encoding="utf-8") as fh:
        with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
            for pair in pool.map(work, todo):
                fh.write(json.dumps(pair.to_json(), sort_keys=True, ensure_ascii=False) + "\n")
                fh.flush()
                new_pairs.append(pair)

    ordered = list(done.values()) + new_pairs
    return ordered
