"""Corpus management: document/standard ingestion into chunk stores, the
compliance question corpus, and train/test/validation splitting.

Two chunk corpora exist side by side. Documentation chunks belong to a
project (one safety-critical software project per documentation set) and
are split by project; context chunks come from the applicable standard,
live under a single reserved project id, and are shared across all splits.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .refextract import Reference, RefKind, extract_references

log = logging.getLogger(__name__)

STANDARDS_PROJECT_ID = "standards"
DEFAULT_QUESTION_PREFIX = "Does the user documentation contain"
DEFAULT_WINDOW_TOKENS = 350
DEFAULT_OVERLAP_TOKENS = 50


class CorpusKind(str, Enum):
    DOCUMENT = "document"
    CONTEXT = "context"


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"
    VAL = "val"


class QuestionOrigin(str, Enum):
    SHALL_STATEMENT = "shall_statement"
    INTERNAL_GUIDANCE = "internal_guidance"


class IngestError(Exception):
    pass


class QuestionLoadError(Exception):
    pass


class SplitError(Exception):
    pass


@dataclass(frozen=True)
class Chunk:
    """A contiguous text span of one source file, with provenance."""

    id: str
    corpus_kind: CorpusKind
    project_id: str
    source_doc: str
    seq: int
    text: str
    approx_tokens: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "corpus_kind": self.corpus_kind.value,
            "project_id": self.project_id,
            "source_doc": self.source_doc,
            "seq": self.seq,
            "text": self.text,
            "approx_tokens": self.approx_tokens,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Chunk":
        return cls(
            id=rec["id"],
            corpus_kind=CorpusKind(rec["corpus_kind"]),
            project_id=rec["project_id"],
            source_doc=rec["source_doc"],
            seq=rec["seq"],
            text=rec["text"],
            approx_tokens=rec["approx_tokens"],
        )


@dataclass(frozen=True)
class Question:
    """One compliance query, optionally carrying extracted references."""

    id: str
    text: str
    origin: QuestionOrigin
    references: tuple[Reference, ...] = ()
    split: Split | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "origin": self.origin.value,
            "references": [
                {"raw": r.raw, "kind": r.kind.value, "path": r.path} for r in self.references
            ],
            "split": self.split.value if self.split else None,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Question":
        return cls(
            id=rec["id"],
            text=rec["text"],
            origin=QuestionOrigin(rec["origin"]),
            references=tuple(
                Reference(r["raw"], RefKind(r["kind"]), r["path"]) for r in rec.get("references", [])
            ),
            split=Split(rec["split"]) if rec.get("split") else None,
        )


@dataclass(frozen=True)
class SplitAssignment:
    question_splits: dict[str, Split]
    project_splits: dict[str, Split]
    seed: int

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "question_splits": {k: v.value for k, v in self.question_splits.items()},
            "project_splits": {k: v.value for k, v in self.project_splits.items()},
        }

    @classmethod
    def from_json(cls, rec: dict) -> "SplitAssignment":
        return cls(
            question_splits={k: Split(v) for k, v in rec["question_splits"].items()},
            project_splits={k: Split(v) for k, v in rec["project_splits"].items()},
            seed=rec["seed"],
        )


def chunk_id(source_doc: str, seq: int, text: str) -> str:
    """Content hash, stable across re-runs of the same input."""
    digest = hashlib.sha256(f"{source_doc}\x00{seq}\x00{text}".encode("utf-8")).hexdigest()
    return digest[:16]


def window_starts(n_tokens: int, window: int, overlap: int) -> list[int]:
    """Start offsets of the sliding token windows covering ``n_tokens``.

    Consecutive windows overlap by exactly ``overlap`` tokens; the final
    window absorbs the remainder and may be shorter than ``window``.
    """
    if window <= 0 or overlap < 0 or overlap >= window:
        raise ValueError(f"invalid window/overlap: {window}/{overlap}")
    step = window - overlap
    starts = [0]
    while starts[-1] + window < n_tokens:
        starts.append(starts[-1] + step)
    return starts


def _tokens_with_breaks(text: str) -> list[tuple[str, bool]]:
    """Whitespace tokens tagged with whether they began a source line.

    The tag lets chunk text keep line-initial structure (section headings
    in standards stay line-initial inside chunks) while all other
    whitespace collapses to single spaces.
    """
    tokens: list[tuple[str, bool]] = []
    for line in text.splitlines():
        starts_line = True
        for tok in line.split():
            tokens.append((tok, starts_line))
            starts_line = False
    return tokens


def _join_window(window_tokens: Sequence[tuple[str, bool]]) -> str:
    parts = [window_tokens[0][0]]
    for tok, starts_line in window_tokens[1:]:
        parts.append("\n" if starts_line else " ")
        parts.append(tok)
    return "".join(parts)


def ingest_documents(
    paths: Sequence[str | Path],
    project_id: str = "",
    kind: CorpusKind = CorpusKind.DOCUMENT,
    window: int = DEFAULT_WINDOW_TOKENS,
    overlap: int = DEFAULT_OVERLAP_TOKENS,
    base_dir: str | Path | None = None,
) -> list[Chunk]:
    """Chunk UTF-8 text/Markdown files into a corpus.

    A sliding window of whitespace tokens covers each file in document
    order; consecutive chunks overlap by ``overlap`` tokens. Line breaks
    survive inside chunk text (heading detection depends on them); other
    whitespace collapses. Files are processed in path-sorted order.
    Context ingestion forces the reserved standards project id. Empty
    files are skipped with a warning; unreadable files raise
    :class:`IngestError` naming the path.

    ``base_dir`` controls the recorded file identifier: when given,
    ``source_doc`` is the path relative to it, so chunk ids do not depend
    on where the corpus happens to live on disk.
    """
    if kind is CorpusKind.CONTEXT:
        project_id = STANDARDS_PROJECT_ID
    elif not project_id:
        raise IngestError("document ingestion requires a project_id")

    chunks: list[Chunk] = []
    for path in sorted(Path(p) for p in paths):
        source_doc = str(path.relative_to(base_dir)) if base_dir else str(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise IngestError(f"cannot read {path}: {exc}") from exc
        tokens = _tokens_with_breaks(text)
        if not tokens:
            log.warning("skipping empty file %s", path)
            continue
        for seq, start in enumerate(window_starts(len(tokens), window, overlap)):
            piece_tokens = tokens[start : start + window]
            piece = _join_window(piece_tokens)
            chunks.append(
                Chunk(
                    id=chunk_id(source_doc, seq, piece),
                    corpus_kind=kind,
                    project_id=project_id,
                    source_doc=source_doc,
                    seq=seq,
                    text=piece,
                    approx_tokens=len(piece_tokens),
                )
            )
    return chunks


def write_chunks(chunks: Iterable[Chunk], path: str | Path) -> int:
    """Persist chunks as JSONL, one per line. Returns the count written."""
    chunks = list(chunks)
    seen: set[str] = set()
    for c in chunks:
        if c.id in seen:
            raise IngestError(f"duplicate chunk id {c.id}")
        seen.add(c.id)
    with open(path, "w", encoding="utf-8") as fh:
        for c in chunks:
            fh.write(json.dumps(c.to_json(), sort_keys=True, ensure_ascii=False) + "\n")
    return len(chunks)


def read_chunks(path: str | Path) -> list[Chunk]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Chunk.from_json(json.loads(line)))
    return out


def load_questions(
    path: str | Path,
    prefix: str = DEFAULT_QUESTION_PREFIX,
) -> list[Question]:
    """Load the question corpus from a JSON array of {id, text, origin}.

    References are extracted from each question's text on load. Duplicate
    ids and malformed records raise :class:`QuestionLoadError` naming the
    record index.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise QuestionLoadError("question corpus must be a JSON array")

    questions: list[Question] = []
    seen: set[str] = set()
    for i, rec in enumerate(data):
        if not isinstance(rec, dict) or not {"id", "text", "origin"} <= set(rec):
            raise QuestionLoadError(f"record {i}: expected {{id, text, origin}}")
        qid, text = rec["id"], rec["text"]
        if not isinstance(qid, str) or not qid:
            raise QuestionLoadError(f"record {i}: invalid id")
        if qid in seen:
            raise QuestionLoadError(f"record {i}: duplicate id {qid!r}")
        seen.add(qid)
        if not isinstance(text, str) or not text.startswith(prefix):
            raise QuestionLoadError(
                f"record {i}: text must begin with the interrogative prefix {prefix!r}"
            )
        try:
            origin = QuestionOrigin(rec["origin"])
        except ValueError as exc:
            raise QuestionLoadError(f"record {i}: unknown origin {rec['origin']!r}") from exc
        questions.append(
            Question(id=qid, text=text, origin=origin, references=tuple(extract_references(text)))
        )
    return questions


def write_questions(questions: Iterable[Question], path: str | Path) -> int:
    questions = list(questions)
    with open(path, "w", encoding="utf-8") as fh:
        for q in questions:
            fh.write(json.dumps(q.to_json(), sort_keys=True, ensure_ascii=False) + "\n")
    return len(questions)


def read_questions(path: str | Path) -> list[Question]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Question.from_json(json.loads(line)))
    return out


def _validate_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3:
        raise SplitError("ratios must be a (train, test, val) triple")
    if any(r < 0 for r in ratios):
        raise SplitError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must sum to 1.0, got {sum(ratios)}")
    return float(ratios[0]), float(ratios[1]), float(ratios[2])


def split_corpus(
    questions: Sequence[Question],
    project_ids: Sequence[str] | None,
    ratios: Sequence[float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitAssignment:
    """Assign questions and projects to disjoint train/test/val splits.

    Question holdouts are drawn from the standard-derived (shall
    statement) questions only: internal-guidance questions exist to enrich
    training and always land in train. Test and val each receive
    ``floor(n_shall * ratio)`` questions (at least 1 when the corpus
    permits); train receives everything else, including remainders.

    Projects follow the published protocol: exactly one project each for
    test and val, the rest train. Fewer than three projects cannot be
    split.
    """
    _, r_test, r_val = _validate_ratios(ratios)

    eligible = sorted(q.id for q in questions if q.origin is QuestionOrigin.SHALL_STATEMENT)
    guidance = [q.id for q in questions if q.origin is QuestionOrigin.INTERNAL_GUIDANCE]
    n = len(eligible)
    n_test = math.floor(n * r_test)
    n_val = math.floor(n * r_val)
    if n >= 3:
        n_test = max(1, n_test)
        n_val = max(1, n_val)

    rng = random.Random(f"{seed}:questions")
    shuffled = list(eligible)
    rng.shuffle(shuffled)
    question_splits: dict[str, Split] = {}
    for qid in shuffled[:n_test]:
        question_splits[qid] = Split.TEST
    for qid in shuffled[n_test : n_test + n_val]:
        question_splits[qid] = Split.VAL
    for qid in shuffled[n_test + n_val :]:
        question_splits[qid] = Split.TRAIN
    for qid in guidance:
        question_splits[qid] = Split.TRAIN

    project_splits: dict[str, Split] = {}
    if project_ids:
        unique = sorted(set(project_ids))
        if len(unique) < 3:
            raise SplitError(f"project splitting needs >=3 projects, got {len(unique)}")
        prng = random.Random(f"{seed}:projects")
        order = list(unique)
        prng.shuffle(order)
        project_splits[order[0]] = Split.TEST
        project_splits[order[1]] = Split.VAL
        for pid in order[2:]:
            project_splits[pid] = Split.TRAIN

    return SplitAssignment(question_splits=question_splits, project_splits=project_splits, seed=seed)


def apply_question_splits(
    questions: Sequence[Question], assignment: SplitAssignment
) -> list[Question]:
    """Stamp each question with its split. A split is assigned exactly once."""
    out = []
    for q in questions:
        if q.split is not None:
            raise SplitError(f"question {q.id} already has split {q.split.value}")
        if q.id not in assignment.question_splits:
            raise SplitError(f"question {q.id} missing from split assignment")
        out.append(replace(q, split=assignment.question_splits[q.id]))
    return out


def split_counts(assignment: SplitAssignment) -> dict:
    qc = {s.value: 0 for s in Split}
    for s in assignment.question_splits.values():
        qc[s.value] += 1
    pc = {s.value: 0 for s in Split}
    for s in assignment.project_splits.values():
        pc[s.value] += 1
    return {"questions": qc, "projects": pc}


def write_splits(assignment: SplitAssignment, path: str | Path) -> None:
    Path(path).write_text(json.dumps(assignment.to_json(), indent=2, sort_keys=True) + "\n")


def read_splits(path: str | Path) -> SplitAssignment:
    return SplitAssignment.from_json(json.loads(Path(path).read_text()))
