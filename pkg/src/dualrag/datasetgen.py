"""Fine-tuning dataset construction: grouping, context attachment,
distractor injection, answer generation, quote validation, and export.

Paired chunks are grouped per question into random subsets of one to four
golden documents; one to four golden context chunks are retrieved for the
question; distractors then fill both sides up to a fixed budget of four
document and four context chunks per training record. Answers are generated
from the golden chunks only, must quote them verbatim between
``##begin_quote##``/``##end_quote##`` markers, and are exported as
chat-format JSONL with the full (golden + distractor) prompt, so the model
learns to ignore retrieval noise while citing real evidence.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Chunk, Question
from .pairing import Pair
from .prompts import (
    QUOTE_END,
    SYSTEM_PREAMBLE,
    extract_quotes,
    quote_is_verbatim,
    render_assessment_prompt,
)
from .providers import ProviderError
from .retrieval import DOC_FINAL_K, DOC_STAGE1_K, Index, retrieve

log = logging.getLogger(__name__)

DOC_BUDGET = 4
CTX_BUDGET = 4
MAX_GROUP_SIZE = 4

# Reference hyperparameters for the downstream fine-tuning job, recorded in
# the export sidecar so the external trainer and the dataset travel together.
FINETUNE_HYPERPARAMETERS = {
    "epochs": 1,
    "batch_size": 4,
    "learning_rate_multiplier": 0.2,
}

CORRECTIVE_INSTRUCTION = (
    "IMPORTANT: your previous answer failed quote verification. Copy quoted "
    "sentences EXACTLY, character for character, from the **User Documentation** "
    "between ##begin_quote## and ##end_quote##, and end with a summary paragraph."
)


class GenerationError(Exception):
    pass


class ReviewStatus(str, Enum):
    UNREVIEWED = "unreviewed"
    ACCEPTED = "accepted"
    MINOR_EDIT = "minor_edit"
    MAJOR_EDIT = "major_edit"
    REJECTED = "rejected"


@dataclass
class ValidationReport:
    """Outcome of checking one answer against its golden documents."""

    quotes: list[str] = field(default_factory=list)
    all_verbatim: bool = False
    offending_quotes: list[str] = field(default_factory=list)
    format_ok: bool = False

    @property
    def ok(self) -> bool:
        return self.all_verbatim and self.format_ok

    def to_json(self) -> dict:
        return {
            "quotes": self.quotes,
            "all_verbatim": self.all_verbatim,
            "offending_quotes": self.offending_quotes,
            "format_ok": self.format_ok,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "ValidationReport":
        return cls(
            quotes=list(rec["quotes"]),
            all_verbatim=rec["all_verbatim"],
            offending_quotes=list(rec["offending_quotes"]),
            format_ok=rec["format_ok"],
        )


@dataclass
class TrainingInstance:
    """One fine-tuning record prior to serialization."""

    instance_id: str
    question_id: str
    golden_docs: list[str]
    distractor_docs: list[str]
    golden_ctx: list[str]
    distractor_ctx: list[str]
    doc_order: list[str]
    ctx_order: list[str]
    answer: str = ""
    validation: ValidationReport | None = None
    review_status: ReviewStatus = ReviewStatus.UNREVIEWED
    generation_failed: bool = False
    failure_reason: str = ""

    @property
    def m(self) -> int:
        return len(self.golden_docs)

    @property
    def n(self) -> int:
        return len(self.golden_ctx)

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "question_id": self.question_id,
            "golden_docs": self.golden_docs,
            "distractor_docs": self.distractor_docs,
            "golden_ctx": self.golden_ctx,
            "distractor_ctx": self.distractor_ctx,
            "doc_order": self.doc_order,
            "ctx_order": self.ctx_order,
            "answer": self.answer,
            "validation": self.validation.to_json() if self.validation else None,
            "review_status": self.review_status.value,
            "generation_failed": self.generation_failed,
            "failure_reason": self.failure_reason,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "TrainingInstance":
        return cls(
            instance_id=rec["instance_id"],
            question_id=rec["question_id"],
            golden_docs=list(rec["golden_docs"]),
            distractor_docs=list(rec["distractor_docs"]),
            golden_ctx=list(rec["golden_ctx"]),
            distractor_ctx=list(rec["distractor_ctx"]),
            doc_order=list(rec["doc_order"]),
            ctx_order=list(rec["ctx_order"]),
            answer=rec.get("answer", ""),
            validation=ValidationReport.from_json(rec["validation"]) if rec.get("validation") else None,
            review_status=ReviewStatus(rec.get("review_status", "unreviewed")),
            generation_failed=rec.get("generation_failed", False),
            failure_reason=rec.get("failure_reason", ""),
        )


def instance_id_for(question_id: str, golden_docs: Sequence[str], golden_ctx: Sequence[str]) -> str:
    payload = "|".join([question_id, ",".join(golden_docs), ",".join(golden_ctx)])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def group_pairs(pairs: Sequence[Pair], rng: random.Random) -> list[tuple[str, list[str]]]:
    """Partition each question's matched chunks into random golden subsets.

    Chunks matching the same question are shuffled, then consumed greedily
    into consecutive subsets whose sizes are drawn uniformly from
    {1..4}; the final subset takes whatever remains (always >= 1). Every
    paired chunk lands in exactly one group.
    """
    piles: dict[str, list[str]] = {}
    for pair in pairs:
        if pair.question_id is None:
            raise ValueError(f"NONE pair for chunk {pair.chunk_id} is not part of the pair set")
        piles.setdefault(pair.question_id, []).append(pair.chunk_id)

    groups: list[tuple[str, list[str]]] = []
    for question_id in sorted(piles):
        pile = piles[question_id]
        rng.shuffle(pile)
        i = 0
        while i < len(pile):
            size = rng.randint(1, MAX_GROUP_SIZE)
            group = pile[i : i + size]
            groups.append((question_id, group))
            i += len(group)
    return groups


def attach_context(
    question_text: str,
    ctx_index: Index,
    reranker,
    rng: random.Random,
    stage1_k: int = DOC_STAGE1_K,
    final_k: int = DOC_FINAL_K,
) -> list[str]:
    """Draw n ~ Uniform{1..4} and keep the top n retrieved context chunks.

    A context corpus smaller than the draw shrinks n down (never below 1).
    """
    n = rng.randint(1, CTX_BUDGET)
    ranked = retrieve(ctx_index, question_text, stage1_k, final_k, reranker)
    if not ranked:
        raise GenerationError("context corpus is empty; cannot attach golden context")
    if len(ranked) < n:
        n = max(1, len(ranked))
    return [c.id for c in ranked[:n]]


def inject_distractors(
    question_id: str,
    golden_docs: Sequence[str],
    golden_ctx: Sequence[str],
    doc_pool_ids: Sequence[str],
    ctx_pool_ids: Sequence[str],
    rng: random.Random,
) -> TrainingInstance:
    """Fill both sides to the fixed 4+4 budget with sampled distractors.

    Distractors are drawn uniformly without replacement from the pools
    minus the golden sets; the combined documents and contexts are each
    shuffled so golden position is not a learnable artifact.
    """
    if not 1 <= len(golden_docs) <= DOC_BUDGET:
        raise GenerationError(f"question {question_id}: golden doc count {len(golden_docs)} outside 1..4")
    if not 1 <= len(golden_ctx) <= CTX_BUDGET:
        raise GenerationError(f"question {question_id}: golden ctx count {len(golden_ctx)} outside 1..4")

    doc_complement = sorted(set(doc_pool_ids) - set(golden_docs))
    ctx_complement = sorted(set(ctx_pool_ids) - set(golden_ctx))
    need_docs = DOC_BUDGET - len(golden_docs)
    need_ctx = CTX_BUDGET - len(golden_ctx)
    if len(doc_complement) < need_docs:
        raise GenerationError(
            f"question {question_id}: document pool exhausted "
            f"({len(doc_complement)} available, {need_docs} needed)"
        )
    if len(ctx_complement) < need_ctx:
        raise GenerationError(
            f"question {question_id}: context pool exhausted "
            f"({len(ctx_complement)} available, {need_ctx} needed)"
        )

    distractor_docs = rng.sample(doc_complement, need_docs)
    distractor_ctx = rng.sample(ctx_complement, need_ctx)
    doc_order = list(golden_docs) + distractor_docs
    rng.shuffle(doc_order)
    ctx_order = list(golden_ctx) + distractor_ctx
    rng.shuffle(ctx_order)

    return TrainingInstance(
        instance_id=instance_id_for(question_id, golden_docs, golden_ctx),
        question_id=question_id,
        golden_docs=list(golden_docs),
        distractor_docs=distractor_docs,
        golden_ctx=list(golden_ctx),
        distractor_ctx=distractor_ctx,
        doc_order=doc_order,
        ctx_order=ctx_order,
    )


def _blocks(order: Sequence[str], keep: Sequence[str], texts: Mapping[str, str]) -> list[tuple[int, str]]:
    keep_set = set(keep)
    return [(pos, texts[cid]) for pos, cid in enumerate(order, start=1) if cid in keep_set]


def render_generation_prompt(
    instance: TrainingInstance, question_text: str, texts: Mapping[str, str]
) -> str:
    """The golden-only prompt answers are generated from."""
    return render_assessment_prompt(
        question_text,
        _blocks(instance.doc_order, instance.golden_docs, texts),
        _blocks(instance.ctx_order, instance.golden_ctx, texts),
    )


def render_training_prompt(
    instance: TrainingInstance, question_text: str, texts: Mapping[str, str]
) -> str:
    """The full prompt exported for fine-tuning: golden plus distractors."""
    return render_assessment_prompt(
        question_text,
        _blocks(instance.doc_order, instance.doc_order, texts),
        _blocks(instance.ctx_order, instance.ctx_order, texts),
    )


def generate_answer(
    instance: TrainingInstance,
    question_text: str,
    texts: Mapping[str, str],
    llm,
    corrective: str | None = None,
) -> str:
    """Generate the answer from the golden chunks only."""
    prompt = render_generation_prompt(instance, question_text, texts)
    if corrective:
        prompt = prompt + "\n" + corrective
    messages = [
        {"role": "system", "content": SYSTEM_PREAMBLE},
        {"role": "user", "content": prompt},
    ]
    return llm.chat(messages)


def validate_answer(answer: str, golden_doc_texts: Sequence[str]) -> ValidationReport:
    """Check quote traceability and response format.

    Every marker-delimited span must occur verbatim (whitespace-normalized)
    in some golden document; the format requires at least one quote and a
    non-empty summary after the final quote.
    """
    quotes = extract_quotes(answer)
    offending = [q for q in quotes if not quote_is_verbatim(q, golden_doc_texts)]
    tail = answer.rsplit(QUOTE_END, 1)[-1] if quotes else ""
    return ValidationReport(
        quotes=quotes,
        all_verbatim=not offending,
        offending_quotes=offending,
        format_ok=bool(quotes) and bool(tail.strip()),
    )


def generate_training_instances(
    pairs: Sequence[Pair],
    questions_by_id: Mapping[str, Question],
    doc_pool: Sequence[Chunk],
    ctx_pool: Sequence[Chunk],
    ctx_index: Index,
    llm,
    reranker,
    seed: int,
    retry_invalid: bool = True,
) -> list[TrainingInstance]:
    """Run the full construction: group, attach context, inject distractors,
    generate and validate answers.

    Randomness is split into named substreams of the master seed so the
    structural draws are reproducible regardless of provider behavior. A
    generation failure marks the instance and continues; a failed quote
    validation earns one corrective regeneration before the instance is
    flagged.
    """
    rng_groups = random.Random(f"{seed}:grouping")
    rng_ctx = random.Random(f"{seed}:context")
    rng_distract = random.Random(f"{seed}:distractors")

    texts = {c.id: c.text for c in doc_pool}
    texts.update({c.id: c.text for c in ctx_pool})
    doc_pool_ids = [c.id for c in doc_pool]
    ctx_pool_ids = [c.id for c in ctx_pool]

    instances: list[TrainingInstance] = []
    for question_id, golden_docs in group_pairs(pairs, rng_groups):
        question = questions_by_id[question_id]
        golden_ctx = attach_context(question.text, ctx_index, reranker, rng_ctx)
        instance = inject_distractors(
            question_id, golden_docs, golden_ctx, doc_pool_ids, ctx_pool_ids, rng_distract
        )
        golden_texts = [texts[cid] for cid in instance.golden_docs]
        try:
            instance.answer = generate_answer(instance, question.text, texts, llm)
            instance.validation = validate_answer(instance.answer, golden_texts)
            if retry_invalid and not instance.validation.ok:
                instance.answer = generate_answer(
                    instance, question.text, texts, llm, corrective=CORRECTIVE_INSTRUCTION
                )
                instance.validation = validate_answer(instance.answer, golden_texts)
        except ProviderError as exc:
            instance.generation_failed = True
            instance.failure_reason = str(exc)
            log.error("answer generation failed for %s: %s", instance.instance_id, exc)
        instances.append(instance)
    return instances


def sample_for_review(
    instances: Sequence[TrainingInstance], fraction: float, rng: random.Random
) -> list[str]:
    """Uniform sample (without replacement) of instance ids for human review."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    ids = [inst.instance_id for inst in instances]
    if not ids:
        return []
    size = max(1, round(fraction * len(ids)))
    return rng.sample(ids, size)


def write_instances(instances: Sequence[TrainingInstance], path: str | Path) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_json(), sort_keys=True, ensure_ascii=False) + "\n")
    return len(instances)


def read_instances(path: str | Path) -> list[TrainingInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TrainingInstance.from_json(json.loads(line)))
    return out


def export_dataset(
    instances: Sequence[TrainingInstance],
    questions_by_id: Mapping[str, Question],
    texts: Mapping[str, str],
    out_path: str | Path,
    sidecar_path: str | Path,
    seed: int,
    reviews: Mapping[str, object] | None = None,
    include_flagged: bool = False,
) -> dict:
    """Write provider-ready chat JSONL plus a metadata sidecar.

    Each line holds the fixed system preamble, the full training prompt
    (golden and distractor blocks in their shuffled orders), and the answer
    — the reviewer-edited answer when one exists. Instances that failed
    generation or quote validation are excluded unless ``include_flagged``;
    reviewer-rejected instances are always excluded. Output is
    byte-identical across reruns with the same inputs and seed.
    """
    reviews = reviews or {}
    exported = skipped = flagged = 0
    lines: list[str] = []
    records: list[dict] = []

    for instance in instances:
        if instance.generation_failed:
            skipped += 1
            continue
        review = reviews.get(instance.instance_id)
        status = instance.review_status
        answer = instance.answer
        if review is not None:
            status = review.status  # type: ignore[attr-defined]
            if getattr(review, "edited_answer", None):
                answer = review.edited_answer  # type: ignore[attr-defined]
        if status is ReviewStatus.REJECTED:
            skipped += 1
            continue

        golden_texts = [texts[cid] for cid in instance.golden_docs]
        validation = validate_answer(answer, golden_texts)
        if not validation.ok:
            flagged += 1
            if not include_flagged:
                continue

        question = questions_by_id[instance.question_id]
        prompt = render_training_prompt(instance, question.text, texts)
        line = json.dumps(
            {
                "messages": [
                    {"role": "system", "content": SYSTEM_PREAMBLE},
                    {"role": "user", "content": prompt},
                    {"role": "assistant", "content": answer},
                ]
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        records.append(
            {
                "line": len(lines),
                "instance_id": instance.instance_id,
                "question_id": instance.question_id,
                "m": instance.m,
                "n": instance.n,
                "golden_docs": instance.golden_docs,
                "distractor_docs": instance.distractor_docs,
                "golden_ctx": instance.golden_ctx,
                "distractor_ctx": instance.distractor_ctx,
                "doc_order": instance.doc_order,
                "ctx_order": instance.ctx_order,
                "review_status": status.value,
                "all_verbatim": validation.all_verbatim,
            }
        )
        lines.append(line)
        exported += 1

    Path(out_path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    sidecar = {
        "version": 1,
        "seed": seed,
        "finetune_hyperparameters": FINETUNE_HYPERPARAMETERS,
        "records": records,
    }
    Path(sidecar_path).write_text(
        json.dumps(sidecar, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return {"exported": exported, "skipped": skipped, "flagged": flagged}
