"""Structural integrity checks over an exported dataset and its sidecar.

The checker re-derives everything it can from the chunk stores and split
assignment and compares against both the sidecar metadata and the actual
message text of every record, so corruption of either is caught: block
counts and budgets, golden/distractor disjointness, split hygiene,
quote verbatimness, prompt/text consistency, and duplicated lines.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Chunk, Split, SplitAssignment
from .datasetgen import DOC_BUDGET, CTX_BUDGET, validate_answer
from .prompts import (
    DOC_BLOCK_RE,
    CTX_BLOCK_RE,
    extract_context_section,
    extract_user_docs_section,
    render_assessment_prompt,
)


def verify_dataset(
    dataset_path: str | Path,
    sidecar_path: str | Path,
    doc_chunks: Sequence[Chunk],
    ctx_chunks: Sequence[Chunk],
    splits: SplitAssignment,
    questions_by_id: Mapping[str, object],
) -> list[str]:
    """Return a list of violations; empty means the export is sound."""
    violations: list[str] = []
    doc_by_id = {c.id: c for c in doc_chunks}
    ctx_by_id = {c.id: c for c in ctx_chunks}

    try:
        sidecar = json.loads(Path(sidecar_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return [f"sidecar unreadable: {exc}"]
    records = {rec["line"]: rec for rec in sidecar.get("records", [])}

    lines = Path(dataset_path).read_text(encoding="utf-8").splitlines()
    if len(lines) != len(records):
        violations.append(f"dataset has {len(lines)} lines but sidecar lists {len(records)}")

    seen_lines: dict[str, int] = {}
    for lineno, line in enumerate(lines):
        label = f"line {lineno}"
        if line in seen_lines:
            violations.append(f"{label}: duplicated line (same as line {seen_lines[line]})")
            continue
        seen_lines[line] = lineno

        try:
            payload = json.loads(line)
            messages = payload["messages"]
            roles = [m["role"] for m in messages]
            user_msg = messages[1]["content"]
            assistant_msg = messages[2]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            violations.append(f"{label}: malformed record: {exc}")
            continue
        if roles != ["system", "user", "assistant"]:
            violations.append(f"{label}: unexpected roles {roles}")
            continue

        meta = records.get(lineno)
        if meta is None:
            violations.append(f"{label}: no sidecar entry")
            continue

        m, n = meta["m"], meta["n"]
        golden_docs, distractor_docs = meta["golden_docs"], meta["distractor_docs"]
        golden_ctx, distractor_ctx = meta["golden_ctx"], meta["distractor_ctx"]
        doc_order, ctx_order = meta["doc_order"], meta["ctx_order"]

        if not 1 <= m <= DOC_BUDGET or len(golden_docs) != m:
            violations.append(f"{label}: m={m} invalid or inconsistent with golden_docs")
        if not 1 <= n <= CTX_BUDGET or len(golden_ctx) != n:
            violations.append(f"{label}: n={n} invalid or inconsistent with golden_ctx")
        if len(golden_docs) + len(distractor_docs) != DOC_BUDGET:
            violations.append(f"{label}: doc budget != {DOC_BUDGET}")
        if len(golden_ctx) + len(distractor_ctx) != CTX_BUDGET:
            violations.append(f"{label}: ctx budget != {CTX_BUDGET}")
        overlap = set(golden_docs) & set(distractor_docs)
        if overlap:
            violations.append(f"{label}: golden/distractor doc overlap {sorted(overlap)}")
        ctx_overlap = set(golden_ctx) & set(distractor_ctx)
        if ctx_overlap:
            violations.append(f"{label}: golden/distractor ctx overlap {sorted(ctx_overlap)}")
        if sorted(doc_order) != sorted(golden_docs + distractor_docs):
            violations.append(f"{label}: doc_order is not a permutation of the doc sets")
        if sorted(ctx_order) != sorted(golden_ctx + distractor_ctx):
            violations.append(f"{label}: ctx_order is not a permutation of the ctx sets")

        for cid in golden_docs + distractor_docs:
            chunk = doc_by_id.get(cid)
            if chunk is None:
                violations.append(f"{label}: unknown document chunk {cid}")
            elif splits.project_splits.get(chunk.project_id) is not Split.TRAIN:
                violations.append(
                    f"{label}: chunk {cid} from project {chunk.project_id!r} is not in a train project"
                )
        for cid in golden_ctx + distractor_ctx:
            if cid not in ctx_by_id:
                violations.append(f"{label}: unknown context chunk {cid}")

        try:
            docs_section = extract_user_docs_section(user_msg)
            ctx_section = extract_context_section(user_msg)
        except ValueError:
            violations.append(f"{label}: prompt structure missing its section rulers")
            continue
        n_doc_blocks = len(DOC_BLOCK_RE.findall(docs_section))
        n_ctx_blocks = len(CTX_BLOCK_RE.findall(ctx_section))
        if n_doc_blocks != DOC_BUDGET:
            violations.append(f"{label}: {n_doc_blocks} document blocks, expected {DOC_BUDGET}")
        if n_ctx_blocks != CTX_BUDGET:
            violations.append(f"{label}: {n_ctx_blocks} context blocks, expected {CTX_BUDGET}")

        question = questions_by_id.get(meta["question_id"])
        if question is None:
            violations.append(f"{label}: unknown question {meta['question_id']}")
            continue
        texts = {}
        ok = True
        for cid in doc_order + ctx_order:
            chunk = doc_by_id.get(cid) or ctx_by_id.get(cid)
            if chunk is None:
                ok = False
                break
            texts[cid] = chunk.text
        if ok:
            expected = render_assessment_prompt(
                question.text,
                [(i, texts[cid]) for i, cid in enumerate(doc_order, start=1)],
                [(i, texts[cid]) for i, cid in enumerate(ctx_order, start=1)],
            )
            if user_msg != expected:
                violations.append(f"{label}: user message does not match re-rendered prompt")

            golden_texts = [texts[cid] for cid in golden_docs if cid in texts]
            report = validate_answer(assistant_msg, golden_texts)
            if not report.all_verbatim:
                violations.append(
                    f"{label}: non-verbatim quote(s): {report.offending_quotes[:1]}"
                )
            if not report.format_ok:
                violations.append(f"{label}: answer format invalid (quotes/summary missing)")

    return violations
