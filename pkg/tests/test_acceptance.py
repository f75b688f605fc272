"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Tolerances are pinned here and nowhere else: score comparisons at 1e-9,
counts exact, the m-distribution window [0.15, 0.35], and the stated
runtime ceilings.
"""
from __future__ import annotations

import hashlib
import json
import random
import shutil
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from dualrag import corpus as corpusmod
from dualrag.cli import main as cli_main
from dualrag.datasetgen import group_pairs
from dualrag.evalharness import Rating, build_blind_set, summarize, write_blind_files
from dualrag.pairing import Pair
from dualrag.providers import MockEmbeddings, MockReranker
from dualrag.refextract import extract_references, reference_coverage
from dualrag.retrieval import build_index, bm25_scores, hybrid_search, retrieve, save_index

from conftest import make_chunk, make_question, write_corpus_tree
from test_corpus import write_question_file
from test_refextract import EXTRACTION_CASES
from test_retrieval import BM25_DOCS, BM25_EXPECTED

REPO_ROOT = Path(__file__).resolve().parent.parent


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE [FAIL] {name}")
        raise
    print(f"ACCEPTANCE [PASS] {name}")


def run_pipeline(root: Path, seed: int = 42) -> Path:
    ws = write_corpus_tree(root)
    out = root / "out"
    base = ["--out-dir", str(out), "--seed", str(seed)]
    steps = [
        base + [
            "ingest",
            "--docs", str(ws["projects_dir"]),
            "--context", str(ws["standard_path"]),
            "--questions", str(ws["questions_path"]),
            "--window", "60",
            "--overlap", "10",
        ],
        base + ["index"],
        base + ["pair"],
        base + ["generate"],
        base + ["export"],
    ]
    for step in steps:
        assert cli_main(step) == 0, f"pipeline step failed: {step}"
    return out


def test_retrieval_oracle_equivalence(tmp_path):
    with criterion("retrieval oracle equivalence (alpha=0.75, top-10, <5s)"):
        started = time.monotonic()
        embedder = MockEmbeddings()
        chunks = [
            make_chunk(
                f"c{i:02d}",
                f"Document {i} covers {'verification' if i % 3 == 0 else 'testing'} "
                f"activity {i % 7} with outcome {i % 5} recorded.",
            )
            for i in range(50)
        ]
        index = build_index(chunks, embedder)
        index_path = tmp_path / "index.json"
        save_index(index, index_path)

        for query in ("verification activity recorded", "testing outcome 3", "unrelated words"):
            ours = hybrid_search(index, query, k=10, alpha=0.75)
            script = subprocess.run(
                [
                    sys.executable,
                    str(REPO_ROOT / "scripts" / "bruteforce_hybrid.py"),
                    "--index", str(index_path),
                    "--query", query,
                    "--alpha", "0.75",
                    "--k", "10",
                ],
                capture_output=True,
                text=True,
                check=True,
            )
            oracle = json.loads(script.stdout)
            assert [s.chunk_id for s in ours] == [r["id"] for r in oracle]
            for s, r in zip(ours, oracle):
                assert abs(s.hybrid - r["hybrid"]) <= 1e-9
                assert abs(s.bm25_raw - r["bm25_raw"]) <= 1e-9
                assert abs(s.dense_sim - r["dense"]) <= 1e-9
        assert time.monotonic() - started < 5.0


def test_bm25_hand_computed(tmp_path):
    with criterion("BM25 matches hand-computed Okapi scores to 1e-9"):
        embedder = MockEmbeddings()
        index = build_index([make_chunk(f"d{i}", t) for i, t in enumerate(BM25_DOCS)], embedder)
        for query, expected in BM25_EXPECTED.items():
            got = bm25_scores(index, query)
            for g, e in zip(got, expected):
                assert abs(g - e) <= 1e-9


def test_two_stage_sizes():
    with criterion("two-stage sizes: 10->4 for documents/context, 25->5 for questions"):
        embedder, reranker = MockEmbeddings(), MockReranker()
        chunks = [
            make_chunk(f"c{i:02d}", f"chunk about topic{i % 6} with body {i}") for i in range(34)
        ]
        doc_index = build_index(chunks, embedder)
        stage1 = {s.chunk_id for s in hybrid_search(doc_index, "topic2 body", 10)}
        final = retrieve(doc_index, "topic2 body", 10, 4, reranker)
        assert len(final) == 4
        assert {c.id for c in final} <= stage1

        questions = [
            make_question(f"q{i:02d}", f"Does the user documentation contain item {i % 9} of kind {i}?")
            for i in range(31)
        ]
        q_index = build_index(questions, embedder)
        q_stage1 = {s.chunk_id for s in hybrid_search(q_index, "item 4", 25)}
        q_final = retrieve(q_index, "item 4", 25, 5, reranker)
        assert len(q_final) == 5
        assert {q.id for q in q_final} <= q_stage1


def test_split_reproduction(tmp_path):
    with criterion("split reproduction: 577 -> 465/56/56 questions, 13 -> 11/1/1 projects"):
        questions = corpusmod.load_questions(write_question_file(tmp_path / "q.json", 565, 12))
        assert len(questions) == 577
        projects = [f"project-{i:02d}" for i in range(13)]
        assignment = corpusmod.split_corpus(questions, projects, (0.8, 0.1, 0.1), seed=42)
        counts = corpusmod.split_counts(assignment)
        assert counts["questions"] == {"train": 465, "test": 56, "val": 56}
        assert counts["projects"] == {"train": 11, "test": 1, "val": 1}


def test_dataset_structural_suite(tmp_path):
    with criterion("dataset structural suite: budgets, hygiene, verbatim quotes, determinism, <60s"):
        started = time.monotonic()
        out_a = run_pipeline(tmp_path / "run-a", seed=42)
        out_b = run_pipeline(tmp_path / "run-b", seed=42)

        def digest(path: Path) -> str:
            return hashlib.sha256(path.read_bytes()).hexdigest()

        assert digest(out_a / "dataset.jsonl") == digest(out_b / "dataset.jsonl")
        assert digest(out_a / "dataset.meta.json") == digest(out_b / "dataset.meta.json")

        from dualrag.prompts import (
            extract_context_section,
            extract_user_docs_section,
            split_ctx_blocks,
            split_doc_blocks,
        )

        splits = corpusmod.read_splits(out_a / "splits.json")
        doc_chunks = {c.id: c for c in corpusmod.read_chunks(out_a / "chunks_docs.jsonl")}
        sidecar = json.loads((out_a / "dataset.meta.json").read_text())
        lines = (out_a / "dataset.jsonl").read_text().splitlines()
        assert lines, "export must be non-empty"
        assert len(sidecar["records"]) == len(lines)

        for rec, line in zip(sidecar["records"], lines):
            payload = json.loads(line)
            user = payload["messages"][1]["content"]
            assert len(split_doc_blocks(extract_user_docs_section(user))) == 4
            assert len(split_ctx_blocks(extract_context_section(user))) == 4
            assert 1 <= rec["m"] <= 4 and 1 <= rec["n"] <= 4
            assert len(rec["golden_docs"]) == rec["m"]
            assert len(rec["golden_ctx"]) == rec["n"]
            assert len(rec["golden_docs"]) + len(rec["distractor_docs"]) == 4
            assert len(rec["golden_ctx"]) + len(rec["distractor_ctx"]) == 4
            assert not set(rec["golden_docs"]) & set(rec["distractor_docs"])
            assert not set(rec["golden_ctx"]) & set(rec["distractor_ctx"])
            assert rec["all_verbatim"] is True
            for cid in rec["golden_docs"] + rec["distractor_docs"]:
                project = doc_chunks[cid].project_id
                assert splits.project_splits[project] is corpusmod.Split.TRAIN

        # verify-dataset agrees with the inline checks.
        assert cli_main(["--out-dir", str(out_a), "verify-dataset"]) == 0
        assert time.monotonic() - started < 60.0


def test_m_distribution():
    with criterion("m-distribution: each m in {1..4} within [0.15, 0.35] over >=200 groups"):
        pairs = [Pair(f"d{i:04d}", f"q{i % 3}", ()) for i in range(650)]
        groups = group_pairs(pairs, random.Random(42))
        assert len(groups) >= 200
        from collections import Counter

        counts = Counter(len(g) for _, g in groups)
        total = sum(counts.values())
        for m in (1, 2, 3, 4):
            frequency = counts[m] / total
            assert 0.15 <= frequency <= 0.35, f"m={m} frequency {frequency:.3f}"


def test_reference_extraction_table():
    with criterion("reference extraction: 100% recall and precision on the 25-case table"):
        assert len(EXTRACTION_CASES) == 25
        assert any("(see 6.2.4.13)" in text for text, _ in EXTRACTION_CASES)
        assert any("Annex" in text or "annex" in text for text, _ in EXTRACTION_CASES)
        for text, expected in EXTRACTION_CASES:
            got = [(r.kind, r.path) for r in extract_references(text)]
            assert got == expected, f"case {text!r}"

        # The question-stats fraction is computable on a synthetic corpus.
        questions = [
            make_question("q1", "Does the user documentation contain a report (see 6.2.4.13)?"),
            make_question("q2", "Does the user documentation contain a log?"),
        ]
        stats = reference_coverage(questions)
        assert stats["fraction"] == 0.5


def _tamper_dataset_line(out: Path, line_no: int, mutate):
    dataset = out / "dataset.jsonl"
    lines = dataset.read_text().splitlines()
    payload = json.loads(lines[line_no])
    mutate(payload)
    lines[line_no] = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    dataset.write_text("".join(line + "\n" for line in lines))


def _tamper_sidecar(out: Path, line_no: int, mutate):
    meta = out / "dataset.meta.json"
    sidecar = json.loads(meta.read_text())
    mutate(sidecar["records"][line_no])
    meta.write_text(json.dumps(sidecar, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def test_verify_detects_seeded_corruptions(tmp_path):
    with criterion("verify-dataset detects all 6 seeded corruptions with non-zero exit"):
        pristine = run_pipeline(tmp_path / "base", seed=42)
        splits = corpusmod.read_splits(pristine / "splits.json")
        doc_chunks = corpusmod.read_chunks(pristine / "chunks_docs.jsonl")
        val_chunk = next(
            c for c in doc_chunks
            if splits.project_splits[c.project_id] is corpusmod.Split.VAL
        )

        def corrupt_overlap(out: Path):
            def mutate(rec):
                rec["distractor_docs"][0] = rec["golden_docs"][0]

            _tamper_sidecar(out, 0, mutate)

        def corrupt_five_blocks(out: Path):
            def mutate(payload):
                user = payload["messages"][1]["content"]
                marker = "\n================================================================="
                extra = "\n\n[Document 5]\nA spurious fifth block of documentation."
                payload["messages"][1]["content"] = user.replace(marker, extra + marker, 1)

            _tamper_dataset_line(out, 0, mutate)

        def corrupt_leak_val_chunk(out: Path):
            def mutate(rec):
                victim = rec["distractor_docs"][0]
                rec["distractor_docs"][0] = val_chunk.id
                rec["doc_order"][rec["doc_order"].index(victim)] = val_chunk.id

            _tamper_sidecar(out, 0, mutate)

        def corrupt_quote(out: Path):
            def mutate(payload):
                answer = payload["messages"][2]["content"]
                begin = answer.index("##begin_quote##") + len("##begin_quote##")
                end = answer.index("##end_quote##")
                payload["messages"][2]["content"] = (
                    answer[:begin] + "a fabricated quotation matching no golden text" + answer[end:]
                )

            _tamper_dataset_line(out, 0, mutate)

        def corrupt_m_zero(out: Path):
            def mutate(rec):
                rec["distractor_docs"] = rec["golden_docs"] + rec["distractor_docs"]
                rec["golden_docs"] = []
                rec["m"] = 0

            _tamper_sidecar(out, 0, mutate)

        def corrupt_duplicate_line(out: Path):
            dataset = out / "dataset.jsonl"
            lines = dataset.read_text().splitlines()
            lines.append(lines[0])
            dataset.write_text("".join(line + "\n" for line in lines))

        corruptions = {
            "golden/distractor overlap": (corrupt_overlap, "overlap"),
            "5-block record": (corrupt_five_blocks, "document blocks"),
            "leaked val chunk": (corrupt_leak_val_chunk, "not in a train project"),
            "non-verbatim quote": (corrupt_quote, "non-verbatim"),
            "m=0": (corrupt_m_zero, "m=0 invalid"),
            "duplicated line": (corrupt_duplicate_line, "duplicated line"),
        }
        for name, (corrupt, needle) in corruptions.items():
            out = tmp_path / name.replace("/", "_").replace(" ", "_").replace("=", "")
            shutil.copytree(pristine, out)
            corrupt(out)
            code = cli_main(["--out-dir", str(out), "verify-dataset"])
            assert code == 1, f"{name}: verify-dataset must exit non-zero"
            from dualrag.verify import verify_dataset

            questions = corpusmod.read_questions(out / "questions.jsonl")
            violations = verify_dataset(
                out / "dataset.jsonl",
                out / "dataset.meta.json",
                corpusmod.read_chunks(out / "chunks_docs.jsonl"),
                corpusmod.read_chunks(out / "chunks_ctx.jsonl"),
                corpusmod.read_splits(out / "splits.json"),
                {q.id: q for q in questions},
            )
            assert any(needle in v for v in violations), f"{name}: expected violation naming {needle!r}, got {violations}"


def test_eval_arithmetic(tmp_path):
    with criterion("eval arithmetic: 6.50/6.98 -> relative ~7.4%, absolute 4.8 scale-%, key-gated"):
        n = 50
        baseline = {f"q{i:03d}": f"baseline answer {i}" for i in range(n)}
        candidate = {f"q{i:03d}": f"candidate answer {i}" for i in range(n)}
        items, key = build_blind_set(baseline, candidate, seed=42, baseline_name="base-model", candidate_name="ft-model")

        items_path, key_path = tmp_path / "items.json", tmp_path / "key.json"
        write_blind_files(items, key, items_path, key_path)
        blind_raw = items_path.read_text()
        assert "base-model" not in blind_raw and "ft-model" not in blind_raw

        base_scores = [6] * 25 + [7] * 25  # mean 6.50
        cand_scores = [7] * 49 + [6]       # mean 6.98
        ratings = []
        for i, (iid, assignment) in enumerate(sorted(key["assignments"].items())):
            base_label = "a" if assignment["a"] == "base-model" else "b"
            cand_label = "b" if base_label == "a" else "a"
            ratings.append(Rating(iid, base_label, base_scores[i], "assessor"))
            ratings.append(Rating(iid, cand_label, cand_scores[i], "assessor"))

        report = summarize(ratings, key)
        assert report["means"]["base-model"] == pytest.approx(6.50, abs=1e-9)
        assert report["means"]["ft-model"] == pytest.approx(6.98, abs=1e-9)
        assert report["relative_improvement"] == pytest.approx(0.48 / 6.50, abs=1e-9)
        assert report["relative_improvement_display"] == "7%"
        assert report["absolute_improvement_points"] == pytest.approx(0.48, abs=1e-9)
        assert report["absolute_improvement_scale_pct"] == pytest.approx(4.8, abs=1e-9)

        # Unblinding requires the key: flipping it flips the attribution.
        flipped = {
            **key,
            "assignments": {i: {"a": v["b"], "b": v["a"]} for i, v in key["assignments"].items()},
        }
        crossed = summarize(ratings, flipped)
        assert crossed["means"]["base-model"] == pytest.approx(6.98, abs=1e-9)
