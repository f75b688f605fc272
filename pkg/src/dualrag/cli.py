"""Command-line entrypoint orchestrating the pipeline stages.

Each subcommand maps to one batch operation and one set of on-disk
artifacts under the output directory, so every stage is auditable and
re-runnable. Machine-readable summaries go to stdout; progress and
diagnostics to stderr. Exit codes: 0 ok, 1 failure, 2 usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from . import corpus, datasetgen, evalharness, pairing, querypipe, refextract, retrieval, verify
from .config import RunConfig, build_providers
from .review import ReviewStore

log = logging.getLogger("dualrag")


class StageError(Exception):
    pass


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageError(f"missing artifact {path} (run `{producer}` first)")
    return path


def _guard_overwrite(paths: list[Path], force: bool) -> None:
    existing = [p for p in paths if p.exists()]
    if existing and not force:
        raise StageError(
            f"output exists: {', '.join(map(str, existing))} (use --force to overwrite)"
        )


def _emit(summary: dict) -> None:
    print(json.dumps(summary, indent=2, sort_keys=True))


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.out_dir:
        cfg.out_dir = Path(args.out_dir)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.providers:
        cfg.providers.mode = args.providers
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    return cfg


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if args.docs:
        cfg.projects_dir = Path(args.docs)
    if args.context:
        cfg.context_paths = [Path(p) for p in args.context]
    if args.questions:
        cfg.questions_path = Path(args.questions)
    if args.window:
        cfg.chunking.window_tokens = args.window
    if args.overlap is not None:
        cfg.chunking.overlap_tokens = args.overlap
    if not (cfg.projects_dir and cfg.context_paths and cfg.questions_path):
        raise StageError("ingest needs --docs, --context and --questions (or a config file)")
    outputs = [cfg.artifact(n) for n in ("chunks_docs", "chunks_ctx", "questions", "splits")]
    _guard_overwrite(outputs, args.force)

    window, overlap = cfg.chunking.window_tokens, cfg.chunking.overlap_tokens
    doc_chunks: list[corpus.Chunk] = []
    project_ids: list[str] = []
    for project_dir in sorted(p for p in Path(cfg.projects_dir).iterdir() if p.is_dir()):
        files = sorted(p for p in project_dir.iterdir() if p.is_file())
        project_ids.append(project_dir.name)
        doc_chunks.extend(
            corpus.ingest_documents(
                files, project_dir.name, corpus.CorpusKind.DOCUMENT, window, overlap,
                base_dir=cfg.projects_dir,
            )
        )
    ctx_chunks = corpus.ingest_documents(
        cfg.context_paths, kind=corpus.CorpusKind.CONTEXT, window=window, overlap=overlap,
        base_dir=Path(cfg.context_paths[0]).parent,
    )
    questions = corpus.load_questions(cfg.questions_path, cfg.question_prefix)
    assignment = corpus.split_corpus(questions, project_ids, cfg.split_ratios, cfg.seed)
    questions = corpus.apply_question_splits(questions, assignment)

    corpus.write_chunks(doc_chunks, cfg.artifact("chunks_docs"))
    corpus.write_chunks(ctx_chunks, cfg.artifact("chunks_ctx"))
    corpus.write_questions(questions, cfg.artifact("questions"))
    corpus.write_splits(assignment, cfg.artifact("splits"))
    _emit(
        {
            "doc_chunks": len(doc_chunks),
            "ctx_chunks": len(ctx_chunks),
            "questions": len(questions),
            "projects": len(project_ids),
            "splits": corpus.split_counts(assignment),
        }
    )
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    embedder, _, _ = build_providers(cfg.providers)
    doc_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_docs"), "ingest"))
    ctx_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_ctx"), "ingest"))
    questions = corpus.read_questions(_require(cfg.artifact("questions"), "ingest"))
    outputs = [cfg.artifact(n) for n in ("index_docs", "index_ctx", "index_questions")]
    _guard_overwrite(outputs, args.force)

    train_questions = [q for q in questions if q.split is corpus.Split.TRAIN]
    k1, b = cfg.retrieval.k1, cfg.retrieval.b
    for name, items in (
        ("index_docs", doc_chunks),
        ("index_ctx", ctx_chunks),
        ("index_questions", train_questions),
    ):
        index = retrieval.build_index(items, embedder, k1=k1, b=b)
        retrieval.save_index(index, cfg.artifact(name))
        log.info("built %s over %d items", name, len(items))
    _emit(
        {
            "index_docs": len(doc_chunks),
            "index_ctx": len(ctx_chunks),
            "index_questions": len(train_questions),
        }
    )
    return 0


def cmd_pair(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    embedder, llm, reranker = build_providers(cfg.providers)
    doc_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_docs"), "ingest"))
    ctx_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_ctx"), "ingest"))
    splits = corpus.read_splits(_require(cfg.artifact("splits"), "ingest"))
    question_index = retrieval.load_index(_require(cfg.artifact("index_questions"), "index"), embedder)

    journal = cfg.artifact("pairs")
    if journal.exists() and not (args.resume or args.force):
        raise StageError(f"{journal} exists (use --resume to continue or --force to restart)")

    train_chunks = [
        c for c in doc_chunks if splits.project_splits.get(c.project_id) is corpus.Split.TRAIN
    ]
    refmap = refextract.build_reference_map(ctx_chunks)
    pairs = pairing.build_pairs(
        train_chunks,
        question_index,
        refmap,
        llm,
        reranker,
        journal,
        resume=args.resume,
        max_workers=args.max_workers,
    )
    matched = pairing.matched_pairs(pairs)
    _emit({"train_chunks": len(train_chunks), "pairs": len(pairs), "matched": len(matched)})
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if args.review_fraction is not None:
        cfg.review_fraction = args.review_fraction
    embedder, llm, reranker = build_providers(cfg.providers)
    doc_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_docs"), "ingest"))
    ctx_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_ctx"), "ingest"))
    splits = corpus.read_splits(_require(cfg.artifact("splits"), "ingest"))
    questions = corpus.read_questions(_require(cfg.artifact("questions"), "ingest"))
    ctx_index = retrieval.load_index(_require(cfg.artifact("index_ctx"), "index"), embedder)
    pairs = pairing.load_journal(_require(cfg.artifact("pairs"), "pair"))
    _guard_overwrite([cfg.artifact("instances"), cfg.artifact("review_sample")], args.force)

    train_chunks = [
        c for c in doc_chunks if splits.project_splits.get(c.project_id) is corpus.Split.TRAIN
    ]
    questions_by_id = {q.id: q for q in questions}
    instances = datasetgen.generate_training_instances(
        pairing.matched_pairs(pairs),
        questions_by_id,
        train_chunks,
        ctx_chunks,
        ctx_index,
        llm,
        reranker,
        seed=cfg.seed,
    )
    datasetgen.write_instances(instances, cfg.artifact("instances"))
    sample = datasetgen.sample_for_review(
        instances, cfg.review_fraction, random.Random(f"{cfg.seed}:review")
    )
    cfg.artifact("review_sample").write_text(json.dumps(sample, indent=2) + "\n")
    ok = sum(1 for i in instances if i.validation is not None and i.validation.ok)
    _emit(
        {
            "instances": len(instances),
            "validated": ok,
            "failed": sum(1 for i in instances if i.generation_failed),
            "review_sample": len(sample),
            "seed": cfg.seed,
        }
    )
    return 0


def _load_review_store(cfg: RunConfig) -> ReviewStore:
    return ReviewStore(cfg.artifact("reviews"))


def cmd_export(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    questions = corpus.read_questions(_require(cfg.artifact("questions"), "ingest"))
    doc_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_docs"), "ingest"))
    ctx_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_ctx"), "ingest"))
    instances = datasetgen.read_instances(_require(cfg.artifact("instances"), "generate"))
    _guard_overwrite([cfg.artifact("dataset"), cfg.artifact("dataset_meta")], args.force)

    texts = {c.id: c.text for c in doc_chunks}
    texts.update({c.id: c.text for c in ctx_chunks})
    reviews = _load_review_store(cfg).latest_by_instance()
    summary = datasetgen.export_dataset(
        instances,
        {q.id: q for q in questions},
        texts,
        cfg.artifact("dataset"),
        cfg.artifact("dataset_meta"),
        seed=cfg.seed,
        reviews=reviews,
        include_flagged=args.include_flagged,
    )
    _emit(summary)
    return 0


def cmd_verify_dataset(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    doc_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_docs"), "ingest"))
    ctx_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_ctx"), "ingest"))
    splits = corpus.read_splits(_require(cfg.artifact("splits"), "ingest"))
    questions = corpus.read_questions(_require(cfg.artifact("questions"), "ingest"))
    violations = verify.verify_dataset(
        _require(cfg.artifact("dataset"), "export"),
        _require(cfg.artifact("dataset_meta"), "export"),
        doc_chunks,
        ctx_chunks,
        splits,
        {q.id: q for q in questions},
    )
    _emit({"violations": violations, "ok": not violations})
    return 1 if violations else 0


def cmd_query(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    embedder, llm, reranker = build_providers(cfg.providers)
    doc_index = retrieval.load_index(_require(cfg.artifact("index_docs"), "index"), embedder)
    ctx_index = retrieval.load_index(_require(cfg.artifact("index_ctx"), "index"), embedder)
    answer = querypipe.answer_query(
        args.question,
        doc_index,
        ctx_index,
        llm,
        reranker,
        stage1_k=cfg.retrieval.stage1_k,
        final_k=cfg.retrieval.final_k,
    )
    _emit(answer.to_json())
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceState, serve

    cfg = _load_config(args)
    embedder, llm, reranker = build_providers(cfg.providers)
    doc_index = retrieval.load_index(_require(cfg.artifact("index_docs"), "index"), embedder)
    ctx_index = retrieval.load_index(_require(cfg.artifact("index_ctx"), "index"), embedder)
    doc_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_docs"), "ingest"))
    ctx_chunks = corpus.read_chunks(_require(cfg.artifact("chunks_ctx"), "ingest"))
    questions = corpus.read_questions(_require(cfg.artifact("questions"), "ingest"))
    instances = datasetgen.read_instances(_require(cfg.artifact("instances"), "generate"))
    sample = json.loads(_require(cfg.artifact("review_sample"), "generate").read_text())

    texts = {c.id: c.text for c in doc_chunks}
    texts.update({c.id: c.text for c in ctx_chunks})
    state = ServiceState(
        doc_index=doc_index,
        ctx_index=ctx_index,
        llm=llm,
        reranker=reranker,
        instances={i.instance_id: i for i in instances},
        review_sample=sample,
        review_store=_load_review_store(cfg),
        questions_by_id={q.id: q for q in questions},
        texts=texts,
        ui_dir=cfg.ui_dir,
    )
    serve(state, host=args.host, port=args.port)
    return 0


def cmd_eval_blind(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    _guard_overwrite([cfg.artifact("blind_items"), cfg.artifact("blind_key")], args.force)
    baseline = json.loads(Path(args.baseline).read_text())
    candidate = json.loads(Path(args.candidate).read_text())
    items, key = evalharness.build_blind_set(
        baseline,
        candidate,
        seed=cfg.seed,
        baseline_name=args.baseline_name,
        candidate_name=args.candidate_name,
    )
    evalharness.write_blind_files(items, key, cfg.artifact("blind_items"), cfg.artifact("blind_key"))
    _emit({"items": len(items), "items_file": str(cfg.artifact("blind_items")), "key_file": str(cfg.artifact("blind_key"))})
    return 0


def cmd_eval_report(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    key_path = Path(args.key) if args.key else cfg.artifact("blind_key")
    key = json.loads(_require(key_path, "eval-blind").read_text())
    ratings = evalharness.load_ratings(args.ratings)
    report = evalharness.summarize(ratings, key)
    _emit(report)
    if report.get("relative_improvement") is not None:
        log.info(
            "%s -> %s: relative %s, absolute %.2f points (%.1f%% of scale)",
            report["baseline"],
            report["candidate"],
            report["relative_improvement_display"],
            report["absolute_improvement_points"],
            report["absolute_improvement_scale_pct"],
        )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if args.target == "questions":
        questions = corpus.read_questions(_require(cfg.artifact("questions"), "ingest"))
        _emit(refextract.reference_coverage(questions))
        return 0
    raise StageError(f"unknown stats target {args.target!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualrag",
        description="Dual-retrieval compliance pipeline and fine-tuning dataset generator",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out-dir", help="artifact directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--providers", choices=["mock", "http"], default=None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="chunk corpora, load questions, assign splits")
    p.add_argument("--docs", help="directory with one subdirectory per project")
    p.add_argument("--context", nargs="+", help="standards/context files")
    p.add_argument("--questions", help="question corpus JSON array")
    p.add_argument("--window", type=int, default=None, help="chunk window in whitespace tokens")
    p.add_argument("--overlap", type=int, default=None, help="chunk overlap in whitespace tokens")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build the three retrieval indices")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("pair", help="pair train chunks with questions")
    p.add_argument("--resume", action="store_true", help="continue an interrupted run")
    p.add_argument("--force", action="store_true", help="restart, discarding the journal")
    p.add_argument("--max-workers", type=int, default=1)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("generate", help="build training instances with answers")
    p.add_argument("--review-fraction", type=float, default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("export", help="write the fine-tuning JSONL and sidecar")
    p.add_argument("--include-flagged", action="store_true")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("verify-dataset", help="integrity-check an export")
    p.set_defaults(func=cmd_verify_dataset)

    p = sub.add_parser("query", help="run one compliance query")
    p.add_argument("--question", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval-blind", help="build a blinded A/B evaluation set")
    p.add_argument("--baseline", required=True, help="JSON {question_id: answer}")
    p.add_argument("--candidate", required=True, help="JSON {question_id: answer}")
    p.add_argument("--baseline-name", default="baseline")
    p.add_argument("--candidate-name", default="candidate")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_eval_blind)

    p = sub.add_parser("eval-report", help="summarize ratings against the blind key")
    p.add_argument("--ratings", required=True, help="CSV item_id,label,score,rater")
    p.add_argument("--key", help="key file (default: out dir artifact)")
    p.set_defaults(func=cmd_eval_report)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("target", choices=["questions"])
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (
        StageError,
        corpus.IngestError,
        corpus.QuestionLoadError,
        corpus.SplitError,
        retrieval.IndexBuildError,
        retrieval.IndexFormatError,
        datasetgen.GenerationError,
        evalharness.EvalError,
        querypipe.QueryError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
