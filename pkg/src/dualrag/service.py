"""Local HTTP service: the query pipeline plus the human-in-the-loop review
workflow consumed by the browser UI.

All state of record lives server-side: decisions are durable in the review
journal before the client is acknowledged, and review statistics are
recomputed from the store on every request. The built review UI bundle, if
present, is served statically under /ui.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import Question
from .datasetgen import ReviewStatus, TrainingInstance, validate_answer
from .querypipe import QueryError, answer_query
from .retrieval import Index
from .review import ReviewDecision, ReviewStore, ReviewValidationError

log = logging.getLogger(__name__)


@dataclass
class ServiceState:
    doc_index: Index | None
    ctx_index: Index | None
    llm: Any
    reranker: Any
    instances: dict[str, TrainingInstance]
    review_sample: list[str]
    review_store: ReviewStore
    questions_by_id: dict[str, Question]
    texts: dict[str, str] = field(default_factory=dict)
    ui_dir: Path | None = None


class QueryRequest(BaseModel):
    question: str


class DecisionRequest(BaseModel):
    status: str
    reviewer: str = "anonymous"
    edited_answer: str | None = None


def _item_view(state: ServiceState, instance: TrainingInstance) -> dict:
    decision = state.review_store.latest(instance.instance_id)
    answer = instance.answer
    status = instance.review_status.value
    validation = instance.validation.to_json() if instance.validation else None
    if decision is not None:
        status = decision.status.value
        if decision.edited_answer:
            answer = decision.edited_answer
        if decision.validation is not None:
            validation = decision.validation
    question = state.questions_by_id[instance.question_id]
    golden_docs = set(instance.golden_docs)
    golden_ctx = set(instance.golden_ctx)
    return {
        "instance_id": instance.instance_id,
        "question_id": instance.question_id,
        "question": question.text,
        "doc_blocks": [
            {"chunk_id": cid, "text": state.texts[cid], "golden": cid in golden_docs}
            for cid in instance.doc_order
        ],
        "ctx_blocks": [
            {"chunk_id": cid, "text": state.texts[cid], "golden": cid in golden_ctx}
            for cid in instance.ctx_order
        ],
        "answer": answer,
        "original_answer": instance.answer,
        "validation": validation,
        "review_status": status,
        "history_length": len(state.review_store.history(instance.instance_id)),
        "m": instance.m,
        "n": instance.n,
    }


def build_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="dualrag service")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/query")
    def query(request: QueryRequest) -> dict:
        if state.doc_index is None or state.ctx_index is None:
            raise HTTPException(status_code=503, detail="indices not loaded")
        try:
            answer = answer_query(
                request.question, state.doc_index, state.ctx_index, state.llm, state.reranker
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except QueryError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return answer.to_json()

    @app.get("/review/queue")
    def review_queue(status: str | None = None) -> list[dict]:
        out = []
        for iid in state.review_sample:
            instance = state.instances.get(iid)
            if instance is None:
                continue
            decision = state.review_store.latest(iid)
            current = decision.status.value if decision else instance.review_status.value
            if status and current != status:
                continue
            out.append(
                {
                    "instance_id": iid,
                    "question_id": instance.question_id,
                    "review_status": current,
                }
            )
        return out

    @app.get("/review/item/{instance_id}")
    def review_item(instance_id: str) -> dict:
        instance = state.instances.get(instance_id)
        if instance is None:
            raise HTTPException(status_code=404, detail=f"unknown instance {instance_id}")
        return _item_view(state, instance)

    @app.post("/review/item/{instance_id}/decision")
    def record_decision(instance_id: str, request: DecisionRequest) -> dict:
        instance = state.instances.get(instance_id)
        if instance is None:
            raise HTTPException(status_code=404, detail=f"unknown instance {instance_id}")
        if instance_id not in state.review_sample:
            raise HTTPException(
                status_code=400, detail=f"instance {instance_id} is not in the review sample"
            )
        try:
            status = ReviewStatus(request.status)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"unknown status {request.status!r}") from exc
        if status is ReviewStatus.UNREVIEWED:
            raise HTTPException(status_code=422, detail="cannot record an 'unreviewed' decision")

        validation = None
        if request.edited_answer:
            golden_texts = [state.texts[cid] for cid in instance.golden_docs]
            validation = validate_answer(request.edited_answer, golden_texts).to_json()
        try:
            decision = ReviewDecision(
                instance_id=instance_id,
                status=status,
                reviewer=request.reviewer,
                edited_answer=request.edited_answer,
                validation=validation,
            )
        except ReviewValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        state.review_store.record(decision)
        instance.review_status = status
        return _item_view(state, instance)

    @app.get("/review/stats")
    def review_stats() -> dict:
        return state.review_store.stats(state.review_sample)

    @app.get("/dataset/summary")
    def dataset_summary() -> dict:
        total = len(state.instances)
        failed = sum(1 for i in state.instances.values() if i.generation_failed)
        validated = sum(
            1 for i in state.instances.values() if i.validation is not None and i.validation.ok
        )
        latest = state.review_store.latest_by_instance()
        by_status: dict[str, int] = {}
        for iid in state.instances:
            decision = latest.get(iid)
            status = decision.status.value if decision else ReviewStatus.UNREVIEWED.value
            by_status[status] = by_status.get(status, 0) + 1
        return {
            "instances": total,
            "generation_failed": failed,
            "validated": validated,
            "flagged": total - failed - validated,
            "review_sample_size": len(state.review_sample),
            "by_review_status": by_status,
        }

    if state.ui_dir and Path(state.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(state.ui_dir), html=True), name="ui")

    return app


def serve(state: ServiceState, host: str = "127.0.0.1", port: int = 8787) -> None:
    """Run the service until shutdown. A busy port raises at startup."""
    import uvicorn

    uvicorn.run(build_app(state), host=host, port=port, log_level="info")
