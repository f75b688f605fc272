"""Persistent store for human review decisions.

Decisions append to a JSONL journal and are durable (flushed and fsynced)
before the caller is acknowledged. The latest decision per instance wins;
the full history is retained for audit.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .datasetgen import ReviewStatus


class ReviewValidationError(Exception):
    pass


@dataclass(frozen=True)
class ReviewDecision:
    instance_id: str
    status: ReviewStatus
    reviewer: str
    edited_answer: str | None = None
    timestamp: str = ""
    validation: dict | None = None

    def __post_init__(self) -> None:
        if self.status in (ReviewStatus.MINOR_EDIT, ReviewStatus.MAJOR_EDIT):
            if not (self.edited_answer and self.edited_answer.strip()):
                raise ReviewValidationError(
                    f"{self.status.value} decision requires a non-empty edited_answer"
                )
        if not self.timestamp:
            object.__setattr__(
                self, "timestamp", datetime.now(timezone.utc).isoformat(timespec="seconds")
            )

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "status": self.status.value,
            "reviewer": self.reviewer,
            "edited_answer": self.edited_answer,
            "timestamp": self.timestamp,
            "validation": self.validation,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "ReviewDecision":
        return cls(
            instance_id=rec["instance_id"],
            status=ReviewStatus(rec["status"]),
            reviewer=rec["reviewer"],
            edited_answer=rec.get("edited_answer"),
            timestamp=rec.get("timestamp", ""),
            validation=rec.get("validation"),
        )


class ReviewStore:
    """Append-only decision journal with latest-wins semantics."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._history: dict[str, list[ReviewDecision]] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        decision = ReviewDecision.from_json(json.loads(line))
                        self._history.setdefault(decision.instance_id, []).append(decision)

    def record(self, decision: ReviewDecision) -> None:
        """Persist a decision durably, then update the in-memory view."""
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(decision.to_json(), sort_keys=True, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._history.setdefault(decision.instance_id, []).append(decision)

    def latest(self, instance_id: str) -> ReviewDecision | None:
        history = self._history.get(instance_id)
        return history[-1] if history else None

    def history(self, instance_id: str) -> list[ReviewDecision]:
        return list(self._history.get(instance_id, []))

    def latest_by_instance(self) -> dict[str, ReviewDecision]:
        return {iid: hist[-1] for iid, hist in self._history.items() if hist}

    def stats(self, sampled_ids: Sequence[str]) -> dict:
        """Review-progress fractions over the sampled instance set.

        Fractions are over the sample size: "modified" counts minor plus
        major edits, matching how a verification sample is reported.
        """
        sampled = list(sampled_ids)
        counts = {status.value: 0 for status in ReviewStatus}
        reviewed = 0
        for iid in sampled:
            decision = self.latest(iid)
            if decision is None:
                counts[ReviewStatus.UNREVIEWED.value] += 1
                continue
            reviewed += 1
            counts[decision.status.value] += 1
        total = len(sampled)
        modified = counts[ReviewStatus.MINOR_EDIT.value] + counts[ReviewStatus.MAJOR_EDIT.value]
        return {
            "sampled": total,
            "reviewed": reviewed,
            "counts": counts,
            "modified_fraction": (modified / total) if total else 0.0,
            "major_fraction": (counts[ReviewStatus.MAJOR_EDIT.value] / total) if total else 0.0,
        }
