"""Blind A/B evaluation of two models' answers with 0-10 correctness ratings.

Answers from a baseline and a candidate model are paired per question and
presented in randomized A/B positions; the position-to-model mapping lives
only in a separate key file, so the ratings workflow never sees model
identities. Ratings come back as CSV and are summarized into per-model
means with both relative and absolute improvement figures (the two are
easily conflated when quoting a single percentage, so the report always
carries both, labelled).
"""
from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class BlindItem:
    item_id: str
    question_id: str
    answer_a: str
    answer_b: str


@dataclass(frozen=True)
class Rating:
    item_id: str
    label: str  # "a" or "b"
    score: int
    rater: str

    def __post_init__(self) -> None:
        if self.label not in ("a", "b"):
            raise EvalError(f"label must be 'a' or 'b', got {self.label!r}")
        if not 0 <= self.score <= 10:
            raise EvalError(f"score must be in 0..10, got {self.score}")


def build_blind_set(
    baseline: Mapping[str, str],
    candidate: Mapping[str, str],
    seed: int,
    baseline_name: str = "baseline",
    candidate_name: str = "candidate",
) -> tuple[list[BlindItem], dict]:
    """Pair the two response sets and randomize A/B positions per item.

    Both sets must cover identical question ids. Returns the blind items
    (no model identifiers) and the key needed to unblind them.
    """
    missing_in_candidate = sorted(set(baseline) - set(candidate))
    missing_in_baseline = sorted(set(candidate) - set(baseline))
    if missing_in_candidate or missing_in_baseline:
        raise EvalError(
            "response sets do not cover identical question ids: "
            f"missing in candidate: {missing_in_candidate}; "
            f"missing in baseline: {missing_in_baseline}"
        )

    rng = random.Random(f"{seed}:blind")
    items: list[BlindItem] = []
    assignments: dict[str, dict[str, str]] = {}
    for qid in sorted(baseline):
        baseline_first = rng.random() < 0.5
        if baseline_first:
            answer_a, answer_b = baseline[qid], candidate[qid]
            assignments[qid] = {"a": baseline_name, "b": candidate_name}
        else:
            answer_a, answer_b = candidate[qid], baseline[qid]
            assignments[qid] = {"a": candidate_name, "b": baseline_name}
        items.append(BlindItem(item_id=qid, question_id=qid, answer_a=answer_a, answer_b=answer_b))

    key = {
        "seed": seed,
        "baseline_name": baseline_name,
        "candidate_name": candidate_name,
        "assignments": assignments,
    }
    return items, key


def write_blind_files(
    items: Sequence[BlindItem], key: dict, items_path: str | Path, key_path: str | Path
) -> None:
    payload = [
        {"item_id": i.item_id, "question_id": i.question_id, "answer_a": i.answer_a, "answer_b": i.answer_b}
        for i in items
    ]
    Path(items_path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    Path(key_path).write_text(json.dumps(key, indent=2, sort_keys=True) + "\n")


def load_ratings(path: str | Path) -> list[Rating]:
    """Read ratings CSV with columns item_id, label, score, rater."""
    ratings = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"item_id", "label", "score", "rater"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise EvalError(f"ratings CSV must have columns {sorted(required)}")
        for row in reader:
            ratings.append(
                Rating(
                    item_id=row["item_id"],
                    label=row["label"].strip().lower(),
                    score=int(row["score"]),
                    rater=row["rater"],
                )
            )
    return ratings


def summarize(ratings: Sequence[Rating], key: dict) -> dict:
    """Unblind ratings and compute per-model means and improvements.

    The relative improvement is (candidate - baseline) / baseline; the
    absolute improvement is also reported in rating points and as a
    percentage of the 10-point scale. Incomplete ratings (an item missing
    either position) mark the report partial.
    """
    assignments = key["assignments"]
    baseline_name = key["baseline_name"]
    candidate_name = key["candidate_name"]

    scores: dict[str, list[int]] = {baseline_name: [], candidate_name: []}
    rated_positions: dict[str, set[str]] = {}
    for rating in ratings:
        assignment = assignments.get(rating.item_id)
        if assignment is None:
            raise EvalError(f"rating for unknown item {rating.item_id!r}")
        scores[assignment[rating.label]].append(rating.score)
        rated_positions.setdefault(rating.item_id, set()).add(rating.label)

    unrated = [iid for iid in assignments if rated_positions.get(iid, set()) != {"a", "b"}]
    partial = bool(unrated)

    means = {
        name: (sum(vals) / len(vals)) if vals else None for name, vals in scores.items()
    }
    base_mean, cand_mean = means[baseline_name], means[candidate_name]
    report: dict = {
        "baseline": baseline_name,
        "candidate": candidate_name,
        "means": means,
        "rating_counts": {name: len(vals) for name, vals in scores.items()},
        "partial": partial,
        "unrated_items": sorted(unrated),
    }
    if base_mean and cand_mean is not None:
        relative = (cand_mean - base_mean) / base_mean
        points = cand_mean - base_mean
        report.update(
            {
                "relative_improvement": relative,
                "relative_improvement_display": f"{round(relative * 100)}%",
                "absolute_improvement_points": points,
                "absolute_improvement_scale_pct": points / 10.0 * 100.0,
            }
        )
    return report
