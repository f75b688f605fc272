from __future__ import annotations

import csv

import pytest

from dualrag.evalharness import (
    EvalError,
    Rating,
    build_blind_set,
    load_ratings,
    summarize,
    write_blind_files,
)


def responses(n, prefix):
    return {f"q{i:03d}": f"{prefix} answer {i}" for i in range(n)}


def write_ratings_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_id", "label", "score", "rater"])
        writer.writerows(rows)


class TestBuildBlindSet:
    def test_56_questions_yield_56_items(self):
        items, key = build_blind_set(responses(56, "base"), responses(56, "ft"), seed=1)
        assert len(items) == 56
        assert len(key["assignments"]) == 56

    def test_seed_fixes_permutation(self):
        a_items, a_key = build_blind_set(responses(20, "b"), responses(20, "c"), seed=9)
        b_items, b_key = build_blind_set(responses(20, "b"), responses(20, "c"), seed=9)
        assert a_items == b_items
        assert a_key == b_key

    def test_positions_actually_vary(self):
        _, key = build_blind_set(responses(56, "b"), responses(56, "c"), seed=3)
        firsts = {v["a"] for v in key["assignments"].values()}
        assert firsts == {"baseline", "candidate"}

    def test_coverage_mismatch_names_missing_ids(self):
        base = responses(5, "b")
        cand = responses(5, "c")
        del cand["q002"]
        with pytest.raises(EvalError, match="q002"):
            build_blind_set(base, cand, seed=1)

    def test_blind_files_contain_no_model_names(self, tmp_path):
        items, key = build_blind_set(
            responses(10, "b"), responses(10, "c"), seed=2, baseline_name="model-base", candidate_name="model-ft"
        )
        items_path, key_path = tmp_path / "items.json", tmp_path / "key.json"
        write_blind_files(items, key, items_path, key_path)
        blind_payload = items_path.read_text()
        assert "model-base" not in blind_payload
        assert "model-ft" not in blind_payload
        assert "model-base" in key_path.read_text()  # unblinding requires the key


class TestRatings:
    def test_score_range_enforced(self):
        with pytest.raises(EvalError):
            Rating("i1", "a", 11, "r")
        with pytest.raises(EvalError):
            Rating("i1", "x", 5, "r")

    def test_csv_roundtrip(self, tmp_path):
        path = tmp_path / "ratings.csv"
        write_ratings_csv(path, [["q000", "a", 7, "rater1"], ["q000", "b", 5, "rater1"]])
        ratings = load_ratings(path)
        assert ratings == [Rating("q000", "a", 7, "rater1"), Rating("q000", "b", 5, "rater1")]

    def test_missing_columns_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("item,score\nq,5\n")
        with pytest.raises(EvalError, match="columns"):
            load_ratings(path)


class TestSummarize:
    def build(self, n, seed=4):
        return build_blind_set(responses(n, "b"), responses(n, "c"), seed=seed)

    def ratings_with_means(self, key, base_scores, cand_scores):
        ratings = []
        for i, (item_id, assignment) in enumerate(sorted(key["assignments"].items())):
            base_label = "a" if assignment["a"] == key["baseline_name"] else "b"
            cand_label = "b" if base_label == "a" else "a"
            ratings.append(Rating(item_id, base_label, base_scores[i], "r1"))
            ratings.append(Rating(item_id, cand_label, cand_scores[i], "r1"))
        return ratings

    def test_published_arithmetic_reproduced(self):
        # 50 items engineered to means 6.50 and 6.98: relative improvement
        # 0.48/6.50 = 7.38%, displayed rounded as 7%; absolute 0.48 points
        # = 4.8% of the 10-point scale.
        items, key = self.build(50)
        base_scores = [6] * 25 + [7] * 25   # sum 325 -> mean 6.50
        cand_scores = [7] * 49 + [6]        # sum 349 -> mean 6.98
        ratings = self.ratings_with_means(key, base_scores, cand_scores)
        report = summarize(ratings, key)
        assert report["means"]["baseline"] == pytest.approx(6.50, abs=1e-12)
        assert report["means"]["candidate"] == pytest.approx(6.98, abs=1e-12)
        assert report["relative_improvement"] == pytest.approx(0.48 / 6.50, abs=1e-9)
        assert report["relative_improvement_display"] == "7%"
        assert report["absolute_improvement_points"] == pytest.approx(0.48, abs=1e-9)
        assert report["absolute_improvement_scale_pct"] == pytest.approx(4.8, abs=1e-9)
        assert report["partial"] is False

    def test_identical_ratings_zero_improvement(self):
        items, key = self.build(10)
        ratings = self.ratings_with_means(key, [6] * 10, [6] * 10)
        report = summarize(ratings, key)
        assert report["relative_improvement"] == 0.0
        assert report["relative_improvement_display"] == "0%"

    def test_hand_arithmetic_five_to_six(self):
        items, key = self.build(4)
        ratings = self.ratings_with_means(key, [5, 5, 5, 5], [6, 6, 6, 6])
        report = summarize(ratings, key)
        assert report["means"]["baseline"] == 5.0
        assert report["means"]["candidate"] == 6.0
        assert report["relative_improvement"] == pytest.approx(0.20)

    def test_mean_matches_bruteforce_recount(self):
        items, key = self.build(12, seed=8)
        scores = [i % 11 for i in range(12)]
        ratings = self.ratings_with_means(key, scores, scores[::-1])
        report = summarize(ratings, key)
        raw = {"baseline": [], "candidate": []}
        for rating in ratings:
            raw[key["assignments"][rating.item_id][rating.label]].append(rating.score)
        for name, values in raw.items():
            assert report["means"][name] == sum(values) / len(values)

    def test_incomplete_ratings_marked_partial(self):
        items, key = self.build(5)
        ratings = self.ratings_with_means(key, [5] * 5, [6] * 5)[:-1]
        report = summarize(ratings, key)
        assert report["partial"] is True
        assert len(report["unrated_items"]) == 1

    def test_unknown_item_rejected(self):
        _, key = self.build(3)
        with pytest.raises(EvalError, match="unknown item"):
            summarize([Rating("nope", "a", 5, "r")], key)

    def test_unblinding_requires_key(self):
        # The ratings alone cannot identify models: summarize needs the key's
        # assignments, and a wrong key changes the attribution.
        items, key = self.build(8)
        ratings = self.ratings_with_means(key, [4] * 8, [8] * 8)
        flipped = {
            **key,
            "assignments": {
                iid: {"a": v["b"], "b": v["a"]} for iid, v in key["assignments"].items()
            },
        }
        straight = summarize(ratings, key)
        crossed = summarize(ratings, flipped)
        assert straight["means"]["baseline"] == 4.0
        assert crossed["means"]["baseline"] == 8.0
