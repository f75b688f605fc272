#!/usr/bin/env python3
"""Independent brute-force hybrid scorer.

Recomputes, from scratch, the blended retrieval score of EVERY item in a
persisted index against a query:

    score = alpha * cosine(q, x) + (1 - alpha) * minmax(bm25(q, x))

with textbook Okapi BM25 (smoothed idf) computed here with plain Counters,
not via the package's retrieval module, so it can serve as an oracle for
that module. Only the query embedding is shared input data (the index file
stores item vectors; the query is embedded with the same deterministic
mock embedder the index was built with).

Usage:
    bruteforce_hybrid.py --index out/index_docs.json --query "..." \
        [--alpha 0.75] [--k 10]

Prints a JSON array of {id, dense, bm25_raw, bm25_norm, hybrid} in rank
order (descending hybrid, ties by ascending id).
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from collections import Counter
from pathlib import Path

_WORDS = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _WORDS.findall(text.lower())


def bm25_all(texts: list[str], query: str, k1: float, b: float) -> list[float]:
    token_lists = [tokenize(t) for t in texts]
    n = len(texts)
    lengths = [len(t) for t in token_lists]
    avg = sum(lengths) / n
    tfs = [Counter(t) for t in token_lists]
    df: Counter = Counter()
    for tf in tfs:
        for term in tf:
            df[term] += 1
    scores = []
    for i in range(n):
        s = 0.0
        for term in tokenize(query):
            tf = tfs[i].get(term, 0)
            if tf == 0:
                continue
            idf = math.log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5))
            denom = tf + k1 * (1.0 - b + b * lengths[i] / avg)
            s += idf * (tf * (k1 + 1.0)) / denom
        scores.append(s)
    return scores


def rank(index_payload: dict, query_vector: list[float], query: str, alpha: float) -> list[dict]:
    items = index_payload["items"]
    vectors = index_payload["vectors"]
    texts = [item["text"] for item in items]
    ids = [item["id"] for item in items]

    dense = [sum(q * v for q, v in zip(query_vector, vec)) for vec in vectors]
    raw = bm25_all(texts, query, index_payload["bm25"]["k1"], index_payload["bm25"]["b"])
    lo, hi = min(raw), max(raw)
    if hi - lo > 0.0:
        norm = [(r - lo) / (hi - lo) for r in raw]
    else:
        norm = [0.5] * len(raw)

    rows = [
        {
            "id": ids[i],
            "dense": dense[i],
            "bm25_raw": raw[i],
            "bm25_norm": norm[i],
            "hybrid": alpha * dense[i] + (1.0 - alpha) * norm[i],
        }
        for i in range(len(ids))
    ]
    rows.sort(key=lambda r: (-r["hybrid"], r["id"]))
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--index", required=True)
    parser.add_argument("--query", required=True)
    parser.add_argument("--alpha", type=float, default=0.75)
    parser.add_argument("--k", type=int, default=0, help="truncate output (0 = all)")
    args = parser.parse_args(argv)

    payload = json.loads(Path(args.index).read_text())
    from dualrag.providers import MockEmbeddings

    q_vec = [float(x) for x in MockEmbeddings(dim=payload["dim"]).embed([args.query])[0]]
    rows = rank(payload, q_vec, args.query, args.alpha)
    if args.k:
        rows = rows[: args.k]
    json.dump(rows, sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
