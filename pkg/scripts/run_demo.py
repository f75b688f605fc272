#!/usr/bin/env python3
"""Run the whole pipeline end-to-end on the synthetic demo corpus with the
offline mock providers, finishing with an integrity check and one query.

    python scripts/make_demo_corpus.py --root demo
    python scripts/run_demo.py --root demo --out demo/out
"""
from __future__ import annotations

import argparse
import sys

from dualrag.cli import main as cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="demo")
    parser.add_argument("--out", default="demo/out")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--window", type=int, default=120)
    parser.add_argument("--overlap", type=int, default=20)
    args = parser.parse_args()

    base = ["--out-dir", args.out, "--seed", str(args.seed)]
    steps = [
        base + [
            "ingest",
            "--docs", f"{args.root}/projects",
            "--context", f"{args.root}/standard.md",
            "--questions", f"{args.root}/questions.json",
            "--window", str(args.window),
            "--overlap", str(args.overlap),
            "--force",
        ],
        base + ["index", "--force"],
        base + ["pair", "--force"],
        base + ["generate", "--force"],
        base + ["export", "--force"],
        base + ["verify-dataset"],
        base + ["stats", "questions"],
        base + [
            "query",
            "--question",
            "Does the user documentation contain evidence that the verification "
            "report has been produced and approved?",
        ],
    ]
    for step in steps:
        print(f"$ dualrag {' '.join(step)}", file=sys.stderr)
        code = cli(step)
        if code != 0:
            print(f"step failed with exit code {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
