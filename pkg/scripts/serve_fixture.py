#!/usr/bin/env python3
"""Build a fixture workspace end-to-end (mock providers) and serve it.

Used for working on the review UI and for the UI round-trip test:

    python scripts/serve_fixture.py --workdir /tmp/fixture --port 8787

The full review sample is exposed (fraction 1.0) so the queue is populated.
"""
from __future__ import annotations

import argparse
import subprocess
import sys
from pathlib import Path

SCRIPTS_DIR = Path(__file__).resolve().parent

from dualrag.cli import main as cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8787)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--ui-dir", default=str(SCRIPTS_DIR.parent / "frontend" / "dist"))
    args = parser.parse_args()

    workdir = Path(args.workdir)
    out = workdir / "out"
    base = ["--out-dir", str(out), "--seed", str(args.seed)]

    if not (out / "instances.jsonl").exists():
        subprocess.run(
            [sys.executable, str(SCRIPTS_DIR / "make_demo_corpus.py"), "--root", str(workdir)],
            check=True,
        )
        steps = [
            base + [
                "ingest",
                "--docs", str(workdir / "projects"),
                "--context", str(workdir / "standard.md"),
                "--questions", str(workdir / "questions.json"),
                "--window", "120",
                "--overlap", "20",
                "--force",
            ],
            base + ["index", "--force"],
            base + ["pair", "--force"],
            base + ["generate", "--review-fraction", "1.0", "--force"],
        ]
        for step in steps:
            code = cli(step)
            if code != 0:
                return code

    ui_dir = Path(args.ui_dir)
    serve_args = base + ["serve", "--host", args.host, "--port", str(args.port)]
    if ui_dir.is_dir():
        config = workdir / "serve_config.json"
        config.write_text(f'{{"out_dir": "{out}", "ui_dir": "{ui_dir}"}}\n')
        serve_args = ["--config", str(config)] + serve_args
    return cli(serve_args)


if __name__ == "__main__":
    raise SystemExit(main())
