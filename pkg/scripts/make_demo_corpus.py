#!/usr/bin/env python3
"""Build a synthetic demo workspace: project documentation, a standards
file with numbered headings, and a compliance question corpus.

The content is deliberately word-overlap-friendly so the offline mock
providers retrieve and pair sensibly, letting the whole pipeline run
end-to-end without network access:

    python scripts/make_demo_corpus.py --root demo
"""
from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

TOPICS = [
    ("verification report", "6.2.4.13"),
    ("component test specification", "7.2.4.5"),
    ("design description", "7.3.4.2"),
    ("configuration management plan", "6.5.4.1"),
    ("requirements traceability matrix", "7.2.4.22"),
    ("integration test report", "7.6.4.3"),
    ("validation plan", "7.7.4.1"),
    ("quality assurance plan", "6.3.4.7"),
    ("source code review record", "7.5.4.9"),
    ("hazard analysis log", "9.1.4.2"),
    ("release note register", "9.2.4.6"),
    ("maintenance procedure", "9.3.4.4"),
]

FILLER = [
    "The activity was witnessed by the independent safety authority.",
    "Competency records for the responsible engineers are held by the project office.",
    "Anomalies raised during the review are tracked to closure in the register.",
    "The configuration baseline identifier is recorded alongside each artefact.",
    "Tool qualification evidence is referenced where automated checks were used.",
]


def project_text(rng: random.Random, project: str, phrase: str, section: str) -> str:
    serial = f"{project.upper()}-{phrase.split()[0][:3].upper()}{rng.randint(100, 999)}"
    lines = [
        f"# {phrase.title()} for {project}",
        "",
        f"The {phrase} for unit {serial} was produced by the development team and "
        f"approved by the independent assessor at the phase gate.",
        f"Evidence for the {phrase} is archived under reference {serial}-01 together "
        f"with the minutes of the approval review.",
        f"All activities required by section {section} of the applicable standard were "
        f"completed for {serial} before the milestone.",
        f"The {phrase} records outcomes for every software component of {serial} and "
        f"names the responsible role for each activity.",
    ]
    lines += rng.sample(FILLER, 3)
    return "\n".join(lines)


def standard_text() -> str:
    lines = [
        "Requirements for the development, deployment and maintenance of",
        "software in safety-critical control and protection applications.",
        "",
    ]
    for phrase, section in TOPICS:
        lines.append(f"{section} {phrase.title()}")
        lines.append(
            f"The {phrase} shall describe the activities performed for each software "
            f"component, shall record their outcome and the responsible role, and shall "
            f"provide traceable identifiers for every artefact examined. Where the "
            f"{phrase} covers multiple components, the applicable software integrity "
            f"level shall be stated for each."
        )
    lines.append("Annex A Documentation Structure")
    lines.append(
        "Guidance on the structure of software documentation, including the ordering "
        "of sections, the naming of controlled documents, and the presentation of "
        "verification evidence."
    )
    lines.append("Annex B Role Competency")
    lines.append(
        "Guidance on demonstrating the competency of appointed personnel for each "
        "lifecycle role, including assessors, verifiers and validators."
    )
    return "\n".join(lines)


def questions(rng: random.Random) -> list[dict]:
    records = []
    for i, (phrase, section) in enumerate(TOPICS):
        suffix = f" (see {section})" if i % 6 == 0 else ""
        records.append(
            {
                "id": f"q{i:03d}",
                "text": (
                    f"Does the user documentation contain evidence that the {phrase} "
                    f"has been produced and approved{suffix}?"
                ),
                "origin": "shall_statement",
            }
        )
        records.append(
            {
                "id": f"q{i:03d}b",
                "text": (
                    f"Does the user documentation contain a record of outcomes and "
                    f"responsible roles for the {phrase}?"
                ),
                "origin": "shall_statement",
            }
        )
    records.append(
        {
            "id": "g000",
            "text": (
                "Does the user documentation contain a statement of competency for the "
                "appointed verification personnel?"
            ),
            "origin": "internal_guidance",
        }
    )
    records.append(
        {
            "id": "g001",
            "text": (
                "Does the user documentation contain an argument that witnessed testing "
                "covered the safety-relevant functions?"
            ),
            "origin": "internal_guidance",
        }
    )
    return records


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="demo", help="output directory")
    parser.add_argument("--projects", type=int, default=5)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    root = Path(args.root)
    projects_dir = root / "projects"
    projects_dir.mkdir(parents=True, exist_ok=True)

    for p in range(args.projects):
        project = f"proj{p:02d}"
        pdir = projects_dir / project
        pdir.mkdir(exist_ok=True)
        for phrase, section in TOPICS:
            slug = phrase.replace(" ", "_")
            (pdir / f"{slug}.md").write_text(project_text(rng, project, phrase, section))

    (root / "standard.md").write_text(standard_text())
    (root / "questions.json").write_text(json.dumps(questions(rng), indent=2))
    print(
        json.dumps(
            {
                "root": str(root),
                "projects": args.projects,
                "files_per_project": len(TOPICS),
                "questions": len(questions(rng)),
            },
            indent=2,
        )
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
