from __future__ import annotations

import json
from pathlib import Path

import pytest

from dualrag.corpus import (
    STANDARDS_PROJECT_ID,
    Chunk,
    CorpusKind,
    Question,
    QuestionOrigin,
)
from dualrag.providers import MockChatModel, MockEmbeddings, MockReranker

# Topic phrases with the standard section that governs them; used to build
# synthetic projects, questions, and a standards file that behave sensibly
# under the token-overlap mocks.
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

STANDARD_HEADER = (
    "Scope and normative provisions for the assessment of software in "
    "safety-critical control and protection applications follow below."
)


def standard_text() -> str:
    lines = [STANDARD_HEADER, ""]
    for phrase, section in TOPICS:
        lines.append(f"{section} {phrase.title()}")
        lines.append(
            f"The {phrase} shall describe the activities performed for each software "
            f"component and shall record their outcome, the responsible role, and the "
            f"traceable identifier of every artefact examined during the {phrase} work."
        )
    lines.append("Annex A Documentation Structure")
    lines.append(
        "Guidance on the structure of software documentation, including the ordering "
        "of sections and the naming of controlled documents."
    )
    return "\n".join(lines)


def project_file_text(project: str, phrase: str, section: str) -> str:
    serial = f"{project}-{phrase.split()[0][:3].upper()}"
    sentences = [
        f"The {phrase} for unit {serial} was produced by the development team and "
        f"approved by the independent assessor.",
        f"Evidence for the {phrase} is archived under reference {serial}-01 together "
        f"with the review minutes.",
        f"All activities required by section {section} were completed for {serial} "
        f"before the milestone gate.",
        f"The {phrase} records outcomes for every software component of {serial} and "
        f"names the responsible role.",
        f"Residual anomalies affecting the {phrase} of {serial} are tracked in the "
        f"project anomaly register.",
    ]
    return "\n".join(sentences)


def write_corpus_tree(root: Path, n_projects: int = 5, topics_per_project: int = 6) -> dict:
    """Write a synthetic workspace: projects/, standard.md, questions.json."""
    projects_dir = root / "projects"
    projects_dir.mkdir(parents=True)
    for p in range(n_projects):
        project = f"proj{p:02d}"
        pdir = projects_dir / project
        pdir.mkdir()
        for phrase, section in TOPICS[:topics_per_project]:
            slug = phrase.replace(" ", "_")
            (pdir / f"{slug}.md").write_text(project_file_text(project, phrase, section))

    standard_path = root / "standard.md"
    standard_path.write_text(standard_text())

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
            "id": "g000",
            "text": (
                "Does the user documentation contain a statement of competency for "
                "the appointed verification personnel?"
            ),
            "origin": "internal_guidance",
        }
    )
    questions_path = root / "questions.json"
    questions_path.write_text(json.dumps(records, indent=2))
    return {
        "projects_dir": projects_dir,
        "standard_path": standard_path,
        "questions_path": questions_path,
        "n_questions": len(records),
    }


def make_chunk(
    cid: str,
    text: str,
    kind: CorpusKind = CorpusKind.DOCUMENT,
    project: str = "proj-a",
    source: str = "doc.md",
    seq: int = 0,
) -> Chunk:
    return Chunk(
        id=cid,
        corpus_kind=kind,
        project_id=STANDARDS_PROJECT_ID if kind is CorpusKind.CONTEXT else project,
        source_doc=source,
        seq=seq,
        text=text,
        approx_tokens=len(text.split()),
    )


def make_question(qid: str, text: str, origin=QuestionOrigin.SHALL_STATEMENT) -> Question:
    from dualrag.refextract import extract_references

    return Question(id=qid, text=text, origin=origin, references=tuple(extract_references(text)))


@pytest.fixture
def embedder() -> MockEmbeddings:
    return MockEmbeddings()


@pytest.fixture
def reranker() -> MockReranker:
    return MockReranker()


@pytest.fixture
def llm() -> MockChatModel:
    return MockChatModel()


@pytest.fixture
def workspace(tmp_path: Path) -> dict:
    info = write_corpus_tree(tmp_path)
    info["root"] = tmp_path
    info["out_dir"] = tmp_path / "out"
    return info
