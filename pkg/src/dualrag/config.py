"""Run configuration: one JSON file, flag overrides, env vars for secrets."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import DEFAULT_OVERLAP_TOKENS, DEFAULT_QUESTION_PREFIX, DEFAULT_WINDOW_TOKENS
from .providers import (
    HttpChatModel,
    HttpEmbeddings,
    HttpReranker,
    MockChatModel,
    MockEmbeddings,
    MockReranker,
    ProviderConfig,
)
from .retrieval import (
    DEFAULT_ALPHA,
    DEFAULT_B,
    DEFAULT_K1,
    DOC_FINAL_K,
    DOC_STAGE1_K,
    QUESTION_FINAL_K,
    QUESTION_STAGE1_K,
)

# Artifact filenames under the output directory; every stage reads and
# writes through these names so stages compose on disk.
ARTIFACTS = {
    "chunks_docs": "chunks_docs.jsonl",
    "chunks_ctx": "chunks_ctx.jsonl",
    "questions": "questions.jsonl",
    "splits": "splits.json",
    "index_docs": "index_docs.json",
    "index_ctx": "index_ctx.json",
    "index_questions": "index_questions.json",
    "pairs": "pairs.jsonl",
    "instances": "instances.jsonl",
    "review_sample": "review_sample.json",
    "reviews": "reviews.jsonl",
    "dataset": "dataset.jsonl",
    "dataset_meta": "dataset.meta.json",
    "blind_items": "blind_items.json",
    "blind_key": "blind_key.json",
}


@dataclass
class ChunkingConfig:
    window_tokens: int = DEFAULT_WINDOW_TOKENS
    overlap_tokens: int = DEFAULT_OVERLAP_TOKENS


@dataclass
class RetrievalParams:
    alpha: float = DEFAULT_ALPHA
    stage1_k: int = DOC_STAGE1_K
    final_k: int = DOC_FINAL_K
    question_stage1_k: int = QUESTION_STAGE1_K
    question_final_k: int = QUESTION_FINAL_K
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B


@dataclass
class ProviderSettings:
    """Provider mode plus per-service connection settings (http mode)."""

    mode: str = "mock"  # "mock" | "http"
    embed_endpoint: str = ""
    embed_model: str = ""
    chat_endpoint: str = ""
    chat_model: str = ""
    rerank_endpoint: str = ""
    rerank_model: str = ""
    api_key_env: str = "DUALRAG_API_KEY"
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4


@dataclass
class RunConfig:
    out_dir: Path = Path("out")
    projects_dir: Path | None = None
    context_paths: list[Path] = field(default_factory=list)
    questions_path: Path | None = None
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    retrieval: RetrievalParams = field(default_factory=RetrievalParams)
    providers: ProviderSettings = field(default_factory=ProviderSettings)
    seed: int = 42
    review_fraction: float = 0.10
    question_prefix: str = DEFAULT_QUESTION_PREFIX
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    ui_dir: Path | None = None

    def artifact(self, name: str) -> Path:
        return Path(self.out_dir) / ARTIFACTS[name]

    def to_json(self) -> dict:
        data = asdict(self)
        for key in ("out_dir", "projects_dir", "questions_path", "ui_dir"):
            if data[key] is not None:
                data[key] = str(data[key])
        data["context_paths"] = [str(p) for p in data["context_paths"]]
        data["split_ratios"] = list(data["split_ratios"])
        return data

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        cfg = cls()
        if "out_dir" in data:
            cfg.out_dir = Path(data["out_dir"])
        if data.get("projects_dir"):
            cfg.projects_dir = Path(data["projects_dir"])
        if data.get("questions_path"):
            cfg.questions_path = Path(data["questions_path"])
        if data.get("ui_dir"):
            cfg.ui_dir = Path(data["ui_dir"])
        cfg.context_paths = [Path(p) for p in data.get("context_paths", [])]
        for section, klass in (
            ("chunking", ChunkingConfig),
            ("retrieval", RetrievalParams),
            ("providers", ProviderSettings),
        ):
            if section in data:
                setattr(cfg, section, klass(**data[section]))
        for scalar in ("seed", "review_fraction", "question_prefix"):
            if scalar in data:
                setattr(cfg, scalar, data[scalar])
        if "split_ratios" in data:
            cfg.split_ratios = tuple(data["split_ratios"])  # type: ignore[assignment]
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def build_providers(settings: ProviderSettings):
    """Instantiate (embedder, llm, reranker) for the configured mode."""
    if settings.mode == "mock":
        return MockEmbeddings(), MockChatModel(), MockReranker()
    if settings.mode != "http":
        raise ValueError(f"unknown provider mode {settings.mode!r}")

    def pc(endpoint: str, model: str) -> ProviderConfig:
        return ProviderConfig(
            endpoint=endpoint,
            model_name=model,
            api_key_env=settings.api_key_env,
            timeout=settings.timeout,
            max_retries=settings.max_retries,
            max_concurrency=settings.max_concurrency,
        )

    return (
        HttpEmbeddings(pc(settings.embed_endpoint, settings.embed_model)),
        HttpChatModel(pc(settings.chat_endpoint, settings.chat_model)),
        HttpReranker(pc(settings.rerank_endpoint, settings.rerank_model)),
    )
