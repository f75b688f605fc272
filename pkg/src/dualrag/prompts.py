"""The assessment prompt template and quote-marker helpers.

One renderer serves both the fine-tuning dataset export and the inference
pipeline, so training inputs and inference inputs stay byte-identical for
identical content. Document and context blocks carry stable position
labels: an answer-generation rendering shows only the golden blocks but
keeps the labels they will have in the full training rendering, making the
two renderings differ exactly by the distractor blocks.
"""
from __future__ import annotations

import re
from typing import Sequence

from .textutil import normalize_ws

QUOTE_BEGIN = "##begin_quote##"
QUOTE_END = "##end_quote##"

SYSTEM_PREAMBLE = (
    "You are an independent assessor of safety-critical software documentation. "
    "Answer each compliance query strictly from the material supplied with it, "
    "quoting your evidence."
)

ASSESSMENT_TEMPLATE = """You will be provided with some documentation and supporting context:
===================== **User Documentation**=====================
{user_docs_str}
=================================================================
--------------------- **Contextual Information** ----------------
{context_str}
-----------------------------------------------------------------
Based **solely** on the **User Documentation**
and by enhancing your analysis utilising the **Contextual Information**
please answer the following question.
**Question:** {query_str}
**Important Guidelines:**
- **Do NOT** use any prior knowledge or external information.
- **Do NOT** perform an analysis of the **Contextual Information**
in your answer.
Your response **must** be in the following format:
- First Provide step-by-step reasoning on how to answer the **Question**,
potentially making use of the **Contextual Information**
to refine your steps,
do not directly mention **Contextual Information**.
- Explain which parts of the **User Documentation**
that are meaningful to answer the **Question** and explain why.
- Copy paste the relevant sentences from the **User Documentation**
in ##begin_quote## and ##end_quote##.
- Provide a summary of how you reached your answer.
"""

DOC_BLOCK_RE = re.compile(r"^\[Document (\d+)\]$", re.MULTILINE)
CTX_BLOCK_RE = re.compile(r"^\[Context (\d+)\]$", re.MULTILINE)

_QUOTE_RE = re.compile(re.escape(QUOTE_BEGIN) + r"(.*?)" + re.escape(QUOTE_END), re.DOTALL)


def render_doc_block(label: int, text: str) -> str:
    return f"[Document {label}]\n{text}"


def render_ctx_block(label: int, text: str) -> str:
    return f"[Context {label}]\n{text}"


def render_assessment_prompt(
    question: str,
    doc_blocks: Sequence[tuple[int, str]],
    ctx_blocks: Sequence[tuple[int, str]],
) -> str:
    """Render the assessment prompt from (label, text) block pairs."""
    user_docs_str = "\n\n".join(render_doc_block(i, t) for i, t in doc_blocks)
    context_str = "\n\n".join(render_ctx_block(i, t) for i, t in ctx_blocks)
    return ASSESSMENT_TEMPLATE.format(
        user_docs_str=user_docs_str, context_str=context_str, query_str=question
    )


def extract_quotes(text: str) -> list[str]:
    """All spans between quote markers, in order, markers excluded."""
    return [m.group(1) for m in _QUOTE_RE.finditer(text)]


def quote_is_verbatim(span: str, source_texts: Sequence[str]) -> bool:
    """True if the span occurs in some source text, whitespace-normalized."""
    needle = normalize_ws(span)
    if not needle:
        return False
    return any(needle in normalize_ws(src) for src in source_texts)


_DOCS_RULER = "**User Documentation**=====================\n"
_DOCS_END = "\n================================================================="
_CTX_RULER = "**Contextual Information** ----------------\n"
_CTX_END = "\n-----------------------------------------------------------------"


def extract_user_docs_section(prompt: str) -> str:
    """The raw text between the user-documentation rulers of a rendered prompt."""
    start = prompt.index(_DOCS_RULER) + len(_DOCS_RULER)
    return prompt[start : prompt.index(_DOCS_END, start)]


def extract_context_section(prompt: str) -> str:
    start = prompt.index(_CTX_RULER) + len(_CTX_RULER)
    return prompt[start : prompt.index(_CTX_END, start)]


def _split_blocks(section: str, marker_re: re.Pattern[str]) -> list[tuple[int, str]]:
    # re.split with one capture group yields [prefix, label, body, label, body, ...];
    # each body runs to the next marker and carries the joining blank line.
    parts = marker_re.split(section)
    return [(int(parts[i]), parts[i + 1].strip("\n")) for i in range(1, len(parts) - 1, 2)]


def split_doc_blocks(section: str) -> list[tuple[int, str]]:
    """Invert the doc-block rendering: back to (label, text) pairs."""
    return _split_blocks(section, DOC_BLOCK_RE)


def split_ctx_blocks(section: str) -> list[tuple[int, str]]:
    return _split_blocks(section, CTX_BLOCK_RE)
