"""Prompt templates for thought generation and code correction.

All rendering is a pure function of its arguments. Sections appear in the
concatenation order each step calls for:

  thought generation    task, buggy, message, correct code, doc RAG
  scoring a thought     buggy, message, doc RAG, thought, cue
  fine-tuning context   task, answer format, buggy, message, doc RAG, code RAG
  inference correction  context, thought, cue
"""

from __future__ import annotations

import re
from typing import List, Optional, Sequence

from hdldebug.knowledge import DocRag
from hdldebug.llm.transport import ChatMessage

CORRECT_CUE = "Based on the analysis, the correct script is"

SYSTEM_PROMPT = (
    "You debug scripts written in a compact hardware description language. "
    "A script declares one module with input/output ports, declarations "
    "(wire, reg, clock, probe) and statements (assign, init, pulse)."
)

THOUGHT_TASK = (
    "Explain how to repair the buggy script. For each reported error, name the "
    "statement responsible, say why the checker rejects it, and state the minimal "
    "edit that fixes it. Reply with the analysis only, not the full script."
)

ANSWER_FORMAT = (
    f'When the analysis is done, continue with "{CORRECT_CUE}" and give the '
    "complete corrected script in a single fenced code block."
)

SINGLE_CALL_TAIL = (
    f'First write the analysis. Then write "{CORRECT_CUE}" followed by the '
    "complete corrected script in a single fenced code block."
)

NO_SIMILAR = "(no similar instances)"

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def _code_block(text: str) -> str:
    body = text if text.endswith("\n") else text + "\n"
    return f"```mhdl\n{body}```"


def render_doc_rag(doc_rag: DocRag) -> str:
    lines = []
    for rec in doc_rag.entries:
        lines.append(f"- {rec.error_id}: {rec.description}")
        lines.append(f"  Root reason: {rec.root_reason}")
        lines.append(f"  Solution: {rec.solution}")
    for code in doc_rag.unknown_codes:
        lines.append(f"- {code}: no expert knowledge available")
    if not lines:
        lines.append("(no error codes recognised)")
    return "\n".join(lines)


def render_code_rag(code_rag: Optional[Sequence]) -> str:
    """Exemplars as delimited (buggy, message, correct) blocks."""
    if not code_rag:
        return NO_SIMILAR
    blocks = []
    for n, inst in enumerate(code_rag, 1):
        blocks.append(
            f"### Example {n}\n"
            f"Buggy script:\n{_code_block(inst.buggy)}\n"
            f"Error message:\n{inst.message}\n"
            f"Corrected script:\n{_code_block(inst.correct)}"
        )
    return "\n\n".join(blocks)


def _section(title: str, body: str) -> str:
    return f"## {title}\n{body}"


def prompt_thought(buggy: str, message: str, doc_rag: DocRag, correct: Optional[str] = None) -> List[ChatMessage]:
    parts = [
        THOUGHT_TASK,
        _section("Buggy script", _code_block(buggy)),
        _section("Error message", message),
    ]
    if correct is not None:
        parts.append(_section("Known-correct version", _code_block(correct)))
    parts.append(_section("Expert knowledge", render_doc_rag(doc_rag)))
    return [ChatMessage("system", SYSTEM_PROMPT), ChatMessage("user", "\n\n".join(parts))]


def render_context(buggy: str, message: str, doc_rag: DocRag, code_rag: Optional[Sequence]) -> str:
    """The fine-tuning context: task, answer format, buggy, message, doc RAG, code RAG."""
    return "\n\n".join(
        [
            THOUGHT_TASK,
            ANSWER_FORMAT,
            _section("Buggy script", _code_block(buggy)),
            _section("Error message", message),
            _section("Expert knowledge", render_doc_rag(doc_rag)),
            _section("Similar repaired instances", render_code_rag(code_rag)),
        ]
    )


def prompt_infer_thought(buggy: str, message: str, doc_rag: DocRag, code_rag: Optional[Sequence]) -> List[ChatMessage]:
    return [
        ChatMessage("system", SYSTEM_PROMPT),
        ChatMessage("user", render_context(buggy, message, doc_rag, code_rag)),
    ]


def prompt_correct(
    buggy: str,
    message: str,
    doc_rag: DocRag,
    code_rag: Optional[Sequence],
    thought: str,
) -> List[ChatMessage]:
    """Ask for the corrected script; the user turn always ends with the cue.

    Without ``code_rag`` this is the dataset-time scoring prompt; with it,
    the full fine-tuning context precedes the thought.
    """
    if not thought or not thought.strip():
        raise ValueError("thought must be non-empty")
    if code_rag is None:
        head = "\n\n".join(
            [
                _section("Buggy script", _code_block(buggy)),
                _section("Error message", message),
                _section("Expert knowledge", render_doc_rag(doc_rag)),
            ]
        )
    else:
        head = render_context(buggy, message, doc_rag, code_rag)
    user = f"{head}\n\n{_section('Analysis', thought.strip())}\n\n{CORRECT_CUE}"
    return [ChatMessage("system", SYSTEM_PROMPT), ChatMessage("user", user)]


def prompt_single_call(buggy: str, message: str, doc_rag: DocRag, code_rag: Optional[Sequence]) -> List[ChatMessage]:
    user = render_context(buggy, message, doc_rag, code_rag) + "\n\n" + SINGLE_CALL_TAIL
    return [ChatMessage("system", SYSTEM_PROMPT), ChatMessage("user", user)]


def extract_code(response: str) -> str:
    match = _FENCE_RE.search(response)
    if match:
        return match.group(1)
    cue_at = response.find(CORRECT_CUE)
    if cue_at >= 0:
        return response[cue_at + len(CORRECT_CUE) :].lstrip(" ,:").strip()
    return response.strip()


def split_single_call(response: str):
    """Split a one-shot answer into (analysis, code)."""
    cut = response.find(CORRECT_CUE)
    if cut < 0:
        fence = response.find("```")
        cut = fence if fence >= 0 else len(response)
    return response[:cut].strip(), extract_code(response)
