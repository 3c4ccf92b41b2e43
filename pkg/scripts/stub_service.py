"""A scripted chat-completion service for recording offline fixtures.

It behaves like a small, deterministic model that knows the reference
correction for every buggy script it has been told about:

* thought requests (known-correct version present) return a line-level
  edit plan for even ``seed`` values and a vague analysis for odd ones;
* correction requests apply the edit plan found in the analysis to the
  buggy script, so a vague analysis leaves the script unchanged;
* single-call requests return a full plan followed by the corrected script.

Plans use ``@@ replace a..b`` headers followed by the new lines, then ``@@ end``.
"""

from __future__ import annotations

import difflib
import json
import re
from typing import Dict, List, Optional

import httpx

from hdldebug.llm.prompts import CORRECT_CUE, SINGLE_CALL_TAIL
from hdldebug.llm.transport import chat_response

_BUGGY_RE = re.compile(r"## Buggy script\n```mhdl\n(.*?)```", re.DOTALL)
_CORRECT_RE = re.compile(r"## Known-correct version\n```mhdl\n(.*?)```", re.DOTALL)
_MESSAGE_RE = re.compile(r"## Error message\n(.*?)\n\n## ", re.DOTALL)
_PLAN_RE = re.compile(r"@@ replace (\d+)\.\.(\d+)\n(.*?)@@ end\n", re.DOTALL)


def edit_plan(buggy: str, correct: str) -> str:
    a, b = buggy.splitlines(keepends=True), correct.splitlines(keepends=True)
    out = []
    # reversed so applying hunks top-down never shifts later line numbers
    for tag, i1, i2, j1, j2 in reversed(difflib.SequenceMatcher(a=a, b=b, autojunk=False).get_opcodes()):
        if tag != "equal":
            out.append(f"@@ replace {i1}..{i2}\n" + "".join(b[j1:j2]) + "@@ end\n")
    return "".join(out)


def apply_plan(buggy: str, analysis: str) -> str:
    lines = buggy.splitlines(keepends=True)
    for m in _PLAN_RE.finditer(analysis):
        i1, i2 = int(m.group(1)), int(m.group(2))
        lines[i1:i2] = m.group(3).splitlines(keepends=True)
    return "".join(lines)


def _codes(message: str) -> List[str]:
    return sorted(set(re.findall(r"[A-Za-z]-error-[0-9]+", message)))


class StubService:
    def __init__(self, answers: Optional[Dict[str, str]] = None):
        self.answers: Dict[str, str] = dict(answers or {})
        self.requests = 0

    def teach(self, buggy: str, correct: str) -> None:
        self.answers[buggy] = correct

    def _analysis(self, buggy: str, message: str, correct: Optional[str], full: bool) -> str:
        codes = ", ".join(_codes(message)) or "no codes"
        head = f"The checker reports {codes}. The offending statements are identified below.\n"
        if not full or correct is None:
            return head + "Review the statements near the reported lines and restore what the rules require.\n"
        return head + "Apply these edits:\n" + edit_plan(buggy, correct)

    def reply(self, body: dict) -> str:
        user = body["messages"][-1]["content"]
        buggy_m = _BUGGY_RE.search(user)
        if buggy_m is None:
            raise ValueError("request has no buggy script section")
        buggy = buggy_m.group(1)
        msg_m = _MESSAGE_RE.search(user)
        message = msg_m.group(1) if msg_m else ""
        if user.rstrip().endswith(CORRECT_CUE):
            analysis = user.rsplit("## Analysis\n", 1)[1]
            return f"```mhdl\n{apply_plan(buggy, analysis)}```\n"
        known = _CORRECT_RE.search(user)
        if known is not None:
            return self._analysis(buggy, message, known.group(1), full=body.get("seed", 0) % 2 == 0)
        correct = self.answers.get(buggy)
        analysis = self._analysis(buggy, message, correct, full=True)
        if user.endswith(SINGLE_CALL_TAIL):
            return f"{analysis}\n{CORRECT_CUE}\n```mhdl\n{apply_plan(buggy, analysis)}```\n"
        return analysis

    def handler(self, request: httpx.Request) -> httpx.Response:
        self.requests += 1
        if request.url.path != "/chat/completions":
            return httpx.Response(404, json={"error": "unsupported"})
        return httpx.Response(200, json=chat_response(self.reply(json.loads(request.content))))

    def client(self, base_url: str) -> httpx.Client:
        return httpx.Client(transport=httpx.MockTransport(self.handler), base_url=base_url)
