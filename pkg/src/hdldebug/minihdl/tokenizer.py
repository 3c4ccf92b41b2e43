"""Lossless tokenizer for the mini-HDL dialect.

Every byte of the input lands in exactly one token, so ``detokenize`` is an
exact inverse. Characters outside the grammar become single-character
``punct`` tokens instead of raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, List, Union

KEYWORDS = frozenset(
    {
        "module",
        "endmodule",
        "input",
        "output",
        "wire",
        "reg",
        "clock",
        "probe",
        "assign",
        "pulse",
        "init",
    }
)

DECL_KEYWORDS = ("wire", "reg", "clock", "probe")

_TOKEN_RE = re.compile(
    r"(?P<whitespace>\s+)"
    r"|(?P<comment>//[^\n]*)"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<number>[0-9]+)"
    r"|(?P<punct>.)",
    re.DOTALL,
)


class InputEncodingError(ValueError):
    """Source bytes are not valid UTF-8."""


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    offset: int  # character offset into the source

    @property
    def end(self) -> int:
        return self.offset + len(self.text)

    @property
    def significant(self) -> bool:
        return self.kind not in ("whitespace", "comment")


def _decode(text: Union[str, bytes]) -> str:
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InputEncodingError(f"source is not valid UTF-8: {exc}") from exc
    return text


def tokenize(text: Union[str, bytes]) -> List[Token]:
    text = _decode(text)
    tokens: List[Token] = []
    line = 1
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        value = match.group()
        if kind == "word":
            kind = "keyword" if value in KEYWORDS else "identifier"
        tokens.append(Token(kind, value, line, match.start()))
        line += value.count("\n")
    return tokens


def detokenize(tokens: Iterable[Token]) -> str:
    return "".join(tok.text for tok in tokens)


def significant_tokens(text: Union[str, bytes]) -> List[Token]:
    """Tokens with whitespace and comments removed."""
    return [tok for tok in tokenize(text) if tok.significant]
