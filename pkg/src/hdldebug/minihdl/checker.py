"""Parser and rule checker standing in for the HDL compiler.

The checker never raises on malformed input: syntax problems become
``S-error-1`` diagnostics and parsing resumes at the next statement
boundary so that semantic rules still run on whatever was recovered.

Rule table (code -> condition):

    S-error-1   malformed statement, missing ';', missing/extra endmodule
    T-error-2   a clock name declared more than once (reported on the repeat)
    T-error-4   ``init`` of a probe with value 0
    T-error-18  ``assign`` placed before a later declaration
    T-error-27  ``pulse`` of a name that is not declared
    C-error-1   undeclared identifier used in ``assign`` or ``init``
    C-error-2   ``assign`` drives an input port, or the module has no output
    P-error-8   wire or output port that no ``assign`` drives
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

from hdldebug.minihdl.tokenizer import DECL_KEYWORDS, Token, significant_tokens

STATEMENT_KEYWORDS = frozenset(DECL_KEYWORDS) | {"assign", "pulse", "init"}
_UNARY_OPS = frozenset("~!-")
_BINARY_OPS = frozenset("&|^+-*")

# Descriptions are kept byte-identical to the shipped error database.
DESCRIPTIONS: Dict[str, str] = {
    "S-error-1": "Script syntax error",
    "T-error-2": "Clock definition duplicate",
    "T-error-4": "Probe initilized as 0 in **",
    "T-error-18": "Assignment in non-initialization stage",
    "T-error-27": "Pulse non-exist variable",
    "C-error-1": "Netlist not correctly obtain defined signal",
    "C-error-2": "Not define top port as output",
    "P-error-8": "Definition lack of shift",
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    line: int
    description: str

    def format(self) -> str:
        return f"{self.code} at line {self.line}: {self.description}"


def _diag(code: str, line: int) -> Diagnostic:
    return Diagnostic(code, line, DESCRIPTIONS[code])


def format_message(diagnostics: Sequence[Diagnostic]) -> str:
    return "\n".join(d.format() for d in diagnostics)


@dataclass
class Port:
    direction: str
    name: str
    dir_token: Token
    name_token: Token


@dataclass
class Statement:
    kind: str  # "decl", "assign", "pulse", "init"
    keyword: Token
    target: Optional[Token] = None
    expr: List[Token] = field(default_factory=list)
    value: Optional[Token] = None
    semicolon: Optional[Token] = None
    last: Optional[Token] = None

    @property
    def line(self) -> int:
        return self.keyword.line

    @property
    def name(self) -> Optional[str]:
        return self.target.text if self.target is not None else None

    @property
    def end(self) -> int:
        closing = self.semicolon or self.last or self.keyword
        return closing.end


@dataclass
class Module:
    name: Optional[str] = None
    header: Optional[Token] = None
    header_semicolon: Optional[Token] = None
    ports: List[Port] = field(default_factory=list)
    statements: List[Statement] = field(default_factory=list)
    endmodule: Optional[Token] = None
    syntax_lines: List[int] = field(default_factory=list)

    def declared_names(self) -> set:
        names = {p.name for p in self.ports}
        names.update(s.name for s in self.statements if s.kind == "decl" and s.name)
        return names

    def decls(self, keyword: Optional[str] = None) -> List[Statement]:
        return [
            s
            for s in self.statements
            if s.kind == "decl" and (keyword is None or s.keyword.text == keyword)
        ]

    def of_kind(self, kind: str) -> List[Statement]:
        return [s for s in self.statements if s.kind == kind]


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.pos = 0
        self.mod = Module()

    # -- cursor helpers -------------------------------------------------
    def peek(self) -> Optional[Token]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def accept(self, text: str) -> Optional[Token]:
        tok = self.peek()
        if tok is not None and tok.text == text:
            return self.advance()
        return None

    def error(self, line: int) -> None:
        self.mod.syntax_lines.append(line)

    def error_here(self, fallback: Optional[Token]) -> None:
        # Missing terminators are reported on the line of the last token read.
        if fallback is not None:
            self.error(fallback.line)
        elif self.peek() is not None:
            self.error(self.peek().line)
        else:
            self.error(self.toks[-1].line if self.toks else 1)

    def at_boundary(self) -> bool:
        tok = self.peek()
        return tok is None or (
            tok.kind == "keyword" and (tok.text in STATEMENT_KEYWORDS or tok.text == "endmodule")
        )

    def recover(self) -> None:
        while not self.at_boundary():
            if self.advance().text == ";":
                return

    # -- grammar --------------------------------------------------------
    def parse(self) -> Module:
        self.parse_header()
        while True:
            tok = self.peek()
            if tok is None:
                self.error(self.toks[-1].line if self.toks else 1)
                break
            if tok.text == "endmodule" and tok.kind == "keyword":
                self.mod.endmodule = self.advance()
                break
            if tok.kind == "keyword" and tok.text in STATEMENT_KEYWORDS:
                self.parse_statement()
            else:
                self.error(tok.line)
                self.advance()
                self.recover()
        trailing = self.peek()
        if trailing is not None:
            self.error(trailing.line)
        return self.mod

    def parse_header(self) -> None:
        head = self.accept("module")
        if head is None:
            self.error_here(None)
            self.recover()
            return
        self.mod.header = head
        last = head
        name = self.peek()
        if name is None or name.kind != "identifier":
            self.error_here(last)
            self.recover()
            return
        self.mod.name = self.advance().text
        last = name
        if not self.accept("("):
            self.error_here(last)
            self.recover()
            return
        if self.accept(")") is None:
            while True:
                direction = self.peek()
                if direction is None or direction.text not in ("input", "output"):
                    self.error_here(last)
                    self.recover()
                    return
                self.advance()
                pname = self.peek()
                if pname is None or pname.kind != "identifier":
                    self.error_here(direction)
                    self.recover()
                    return
                self.advance()
                self.mod.ports.append(Port(direction.text, pname.text, direction, pname))
                last = pname
                if self.accept(","):
                    continue
                closing = self.accept(")")
                if closing is None:
                    self.error_here(last)
                    self.recover()
                    return
                last = closing
                break
        semi = self.accept(";")
        if semi is None:
            self.error_here(last)
            if not self.at_boundary():
                self.recover()
        self.mod.header_semicolon = semi

    def parse_statement(self) -> None:
        kw = self.advance()
        stmt = Statement(kind="decl" if kw.text in DECL_KEYWORDS else kw.text, keyword=kw)
        stmt.last = kw
        target = self.peek()
        if target is None or target.kind != "identifier":
            self.error_here(kw)
            self.recover()
            return
        stmt.target = self.advance()
        stmt.last = stmt.target
        if stmt.kind in ("assign", "init"):
            eq = self.accept("=")
            if eq is None:
                self.error_here(stmt.target)
                self.recover()
                return
            stmt.last = eq
            if stmt.kind == "assign":
                start = self.pos
                if not self.parse_expr():
                    self.error_here(self.toks[self.pos - 1])
                    self.recover()
                    return
                stmt.expr = self.toks[start : self.pos]
                stmt.last = stmt.expr[-1]
            else:
                value = self.peek()
                if value is None or value.kind != "number":
                    self.error_here(eq)
                    self.recover()
                    return
                stmt.value = self.advance()
                stmt.last = stmt.value
        stmt.semicolon = self.accept(";")
        if stmt.semicolon is None:
            self.error_here(stmt.last)
            if not self.at_boundary():
                self.recover()
        self.mod.statements.append(stmt)

    def parse_expr(self) -> bool:
        if not self.parse_unary():
            return False
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "punct" or tok.text not in _BINARY_OPS:
                return True
            self.advance()
            if not self.parse_unary():
                return False

    def parse_unary(self) -> bool:
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "punct" and tok.text in _UNARY_OPS:
                self.advance()
                continue
            break
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind in ("identifier", "number"):
            self.advance()
            return True
        if tok.text == "(":
            self.advance()
            if not self.parse_expr():
                return False
            return self.accept(")") is not None
        return False


def parse(source: Union[str, bytes]) -> Module:
    return _Parser(significant_tokens(source)).parse()


def check(source: Union[str, bytes]) -> List[Diagnostic]:
    """Run every rule over ``source``; ``[]`` means the file is clean."""
    mod = parse(source)
    diags = [_diag("S-error-1", line) for line in mod.syntax_lines]
    declared = mod.declared_names()
    port_dirs = {p.name: p.direction for p in mod.ports}

    seen_clocks: set = set()
    for stmt in mod.decls("clock"):
        if stmt.name in seen_clocks:
            diags.append(_diag("T-error-2", stmt.line))
        seen_clocks.add(stmt.name)

    probes = {s.name for s in mod.decls("probe")}
    for stmt in mod.of_kind("init"):
        if stmt.name not in declared:
            diags.append(_diag("C-error-1", stmt.line))
        elif stmt.name in probes and stmt.value is not None and int(stmt.value.text) == 0:
            diags.append(_diag("T-error-4", stmt.line))

    last_decl = max((i for i, s in enumerate(mod.statements) if s.kind == "decl"), default=-1)
    for i, stmt in enumerate(mod.statements):
        if stmt.kind == "assign" and i < last_decl:
            diags.append(_diag("T-error-18", stmt.line))

    for stmt in mod.of_kind("pulse"):
        if stmt.name not in declared:
            diags.append(_diag("T-error-27", stmt.line))

    driven = set()
    for stmt in mod.of_kind("assign"):
        driven.add(stmt.name)
        used = [stmt.target] + [t for t in stmt.expr if t.kind == "identifier"]
        if any(t.text not in declared for t in used):
            diags.append(_diag("C-error-1", stmt.line))
        if port_dirs.get(stmt.name) == "input":
            diags.append(_diag("C-error-2", stmt.line))

    if mod.header is not None and mod.name is not None:
        if not any(p.direction == "output" for p in mod.ports):
            diags.append(_diag("C-error-2", mod.header.line))

    for port in mod.ports:
        if port.direction == "output" and port.name not in driven:
            diags.append(_diag("P-error-8", port.name_token.line))
    for stmt in mod.decls("wire"):
        if stmt.name not in driven:
            diags.append(_diag("P-error-8", stmt.line))

    return sorted(diags, key=lambda d: (d.line, d.code))
