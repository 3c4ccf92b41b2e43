"""Fault injection by single-site source edits.

Each operator knows which checker rule it is meant to trip. ``mutate``
lists every applicable site, picks one with a Philox stream keyed by the
caller's seed, and returns the mutant together with enough information to
undo the edit byte-for-byte.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from hdldebug.minihdl.checker import Module, Statement, parse
from hdldebug.minihdl.tokenizer import Token, tokenize


class NotApplicable(LookupError):
    """The operator found no site in this source."""


class CorruptRecord(ValueError):
    """A mutation record does not match the text it is applied to."""


@dataclass(frozen=True)
class Edit:
    start: int  # character offsets
    end: int
    replacement: str


@dataclass(frozen=True)
class MutationOp:
    id: str
    error_code: str
    applicability: str
    sites: Callable[[str, Module, List[Token]], List[Edit]]


@dataclass(frozen=True)
class MutationRecord:
    op_id: str
    site: Tuple[int, int]  # UTF-8 byte span in the original
    original_text: str
    replacement_text: str
    rng_seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["site"] = list(self.site)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MutationRecord":
        return cls(
            op_id=d["op_id"],
            site=(int(d["site"][0]), int(d["site"][1])),
            original_text=d["original_text"],
            replacement_text=d["replacement_text"],
            rng_seed=int(d["rng_seed"]),
        )


# -- site helpers ---------------------------------------------------------


def _line_start(text: str, offset: int) -> int:
    return text.rfind("\n", 0, offset) + 1


def _indent_before(text: str, offset: int) -> Optional[str]:
    """Leading whitespace of the line holding ``offset``; None if code precedes it."""
    prefix = text[_line_start(text, offset) : offset]
    return prefix if prefix.strip() == "" else None


def _insert_before(text: str, offset: int, snippet: str) -> Edit:
    indent = _indent_before(text, offset)
    if indent is None:
        return Edit(offset, offset, snippet + " ")
    body_indent = indent or "    "
    at = _line_start(text, offset)
    return Edit(at, at, body_indent + snippet + "\n")


def _stmt_text(text: str, stmt: Statement) -> str:
    return text[stmt.keyword.offset : stmt.end]


def _fresh_name(base: str, tokens: List[Token]) -> str:
    taken = {t.text for t in tokens if t.kind in ("identifier", "keyword")}
    if base not in taken:
        return base
    n = 1
    while f"{base}_{n}" in taken:
        n += 1
    return f"{base}_{n}"


# -- operators --------------------------------------------------------------


def _drop_semicolon(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    # body statements only; the header's ';' is not a statement terminator
    return [Edit(s.semicolon.offset, s.semicolon.end, "") for s in mod.statements if s.semicolon is not None]


def _duplicate_clock_decl(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    edits = []
    for stmt in mod.decls("clock"):
        if stmt.semicolon is None:
            continue
        indent = _indent_before(text, stmt.keyword.offset)
        sep = "\n" + indent if indent is not None else " "
        edits.append(Edit(stmt.end, stmt.end, sep + _stmt_text(text, stmt)))
    return edits


def _probe_init_zero(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    probes = {s.name for s in mod.decls("probe")}
    return [
        Edit(s.value.offset, s.value.end, "0")
        for s in mod.of_kind("init")
        if s.name in probes and s.value is not None and int(s.value.text) != 0
    ]


def _stray_assignment(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    decls = mod.decls()
    if not decls:
        return []
    first = decls[0].keyword.offset
    return [
        _insert_before(text, first, _stmt_text(text, s))
        for s in mod.of_kind("assign")
        if s.semicolon is not None
    ]


def _pulse_undeclared(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    if mod.endmodule is None:
        return []
    ghost = _fresh_name("ghost", tokens)
    return [_insert_before(text, mod.endmodule.offset, f"pulse {ghost};")]


def _rename_identifier_use(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    edits = []
    for stmt in mod.of_kind("assign"):
        for tok in stmt.expr:
            if tok.kind == "identifier":
                edits.append(Edit(tok.offset, tok.end, _fresh_name(tok.text + "_x", tokens)))
    return edits


def _demote_top_output(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    driven = {s.name for s in mod.of_kind("assign")}
    return [
        Edit(p.dir_token.offset, p.dir_token.end, "input")
        for p in mod.ports
        if p.direction == "output" and p.name in driven
    ]


def _delete_assignment(text: str, mod: Module, tokens: List[Token]) -> List[Edit]:
    needs_driver = {p.name for p in mod.ports if p.direction == "output"}
    needs_driver.update(s.name for s in mod.decls("wire"))
    assigns = mod.of_kind("assign")
    drivers: Dict[str, int] = {}
    for s in assigns:
        drivers[s.name] = drivers.get(s.name, 0) + 1
    edits = []
    for s in assigns:
        if s.semicolon is None or s.name not in needs_driver or drivers[s.name] != 1:
            continue
        start, end = s.keyword.offset, s.end
        nl = text.find("\n", end)
        line_end = len(text) if nl < 0 else nl + 1
        if _indent_before(text, start) is not None and text[end:line_end].strip() == "":
            start, end = _line_start(text, start), line_end
        edits.append(Edit(start, end, ""))
    return edits


OPS: Dict[str, MutationOp] = {
    op.id: op
    for op in [
        MutationOp("drop_semicolon", "S-error-1", "a ';'-terminated body statement", _drop_semicolon),
        MutationOp(
            "duplicate_clock_decl",
            "T-error-2",
            "a terminated 'clock' declaration",
            _duplicate_clock_decl,
        ),
        MutationOp(
            "probe_init_zero",
            "T-error-4",
            "an 'init' of a declared probe with a non-zero value",
            _probe_init_zero,
        ),
        MutationOp(
            "stray_assignment",
            "T-error-18",
            "at least one declaration and one terminated 'assign'",
            _stray_assignment,
        ),
        MutationOp("pulse_undeclared", "T-error-27", "an 'endmodule' token", _pulse_undeclared),
        MutationOp(
            "rename_identifier_use",
            "C-error-1",
            "an identifier on the right-hand side of an 'assign'",
            _rename_identifier_use,
        ),
        MutationOp(
            "demote_top_output",
            "C-error-2",
            "an output port driven by an 'assign'",
            _demote_top_output,
        ),
        MutationOp(
            "delete_assignment",
            "P-error-8",
            "the only 'assign' driving a wire or output port",
            _delete_assignment,
        ),
    ]
}


def get_op(op_id: str) -> MutationOp:
    try:
        return OPS[op_id]
    except KeyError:
        raise KeyError(f"unknown mutation op {op_id!r}; known: {sorted(OPS)}") from None


def _byte_offset(text: str, char_offset: int) -> int:
    return len(text[:char_offset].encode("utf-8"))


def mutate(source: str, op: MutationOp, rng_seed: int) -> Tuple[str, MutationRecord]:
    """Apply ``op`` at one site chosen by ``rng_seed``.

    Raises NotApplicable when the operator has no site in ``source``.
    """
    tokens = tokenize(source)
    edits = op.sites(source, parse(source), tokens)
    if not edits:
        raise NotApplicable(f"{op.id}: no applicable site")
    rng = np.random.Generator(np.random.Philox(key=rng_seed & (2**64 - 1)))
    edit = edits[int(rng.integers(len(edits)))]
    mutant = source[: edit.start] + edit.replacement + source[edit.end :]
    record = MutationRecord(
        op_id=op.id,
        site=(_byte_offset(source, edit.start), _byte_offset(source, edit.end)),
        original_text=source[edit.start : edit.end],
        replacement_text=edit.replacement,
        rng_seed=rng_seed,
    )
    return mutant, record


def revert(mutant: str, record: MutationRecord) -> str:
    data = mutant.encode("utf-8")
    start = record.site[0]
    replacement = record.replacement_text.encode("utf-8")
    end = start + len(replacement)
    if start < 0 or end > len(data) or data[start:end] != replacement:
        raise CorruptRecord(
            f"record for {record.op_id} does not match mutant at byte {start}"
        )
    restored = data[:start] + record.original_text.encode("utf-8") + data[end:]
    return restored.decode("utf-8")
