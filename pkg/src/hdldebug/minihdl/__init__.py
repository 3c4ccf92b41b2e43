"""Mini-HDL: tokenizer, rule checker and fault-injection engine."""

from hdldebug.minihdl.checker import DESCRIPTIONS, Diagnostic, check, format_message, parse
from hdldebug.minihdl.generate import (
    CodeInstance,
    RejectedSeed,
    SourceFile,
    dump_jsonl,
    generate_dataset,
    load_jsonl,
    load_seed_dir,
)
from hdldebug.minihdl.mutate import (
    OPS,
    CorruptRecord,
    MutationOp,
    MutationRecord,
    NotApplicable,
    get_op,
    mutate,
    revert,
)
from hdldebug.minihdl.tokenizer import InputEncodingError, Token, detokenize, tokenize

__all__ = [
    "DESCRIPTIONS",
    "OPS",
    "CodeInstance",
    "CorruptRecord",
    "Diagnostic",
    "InputEncodingError",
    "MutationOp",
    "MutationRecord",
    "NotApplicable",
    "RejectedSeed",
    "SourceFile",
    "Token",
    "check",
    "detokenize",
    "dump_jsonl",
    "format_message",
    "generate_dataset",
    "get_op",
    "load_jsonl",
    "load_seed_dir",
    "mutate",
    "parse",
    "revert",
    "tokenize",
]
