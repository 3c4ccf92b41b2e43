"""Reverse-engineering dataset generation: correct seeds in, (buggy, message, correct) out."""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from hdldebug.minihdl.checker import Diagnostic, check, format_message
from hdldebug.minihdl.mutate import MutationOp, MutationRecord, NotApplicable, mutate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str

    @classmethod
    def read(cls, path: Path, root: Optional[Path] = None) -> "SourceFile":
        name = path.relative_to(root).as_posix() if root else path.name
        return cls(name, path.read_bytes().decode("utf-8"))


@dataclass(frozen=True)
class CodeInstance:
    id: str
    buggy: str
    message: str
    correct: str
    label: str
    record: MutationRecord

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "buggy": self.buggy,
            "message": self.message,
            "correct": self.correct,
            "label": self.label,
            "record": self.record.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeInstance":
        return cls(
            id=d["id"],
            buggy=d["buggy"],
            message=d["message"],
            correct=d["correct"],
            label=d["label"],
            record=MutationRecord.from_dict(d["record"]),
        )


class RejectedSeed(ValueError):
    def __init__(self, path: str, diagnostics: Sequence[Diagnostic]):
        self.path = path
        self.diagnostics = list(diagnostics)
        super().__init__(f"seed {path} fails check:\n{format_message(self.diagnostics)}")


def task_seed_stream(rng_seed: int, path: str, op_id: str) -> np.random.Generator:
    """Independent Philox stream per (run seed, seed file, operator)."""
    key = hashlib.blake2b(f"{rng_seed}\0{path}\0{op_id}".encode(), digest_size=16).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(key, "little")))


def _instance_id(path: str, op_id: str, sample: int) -> str:
    stem = path[: -len(".mhdl")] if path.endswith(".mhdl") else path
    return f"{stem}.{op_id}.{sample}"


def generate_dataset(
    seeds: Sequence[SourceFile],
    per_seed: int,
    ops: Sequence[MutationOp],
    rng_seed: int,
    stats: Optional[Counter] = None,
) -> List[CodeInstance]:
    """Mutate every seed with every op, ``per_seed`` draws per (seed, op) pair.

    Mutants that pass the checker, or fail without the op's target code,
    are dropped and counted in ``stats`` rather than retried. Repeated
    draws landing on the same site yield one instance.
    """
    if per_seed < 1:
        raise ValueError("per_seed must be >= 1")
    for seed in seeds:
        diags = check(seed.text)
        if diags:
            raise RejectedSeed(seed.path, diags)

    stats = stats if stats is not None else Counter()
    out: List[CodeInstance] = []
    for seed in seeds:
        for op in ops:
            stream = task_seed_stream(rng_seed, seed.path, op.id)
            seen = set()
            for sample in range(per_seed):
                task_seed = int(stream.integers(0, 2**63, dtype=np.int64))
                try:
                    buggy, record = mutate(seed.text, op, task_seed)
                except NotApplicable:
                    stats["not_applicable"] += 1
                    break
                if buggy in seen:
                    stats["duplicate"] += 1
                    continue
                seen.add(buggy)
                diags = check(buggy)
                if not diags:
                    stats["accidental_pass"] += 1
                    continue
                if op.error_code not in {d.code for d in diags}:
                    stats["off_target"] += 1
                    continue
                out.append(
                    CodeInstance(
                        id=_instance_id(seed.path, op.id, sample),
                        buggy=buggy,
                        message=format_message(diags),
                        correct=seed.text,
                        label=op.id,
                        record=record,
                    )
                )
                stats["emitted"] += 1
    log.info("generated %d instances (%s)", len(out), dict(stats))
    return out


def dump_jsonl(instances: Iterable[CodeInstance], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def load_jsonl(path: Path) -> List[CodeInstance]:
    with open(path, encoding="utf-8") as fh:
        return [CodeInstance.from_dict(json.loads(line)) for line in fh if line.strip()]


def load_seed_dir(directory: Path) -> List[SourceFile]:
    return [SourceFile.read(p, directory) for p in sorted(directory.glob("*.mhdl"))]
