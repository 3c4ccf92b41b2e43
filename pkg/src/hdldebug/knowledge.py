"""Error database and document retrieval keyed by error codes."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Union

ERROR_CODE_RE = re.compile(r"[A-Za-z]-error-[0-9]+")


class ErrorDbError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorRecord:
    error_id: str
    description: str
    root_reason: str
    solution: str

    def __post_init__(self):
        for name in ("error_id", "description", "root_reason", "solution"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise ErrorDbError(f"field {name!r} is empty")


class ErrorDb:
    """Immutable mapping from error id to record, in file order."""

    def __init__(self, records: List[ErrorRecord] = ()):
        self._records: Dict[str, ErrorRecord] = {}
        for rec in records:
            if rec.error_id in self._records:
                raise ErrorDbError(f"duplicate error_id {rec.error_id!r}")
            self._records[rec.error_id] = rec

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[ErrorRecord]:
        return iter(self._records.values())

    def __contains__(self, error_id: str) -> bool:
        return error_id in self._records

    def get(self, error_id: str) -> Optional[ErrorRecord]:
        return self._records.get(error_id)


def load_error_db(path: Union[str, Path]) -> ErrorDb:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                rec = ErrorRecord(
                    error_id=row["error_id"],
                    description=row["description"],
                    root_reason=row["root_reason"],
                    solution=row["solution"],
                )
            except KeyError as exc:
                raise ErrorDbError(f"{path} line {lineno}: missing field {exc}") from exc
            except (json.JSONDecodeError, TypeError, ErrorDbError) as exc:
                raise ErrorDbError(f"{path} line {lineno}: {exc}") from exc
            records.append(rec)
    try:
        return ErrorDb(records)
    except ErrorDbError as exc:
        raise ErrorDbError(f"{path}: {exc}") from None


def default_error_db() -> ErrorDb:
    with resources.as_file(resources.files("hdldebug") / "data" / "errors.jsonl") as path:
        return load_error_db(path)


def parse_error_codes(message: str) -> List[str]:
    """Error codes in order of first appearance, without repeats."""
    seen: Dict[str, None] = {}
    for match in ERROR_CODE_RE.finditer(message):
        seen.setdefault(match.group(), None)
    return list(seen)


@dataclass(frozen=True)
class DocRag:
    entries: List[ErrorRecord] = field(default_factory=list)
    unknown_codes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "entries": [asdict(e) for e in self.entries],
            "unknown_codes": list(self.unknown_codes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DocRag":
        return cls([ErrorRecord(**e) for e in d["entries"]], list(d["unknown_codes"]))


def build_doc_rag(message: str, db: ErrorDb) -> DocRag:
    entries, unknown = [], []
    for code in parse_error_codes(message):
        rec = db.get(code)
        if rec is None:
            unknown.append(code)
        else:
            entries.append(rec)
    return DocRag(entries, unknown)
