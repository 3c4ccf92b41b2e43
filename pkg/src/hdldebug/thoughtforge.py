"""Self-guided thought generation and fine-tuning dataset assembly.

For each training instance, L candidate thoughts are sampled with the
correct code visible; each thought is then used to predict the correction
without it, and the thought whose prediction is closest to the ground truth
(token-level edit distance) is kept.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from rapidfuzz.distance import Levenshtein

from hdldebug.knowledge import DocRag, ErrorDb
from hdldebug.llm.prompts import extract_code, prompt_correct, prompt_thought, render_context
from hdldebug.llm.transport import GenRequest, Transport, TransportError, complete
from hdldebug.minihdl.generate import CodeInstance
from hdldebug.minihdl.tokenizer import significant_tokens
from hdldebug.retrieval import Query, SelectionParams, search
from hdldebug.vectorize.index import VectorIndex

log = logging.getLogger(__name__)

SFT_FORMAT = "hdldebug-sft"
SFT_VERSION = 1


def code_tokens(text: str) -> List[str]:
    return [t.text for t in significant_tokens(text)]


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance over tokens, ignoring whitespace and comments."""
    return Levenshtein.distance(code_tokens(a), code_tokens(b))


@dataclass
class ThoughtRecord:
    sample_index: int
    thought: str
    predicted_code: Optional[str] = None
    distance: Optional[int] = None

    def to_journal(self, instance_id: str) -> dict:
        return {
            "instance_id": instance_id,
            "sample_index": self.sample_index,
            "thought": self.thought,
            "predicted_code": self.predicted_code,
            "distance": self.distance,
        }


@dataclass
class TrainingRecord:
    instance_id: str
    buggy: str
    message: str
    doc_rag: DocRag
    code_rag: List[CodeInstance]
    thought: str
    correct: str


class ThoughtGenerationError(TransportError):
    def __init__(self, sample_index: int, partial: List[ThoughtRecord], cause: Exception):
        self.sample_index = sample_index
        self.partial = partial
        super().__init__(f"sample {sample_index} failed: {cause}")


@dataclass(frozen=True)
class ThoughtParams:
    n_thoughts: int = 5
    temperature: float = 0.7
    max_tokens: int = 1024


def gen_thoughts(
    instance: CodeInstance,
    doc_rag: DocRag,
    transport: Transport,
    n_thoughts: int = 5,
    temperature: float = 0.7,
    max_tokens: int = 1024,
) -> List[ThoughtRecord]:
    if n_thoughts < 1:
        raise ValueError("need at least one thought")
    messages = prompt_thought(instance.buggy, instance.message, doc_rag, instance.correct)
    out: List[ThoughtRecord] = []
    for j in range(n_thoughts):
        request = GenRequest(messages, temperature=temperature, max_tokens=max_tokens, sample_seed=j)
        try:
            out.append(ThoughtRecord(j, complete(transport, request)))
        except TransportError as exc:
            raise ThoughtGenerationError(j, list(out), exc) from exc
    return out


def score_thoughts(
    instance: CodeInstance,
    doc_rag: DocRag,
    thoughts: Sequence[ThoughtRecord],
    transport: Transport,
    max_tokens: int = 2048,
) -> List[ThoughtRecord]:
    if not thoughts:
        raise ValueError("no thoughts to score")
    scored = []
    for rec in thoughts:
        messages = prompt_correct(instance.buggy, instance.message, doc_rag, None, rec.thought)
        try:
            reply = complete(transport, GenRequest(messages, temperature=0.0, max_tokens=max_tokens))
        except TransportError as exc:
            raise ThoughtGenerationError(rec.sample_index, scored, exc) from exc
        code = extract_code(reply)
        scored.append(ThoughtRecord(rec.sample_index, rec.thought, code, edit_distance(instance.correct, code)))
    return scored


def select_best(records: Sequence[ThoughtRecord]) -> ThoughtRecord:
    if not records:
        raise ValueError("no thought records to select from")
    return min(records, key=lambda r: (r.distance, r.sample_index))


class Journal:
    """Append-only JSONL of scored thought candidates."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def load(self) -> Dict[str, Dict[int, ThoughtRecord]]:
        done: Dict[str, Dict[int, ThoughtRecord]] = {}
        if not self.path.exists():
            return done
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    row = json.loads(line)
                except json.JSONDecodeError:
                    # torn final line from an interrupted run
                    continue
                rec = ThoughtRecord(row["sample_index"], row["thought"], row["predicted_code"], row["distance"])
                done.setdefault(row["instance_id"], {})[rec.sample_index] = rec
        return done

    def append(self, instance_id: str, records: Sequence[ThoughtRecord]) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
            for rec in records:
                fh.write(json.dumps(rec.to_journal(instance_id), ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()


@dataclass
class BuildResult:
    records: List[TrainingRecord] = field(default_factory=list)
    failures: Dict[str, str] = field(default_factory=dict)
    resumed: int = 0


def build_training_set(
    dataset: Sequence[CodeInstance],
    index: VectorIndex,
    error_db: ErrorDb,
    transport: Transport,
    embedder,
    selection: SelectionParams = SelectionParams(),
    params: ThoughtParams = ThoughtParams(),
    journal: Optional[Journal] = None,
) -> BuildResult:
    """One record per instance; failures are collected, finished work is reused."""
    finished = journal.load() if journal else {}
    result = BuildResult()

    def complete_from_journal(inst: CodeInstance) -> Optional[List[ThoughtRecord]]:
        have = finished.get(inst.id, {})
        if all(j in have for j in range(params.n_thoughts)):
            return [have[j] for j in range(params.n_thoughts)]
        return None

    def work(inst: CodeInstance):
        try:
            bundle = search(index, Query(inst.buggy, inst.message), selection, error_db, embedder, exclude_id=inst.id)
            scored = complete_from_journal(inst)
            fresh = scored is None
            if fresh:
                thoughts = gen_thoughts(
                    inst, bundle.doc_rag, transport, params.n_thoughts, params.temperature, params.max_tokens
                )
                scored = score_thoughts(inst, bundle.doc_rag, thoughts, transport)
            return inst, bundle, scored, fresh, None
        except Exception as exc:  # per-instance failures never abort the batch
            return inst, None, None, False, exc

    with ThreadPoolExecutor(max_workers=max(1, transport.max_in_flight)) as pool:
        for inst, bundle, scored, fresh, exc in pool.map(work, dataset):
            if exc is not None:
                log.warning("instance %s failed: %s", inst.id, exc)
                result.failures[inst.id] = f"{type(exc).__name__}: {exc}"
                continue
            if fresh and journal is not None:
                journal.append(inst.id, scored)
            elif not fresh:
                result.resumed += 1
            best = select_best(scored)
            result.records.append(
                TrainingRecord(
                    instance_id=inst.id,
                    buggy=inst.buggy,
                    message=inst.message,
                    doc_rag=bundle.doc_rag,
                    code_rag=[e.instance for e in bundle.code_rag.entries],
                    thought=best.thought,
                    correct=inst.correct,
                )
            )
    if result.failures:
        log.warning("%d of %d instances failed", len(result.failures), len(dataset))
    return result


def export_sft(records: Sequence[TrainingRecord], out_path: Union[str, Path]) -> int:
    """Write the header line plus one (context, target_thought, target_code) object per record."""
    header = {"format": SFT_FORMAT, "version": SFT_VERSION, "fields": ["context", "target_thought", "target_code"]}
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            row = {
                "context": render_context(rec.buggy, rec.message, rec.doc_rag, rec.code_rag),
                "target_thought": rec.thought,
                "target_code": rec.correct,
            }
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    return len(records)

