"""Repair and retrieval metrics.

The ranking metrics follow the averaged-precision definitions literally:
each query contributes (1/K) * sum over the top K of a per-rank term, so a
perfect ranker scores H@K = MAP@K = 1 but MRR@K = H_K / K (harmonic number).
A query with fewer than K retrieved items is scored at the depth it has and
reported by ``shallow_queries``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from hdldebug.minihdl.checker import check
from hdldebug.thoughtforge import code_tokens, edit_distance


@dataclass(frozen=True)
class RankedResult:
    query_id: str
    ranked_labels: Sequence[str]
    label: str


@dataclass(frozen=True)
class RepairOutcome:
    problem_id: str
    candidates: Sequence[str]
    passes: Sequence[bool] = field(default=())

    @classmethod
    def checked(cls, problem_id: str, candidates: Sequence[str]) -> "RepairOutcome":
        return cls(problem_id, list(candidates), [not check(c) for c in candidates])


def _require(items, what: str):
    if not items:
        raise ValueError(f"{what} must be non-empty")


def pass_rate(outcomes: Sequence[RepairOutcome]) -> float:
    _require(outcomes, "outcomes")
    return sum(bool(o.passes[0]) for o in outcomes) / len(outcomes)


def pass_at_k(outcomes: Sequence[RepairOutcome], k: int) -> float:
    _require(outcomes, "outcomes")
    if k < 1:
        raise ValueError("k must be >= 1")
    for o in outcomes:
        if len(o.passes) < k:
            raise ValueError(f"{o.problem_id} has {len(o.passes)} samples, fewer than k={k}")
    return sum(any(o.passes[:k]) for o in outcomes) / len(outcomes)


def relative_runtime(times: Sequence[float], baseline: float) -> float:
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    _require(times, "times")
    return (sum(times) / len(times)) / baseline


def _per_query(results: Sequence[RankedResult], K: int, term) -> float:
    _require(results, "results")
    if K < 1:
        raise ValueError("K must be >= 1")
    total = 0.0
    for r in results:
        depth = min(K, len(r.ranked_labels))
        if depth == 0:
            continue
        hits = [lab == r.label for lab in r.ranked_labels[:depth]]
        total += sum(term(hits, k) for k in range(1, depth + 1)) / depth
    return total / len(results)


def hit_at_k(results: Sequence[RankedResult], K: int) -> float:
    return _per_query(results, K, lambda hits, k: float(hits[k - 1]))


def map_at_k(results: Sequence[RankedResult], K: int) -> float:
    return _per_query(results, K, lambda hits, k: hits[k - 1] * sum(hits[:k]) / k)


def mrr_at_k(results: Sequence[RankedResult], K: int) -> float:
    return _per_query(results, K, lambda hits, k: hits[k - 1] / k)


def shallow_queries(results: Iterable[RankedResult], K: int) -> List[str]:
    return [r.query_id for r in results if len(r.ranked_labels) < K]


def edit_distance_report(pairs: Sequence[Tuple[str, str]]) -> Dict[str, float]:
    _require(pairs, "pairs")
    raw, norm = [], []
    for corrected, reference in pairs:
        d = edit_distance(corrected, reference)
        longest = max(len(code_tokens(corrected)), len(code_tokens(reference)))
        raw.append(d)
        norm.append(d / longest if longest else 0.0)
    return {"raw": sum(raw) / len(raw), "normalized": sum(norm) / len(norm)}


def retrieval_report(results: Sequence[RankedResult], ks: Sequence[int]) -> dict:
    return {
        "H": {str(K): hit_at_k(results, K) for K in ks},
        "MAP": {str(K): map_at_k(results, K) for K in ks},
        "MRR": {str(K): mrr_at_k(results, K) for K in ks},
        "shallow": {str(K): shallow_queries(results, K) for K in ks},
    }


def evaluation_report(
    outcomes: Optional[Sequence[RepairOutcome]] = None,
    pairs: Optional[Sequence[Tuple[str, str]]] = None,
    runtime: Optional[Tuple[Sequence[float], float]] = None,
    retrieval: Optional[Tuple[Sequence[RankedResult], Sequence[int]]] = None,
) -> dict:
    """Assemble the JSON report; sections without inputs are null."""
    report: dict = {
        "pass_rate": None,
        "pass_at_k": None,
        "relative_runtime": None,
        "edit_distance": None,
        "retrieval": None,
    }
    if outcomes:
        report["pass_rate"] = pass_rate(outcomes)
        depth = min(len(o.passes) for o in outcomes)
        report["pass_at_k"] = {str(k): pass_at_k(outcomes, k) for k in range(1, depth + 1)}
    if pairs:
        report["edit_distance"] = edit_distance_report(pairs)
    if runtime is not None:
        report["relative_runtime"] = relative_runtime(*runtime)
    if retrieval is not None:
        report["retrieval"] = retrieval_report(*retrieval)
    return report
