"""Two-stage ranker over the vector index.

Stage 1 scores every indexed instance with the hybrid similarity

    sim(q, I) = lam * cos(kw_q, kw_I) + (1 - lam) * cos(sem_q, sem_I) + 1

and keeps the top N. Stage 2 greedily grows a k-subset maximising

    S(D) = sum_{I in D} sim(q, I) + (1/k) * sum_{I in D} dis(I, D)
    dis(I, D) = min_{J in D, J != I} (2 - sim(I, J)),  dis(I, {I}) = 2

taking the full change in S as each step's gain, since adding an element can
lower the diversity term of elements already chosen.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Sequence

import numpy as np

from hdldebug.knowledge import DocRag, ErrorDb, build_doc_rag
from hdldebug.minihdl.generate import CodeInstance
from hdldebug.vectorize.embed import DimensionMismatch
from hdldebug.vectorize.index import VectorIndex, query_vectors
from hdldebug.vectorize.tfidf import SparseVector

log = logging.getLogger(__name__)

EMPTY_SET_DISTANCE = 2.0

PairSim = Callable[[Hashable, Hashable], float]


@dataclass(frozen=True)
class SelectionParams:
    lam: float = 0.5
    stage1_n: int = 50
    k: int = 5

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.stage1_n < 1 or self.k < 1:
            raise ValueError("stage1_n and k must be positive")
        if self.k > self.stage1_n:
            raise ValueError(f"k={self.k} exceeds stage1_n={self.stage1_n}")

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "stage1_n": self.stage1_n, "k": self.k}


def _cosine_sparse(a: SparseVector, b: SparseVector) -> float:
    if a.dim != b.dim:
        raise DimensionMismatch(f"keyword dims differ: {a.dim} vs {b.dim}")
    na, nb = a.norm(), b.norm()
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a.dot(b) / (na * nb), -1.0, 1.0))


def _cosine_dense(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"semantic dims differ: {a.shape} vs {b.shape}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def similarity(
    q_keyword: SparseVector,
    q_semantic: np.ndarray,
    i_keyword: SparseVector,
    i_semantic: np.ndarray,
    lam: float,
) -> float:
    cos_w = _cosine_sparse(q_keyword, i_keyword)
    cos_s = _cosine_dense(q_semantic, i_semantic)
    return lam * cos_w + (1.0 - lam) * cos_s + 1.0


# -- objective and greedy selection over abstract candidates -----------------


def set_distance(item: Hashable, selected: Sequence[Hashable], pair_sim: PairSim) -> float:
    if item not in selected:
        raise ValueError(f"{item!r} is not in the selected set")
    others = [j for j in selected if j != item]
    if not others:
        return EMPTY_SET_DISTANCE
    return min(2.0 - pair_sim(item, j) for j in others)


def objective(
    selected: Sequence[Hashable], query_sim: Mapping[Hashable, float], pair_sim: PairSim, k: int
) -> float:
    if not selected:
        raise ValueError("objective is undefined for an empty set")
    relevance = sum(query_sim[i] for i in selected)
    diversity = sum(set_distance(i, selected, pair_sim) for i in selected)
    return relevance + diversity / k


def greedy_order_matrix(
    query_sim: np.ndarray, pair: np.ndarray, k: int
) -> List[int]:
    """Greedy selection over positions 0..n-1; ties go to the lowest position.

    The gain of each candidate is the full change in S, including the drop in
    dis(J, D) of already-chosen J, evaluated for all candidates at once.
    """
    n = len(query_sim)
    dist = 2.0 - np.asarray(pair, dtype=np.float64)
    rel = np.asarray(query_sim, dtype=np.float64)
    chosen: List[int] = []
    mins = np.empty(0)  # dis(J, D) for chosen J
    available = np.ones(n, dtype=bool)
    for _ in range(min(k, n)):
        if chosen:
            to_chosen = dist[chosen, :]  # (m, n)
            own = to_chosen.min(axis=0)
            others = np.minimum(mins[:, None], to_chosen).sum(axis=0)
        else:
            own = np.full(n, EMPTY_SET_DISTANCE)
            others = np.zeros(n)
        total = rel[chosen].sum() + rel + (others + own) / k
        total[~available] = -np.inf
        best = int(np.argmax(total))  # first maximum, i.e. lowest position
        if chosen:
            mins = np.minimum(mins, dist[chosen, best])
        chosen.append(best)
        mins = np.append(mins, own[best])
        available[best] = False
    return chosen


def greedy_order(
    candidates: Sequence[Hashable], query_sim: Mapping[Hashable, float], pair_sim: PairSim, k: int
) -> List[Hashable]:
    """Pick min(k, len(candidates)) items by largest marginal gain, ties to lowest id."""
    pool = sorted(set(candidates))
    q = np.array([query_sim[c] for c in pool], dtype=np.float64)
    pair = np.array([[2.0 if a == b else pair_sim(a, b) for b in pool] for a in pool], dtype=np.float64)
    return [pool[i] for i in greedy_order_matrix(q, pair, k)]


def cached_pair_sim(fn: PairSim) -> PairSim:
    cache: Dict[tuple, float] = {}

    def pair(a, b):
        key = (a, b) if a <= b else (b, a)
        if key not in cache:
            cache[key] = fn(*key)
        return cache[key]

    return pair


# -- index-backed stages -----------------------------------------------------


@dataclass(frozen=True)
class ScoredInstance:
    id: str
    sim: float
    rank: int


@dataclass(frozen=True)
class CodeRagEntry:
    instance: CodeInstance
    sim: float

    def to_dict(self) -> dict:
        i = self.instance
        return {"id": i.id, "sim": self.sim, "buggy": i.buggy, "message": i.message, "correct": i.correct}


@dataclass(frozen=True)
class CodeRag:
    entries: List[CodeRagEntry] = field(default_factory=list)
    clamped: bool = False

    @property
    def ids(self) -> List[str]:
        return [e.instance.id for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Query:
    buggy: str
    message: str


def stage1_scores(index: VectorIndex, q_keyword: SparseVector, q_semantic: np.ndarray, lam: float) -> np.ndarray:
    """Hybrid similarity of the query against every indexed instance."""
    if q_keyword.dim != len(index.tfidf.vocabulary):
        raise DimensionMismatch("query keyword vector does not match index vocabulary")
    if q_semantic.shape[0] != index.dense.shape[1]:
        raise DimensionMismatch("query semantic vector does not match index dimension")
    kw = index.keyword_matrix
    q = q_keyword.to_dense()
    row_norms = np.sqrt(np.asarray(kw.multiply(kw).sum(axis=1)).ravel())
    qn = np.linalg.norm(q)
    denom = row_norms * qn
    dots = kw @ q
    cos_w = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)

    dense = index.dense.astype(np.float64)
    qs = np.asarray(q_semantic, dtype=np.float64)
    d_norms = np.linalg.norm(dense, axis=1) * np.linalg.norm(qs)
    d_dots = dense @ qs
    cos_s = np.divide(d_dots, d_norms, out=np.zeros_like(d_dots), where=d_norms > 0)
    return lam * np.clip(cos_w, -1, 1) + (1 - lam) * np.clip(cos_s, -1, 1) + 1.0


def stage1_topn(
    index: VectorIndex,
    q_keyword: SparseVector,
    q_semantic: np.ndarray,
    params: SelectionParams,
    exclude_id: Optional[str] = None,
) -> List[ScoredInstance]:
    if len(index) == 0:
        return []
    scores = stage1_scores(index, q_keyword, q_semantic, params.lam)
    order = sorted(
        (i for i in range(len(index)) if index.ids[i] != exclude_id),
        key=lambda i: (-scores[i], index.ids[i]),
    )
    return [
        ScoredInstance(index.ids[i], float(scores[i]), rank)
        for rank, i in enumerate(order[: params.stage1_n])
    ]


def index_pair_sim(index: VectorIndex, lam: float) -> PairSim:
    pos = {iid: n for n, iid in enumerate(index.ids)}

    def pair(a: str, b: str) -> float:
        i, j = pos[a], pos[b]
        return similarity(index.keyword[i], index.dense[i], index.keyword[j], index.dense[j], lam)

    return cached_pair_sim(pair)


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)


def index_pair_matrix(index: VectorIndex, rows: Sequence[int], lam: float) -> np.ndarray:
    """Pairwise hybrid similarity among the given index rows."""
    kw = _unit_rows(index.keyword_matrix[list(rows)].toarray().astype(np.float64))
    dense = _unit_rows(index.dense[list(rows)].astype(np.float64))
    cos_w = np.clip(kw @ kw.T, -1.0, 1.0)
    cos_s = np.clip(dense @ dense.T, -1.0, 1.0)
    return lam * cos_w + (1.0 - lam) * cos_s + 1.0


def greedy_select(candidates: Sequence[ScoredInstance], index: VectorIndex, params: SelectionParams) -> CodeRag:
    clamped = params.k > len(candidates)
    if clamped:
        log.warning("k=%d exceeds %d candidates; returning all", params.k, len(candidates))
    pool = sorted(candidates, key=lambda c: c.id)
    rows = [index.position(c.id) for c in pool]
    q = np.array([c.sim for c in pool], dtype=np.float64)
    picked = greedy_order_matrix(q, index_pair_matrix(index, rows, params.lam), params.k)
    return CodeRag([CodeRagEntry(index.instances[rows[i]], pool[i].sim) for i in picked], clamped)


@dataclass(frozen=True)
class RagBundle:
    doc_rag: DocRag
    code_rag: CodeRag
    params: SelectionParams

    def to_dict(self) -> dict:
        return {
            "doc_rag": self.doc_rag.to_dict(),
            "code_rag": [e.to_dict() for e in self.code_rag.entries],
            "params": self.params.to_dict(),
            "clamped": self.code_rag.clamped,
        }


def search(
    index: Optional[VectorIndex],
    query: Query,
    params: SelectionParams,
    error_db: ErrorDb,
    embedder=None,
    exclude_id: Optional[str] = None,
) -> RagBundle:
    doc_rag = build_doc_rag(query.message, error_db)
    if index is None or len(index) == 0:
        return RagBundle(doc_rag, CodeRag(), params)
    q_keyword, q_semantic = query_vectors(index, embedder, query.buggy, query.message)
    candidates = stage1_topn(index, q_keyword, q_semantic, params, exclude_id)
    return RagBundle(doc_rag, greedy_select(candidates, index, params), params)
