"""Smoothed TF-IDF keyword vectors over mini-HDL terms."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from hdldebug.minihdl.tokenizer import tokenize

_TERM_KINDS = ("keyword", "identifier", "number")


def terms(buggy: str, message: str) -> List[str]:
    """Case-sensitive identifier/number/keyword terms of code then message."""
    out = []
    for text in (buggy, message):
        out.extend(t.text for t in tokenize(text) if t.kind in _TERM_KINDS)
    return out


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray  # strictly increasing
    weights: np.ndarray
    dim: int

    def norm(self) -> float:
        return float(np.linalg.norm(self.weights))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.weights
        return out

    def dot(self, other: "SparseVector") -> float:
        common, ia, ib = np.intersect1d(
            self.indices, other.indices, assume_unique=True, return_indices=True
        )
        return float(np.dot(self.weights[ia], other.weights[ib])) if len(common) else 0.0


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Dict[str, int]
    document_frequency: Dict[str, int]
    n_docs: int

    def idf(self, term: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.document_frequency[term])) + 1.0

    def to_dict(self) -> dict:
        vocab = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        return {
            "n_docs": self.n_docs,
            "terms": vocab,
            "df": [self.document_frequency[t] for t in vocab],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TfidfModel":
        vocab = {t: i for i, t in enumerate(d["terms"])}
        return cls(vocab, dict(zip(d["terms"], d["df"])), int(d["n_docs"]))


def fit_tfidf(corpus: Sequence[Tuple[str, str]]) -> TfidfModel:
    if not corpus:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    df: Counter = Counter()
    for buggy, message in corpus:
        df.update(set(terms(buggy, message)))
    vocab = {t: i for i, t in enumerate(sorted(df))}
    return TfidfModel(vocab, dict(df), len(corpus))


def keyword_vector(model: TfidfModel, buggy: str, message: str) -> SparseVector:
    counts = Counter(t for t in terms(buggy, message) if t in model.vocabulary)
    ordered = sorted(counts, key=model.vocabulary.__getitem__)
    indices = np.array([model.vocabulary[t] for t in ordered], dtype=np.int64)
    weights = np.array([counts[t] * model.idf(t) for t in ordered], dtype=np.float64)
    norm = np.linalg.norm(weights)
    if norm > 0:
        weights = weights / norm
    return SparseVector(indices, weights, len(model.vocabulary))
