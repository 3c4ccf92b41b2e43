"""Independent reference implementations used only by the tests."""

import math
import re

_COMMENT = re.compile(r"//[^\n]*")
_TERM = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|[0-9]+")


def oracle_terms(buggy, message):
    out = []
    for text in (buggy, message):
        out += _TERM.findall(_COMMENT.sub(" ", text))
    return out


def oracle_tfidf(corpus):
    """Brute force: w(t, d) = tf * (ln((1+N)/(1+df)) + 1), then L2 over each document."""
    docs = [oracle_terms(b, m) for b, m in corpus]
    n = len(docs)
    vocab = sorted({t for d in docs for t in d})
    vectors = []
    for d in docs:
        raw = {}
        for t in vocab:
            tf = sum(1 for x in d if x == t)
            if tf:
                df = sum(1 for other in docs if t in other)
                raw[t] = tf * (math.log((1 + n) / (1 + df)) + 1)
        norm = math.sqrt(sum(v * v for v in raw.values()))
        vectors.append({t: v / norm for t, v in raw.items()} if norm else {})
    return vocab, vectors


def dp_edit_distance(a, b):
    """Classic quadratic Levenshtein table."""
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1]))
        prev = cur
    return prev[-1]


def exhaustive_best(ids, query_sim, pair_sim, k, objective):
    from itertools import combinations

    return max(objective(list(c), query_sim, pair_sim, k) for c in combinations(ids, min(k, len(ids))))
