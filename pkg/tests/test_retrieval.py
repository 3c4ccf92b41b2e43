import itertools
import logging
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdldebug.knowledge import default_error_db
from hdldebug.retrieval import (
    Query,
    SelectionParams,
    greedy_order,
    objective,
    search,
    set_distance,
    similarity,
    stage1_topn,
)
from hdldebug.vectorize import HashEmbedder, build_index, query_vectors
from hdldebug.vectorize.tfidf import SparseVector
from oracles import exhaustive_best


def table(d):
    def pair(a, b):
        return d[(a, b)] if (a, b) in d else d[(b, a)]

    return pair


def naive_greedy(ids, q, pair, k):
    chosen = []
    for _ in range(min(k, len(ids))):
        best = None
        for c in sorted(set(ids) - set(chosen)):
            val = objective(chosen + [c], q, pair, k)
            if best is None or val > best[0]:
                best = (val, c)
        chosen.append(best[1])
    return chosen


def sv(weights):
    w = np.asarray(weights, dtype=float)
    idx = np.nonzero(w)[0]
    return SparseVector(idx, w[idx], len(w))


def test_similarity_examples():
    kw, sem = sv([1, 2, 0]), np.array([0.3, 0.4])
    assert similarity(kw, sem, kw, sem, 0.5) == pytest.approx(2.0)
    assert similarity(sv([1, 0]), np.array([1.0, 0]), sv([0, 1]), np.array([0, 1.0]), 0.5) == pytest.approx(1.0)
    # cos_w = 0.5 at 60 degrees
    a, b = sv([1, 0]), sv([0.5, np.sqrt(3) / 2])
    assert similarity(a, np.array([1.0, 0]), b, np.array([-1.0, 0]), 1.0) == pytest.approx(1.5)
    assert similarity(sv([0, 0]), np.zeros(2), a, np.array([1.0, 0]), 0.5) == 1.0


def test_set_distance_examples():
    pair = table({("i", "j"): 1.9, ("i", "l"): 1.0, ("j", "l"): 1.5})
    assert set_distance("i", ["i"], pair) == 2.0
    assert set_distance("i", ["i", "j"], table({("i", "j"): 2.0})) == 0.0
    assert set_distance("i", ["i", "j", "l"], pair) == pytest.approx(0.1)


def test_objective_examples():
    pair = table({("a", "b"): 1.0})
    assert objective(["a", "b"], {"a": 1.8, "b": 1.6}, pair, 2) == pytest.approx(4.4)
    assert objective(["a"], {"a": 1.8}, pair, 2) == pytest.approx(2.8)
    assert objective(["a", "b"], {"a": 1.8, "b": 1.6}, table({("a", "b"): 2.0}), 2) == pytest.approx(3.4)


def test_greedy_worked_example():
    q = {"I1": 1.8, "I2": 1.7, "I3": 1.6}
    pair = table({("I1", "I2"): 1.9, ("I1", "I3"): 1.0, ("I2", "I3"): 1.2})
    picked = greedy_order(list(q), q, pair, 2)
    assert picked == ["I1", "I3"]
    assert objective(picked, q, pair, 2) == pytest.approx(4.4)
    assert exhaustive_best(list(q), q, pair, 2, objective) == pytest.approx(4.4)


def test_greedy_k1_is_argmax():
    q = {"a": 1.1, "b": 1.9, "c": 1.5}
    assert greedy_order(list(q), q, lambda x, y: 1.0, 1) == ["b"]


def test_greedy_identical_candidates_lowest_ids():
    q = {c: 1.5 for c in "dcba"}
    picked = greedy_order(list(q), q, lambda x, y: 2.0, 2)
    assert picked == ["a", "b"]
    assert objective(picked, q, lambda x, y: 2.0, 2) == pytest.approx(3.0)


def _random_instance(rng, n):
    ids = [f"c{i}" for i in range(n)]
    q = {c: rng.uniform(0, 2) for c in ids}
    sims = {pair: rng.uniform(0, 2) for pair in itertools.combinations(ids, 2)}
    return ids, q, table(sims)


def test_vectorized_greedy_matches_full_recompute():
    rng = random.Random(3)
    for _ in range(200):
        ids, q, pair = _random_instance(rng, rng.randint(1, 9))
        k = rng.randint(1, 5)
        assert greedy_order(ids, q, pair, k) == naive_greedy(ids, q, pair, k)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.randoms(use_true_random=False))
def test_greedy_independent_of_input_order(seed, shuffler):
    ids, q, pair = _random_instance(random.Random(seed), 8)
    shuffled = list(ids)
    shuffler.shuffle(shuffled)
    assert greedy_order(shuffled, q, pair, 3) == greedy_order(ids, q, pair, 3)


def test_params_validation():
    with pytest.raises(ValueError):
        SelectionParams(lam=1.5)
    with pytest.raises(ValueError):
        SelectionParams(stage1_n=3, k=5)


@pytest.fixture(scope="module")
def small_index(dataset):
    emb = HashEmbedder(128)
    return build_index(dataset[:40], emb), emb


def test_stage1_self_first(small_index):
    index, emb = small_index
    inst = index.instances[7]
    qw, qs = query_vectors(index, emb, inst.buggy, inst.message)
    top = stage1_topn(index, qw, qs, SelectionParams())
    assert top[0].id == inst.id
    assert top[0].sim == pytest.approx(2.0, abs=1e-6)


def test_stage1_whole_index_sorted(small_index):
    index, emb = small_index
    inst = index.instances[0]
    qw, qs = query_vectors(index, emb, inst.buggy, inst.message)
    top = stage1_topn(index, qw, qs, SelectionParams(stage1_n=500, k=5))
    assert len(top) == len(index)
    keys = [(-s.sim, s.id) for s in top]
    assert keys == sorted(keys)


def test_stage1_ties_by_id(dataset):
    a = dataset[0]
    twin = type(a)("zz.twin", a.buggy, a.message, a.correct, a.label, a.record)
    first = type(a)("aa.twin", a.buggy, a.message, a.correct, a.label, a.record)
    emb = HashEmbedder(64)
    index = build_index([twin, a, first], emb)
    qw, qs = query_vectors(index, emb, a.buggy, a.message)
    assert [s.id for s in stage1_topn(index, qw, qs, SelectionParams(k=3))] == sorted([twin.id, a.id, first.id])


def test_search_exclusion_and_limits(small_index):
    index, emb = small_index
    inst = index.instances[3]
    db = default_error_db()
    bundle = search(index, Query(inst.buggy, inst.message), SelectionParams(), db, emb, exclude_id=inst.id)
    assert inst.id not in bundle.code_rag.ids
    assert len(bundle.code_rag) <= 5
    assert bundle.doc_rag.entries


def test_search_empty_index():
    db = default_error_db()
    bundle = search(None, Query("wire t;", "T-error-2 at line 1: Clock definition duplicate"), SelectionParams(), db)
    assert len(bundle.code_rag) == 0
    assert bundle.doc_rag.entries[0].error_id == "T-error-2"


def test_search_clamps_with_warning(dataset, caplog):
    emb = HashEmbedder(64)
    index = build_index(dataset[:3], emb)
    inst = dataset[0]
    with caplog.at_level(logging.WARNING):
        bundle = search(index, Query(inst.buggy, inst.message), SelectionParams(k=5), default_error_db(), emb)
    assert len(bundle.code_rag) == 3 and bundle.code_rag.clamped
    assert "exceeds" in caplog.text
    d = bundle.to_dict()
    assert set(d) == {"doc_rag", "code_rag", "params", "clamped"}


def test_greedy_can_fall_below_the_claimed_ratio():
    # Adding c lowers the diversity term already credited to a, so S is not
    # monotone and the 1-1/e bound does not hold here.
    q = {"a": 0.2, "b": 0.05, "c": 0.1}
    pair = table({("a", "b"): 1.98, ("a", "c"): 1.5, ("b", "c"): 0.1})
    picked = greedy_order(list(q), q, pair, 2)
    assert picked == ["a", "c"]
    assert objective(picked, q, pair, 2) == pytest.approx(0.8)
    best = exhaustive_best(list(q), q, pair, 2, objective)
    assert best == pytest.approx(2.05)
    assert objective(picked, q, pair, 2) / best < 1 - 1 / np.e
