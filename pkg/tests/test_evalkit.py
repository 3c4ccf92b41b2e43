import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdldebug.evalkit import (
    RankedResult,
    RepairOutcome,
    edit_distance_report,
    evaluation_report,
    hit_at_k,
    map_at_k,
    mrr_at_k,
    pass_at_k,
    pass_rate,
    relative_runtime,
    shallow_queries,
)
from hdldebug.thoughtforge import code_tokens, edit_distance
from oracles import dp_edit_distance


def outcome(*passes):
    return RepairOutcome("p", [""] * len(passes), list(passes))


def test_pass_rate():
    assert pass_rate([outcome(True), outcome(False), outcome(True), outcome(False)]) == 0.5
    assert pass_rate([outcome(True)] * 3) == 1.0
    assert pass_rate([outcome(False)] * 3) == 0.0


def test_pass_at_k():
    first = [outcome(True, False, False)] * 2
    assert [pass_at_k(first, k) for k in (1, 2, 3)] == [1.0, 1.0, 1.0]
    late = [outcome(False, False, True)]
    assert [pass_at_k(late, k) for k in (1, 2, 3)] == [0.0, 0.0, 1.0]
    with pytest.raises(ValueError):
        pass_at_k(late, 4)


@given(st.lists(st.lists(st.booleans(), min_size=5, max_size=5), min_size=1, max_size=10))
def test_pass_at_k_monotone(rows):
    outs = [outcome(*r) for r in rows]
    vals = [pass_at_k(outs, k) for k in range(1, 6)]
    assert vals == sorted(vals)


def test_relative_runtime():
    assert relative_runtime([2.0, 2.0], 2.0) == 1.0
    assert relative_runtime([3.0, 5.0], 2.0) == 2.0
    with pytest.raises(ValueError):
        relative_runtime([], 1.0)


def perfect(n, K):
    return [RankedResult(f"q{i}", ["L"] * K, "L") for i in range(n)]


def test_perfect_ranker():
    res = perfect(5, 10)
    assert hit_at_k(res, 3) == 1.0 and map_at_k(res, 10) == 1.0
    assert mrr_at_k(res, 3) == pytest.approx(0.6111, abs=1e-4)
    assert mrr_at_k(res, 10) == pytest.approx(0.2929, abs=1e-4)


def test_hits_at_ranks_one_and_three():
    r = [RankedResult("q", ["L", "X", "L"], "L")]
    assert hit_at_k(r, 3) == pytest.approx(2 / 3)
    assert map_at_k(r, 3) == pytest.approx(0.5556, abs=1e-4)
    assert mrr_at_k(r, 3) == pytest.approx((1 + 1 / 3) / 3)


def test_no_hits():
    r = [RankedResult("q", ["X"] * 3, "L")]
    assert hit_at_k(r, 3) == map_at_k(r, 3) == mrr_at_k(r, 3) == 0.0


def test_shallow_queries_flagged():
    r = [RankedResult("a", ["L"], "L"), RankedResult("b", ["L"] * 3, "L")]
    assert shallow_queries(r, 3) == ["a"]
    assert hit_at_k(r, 3) == 1.0


def test_edit_distance_report():
    assert edit_distance_report([("wire a;", "wire a;")]) == {"raw": 0.0, "normalized": 0.0}
    # 3 substitutions, both sides 10 tokens
    ref = "a b c d e f g h i j"
    got = "a b c d e f g x y z"
    assert edit_distance_report([(got, ref)]) == {"raw": 3.0, "normalized": pytest.approx(0.3)}


def test_edit_distance_metric_axioms():
    rng = random.Random(5)
    alphabet = ["a", "b", "c", ";", "="]
    for _ in range(100):
        x, y, z = (" ".join(rng.choices(alphabet, k=rng.randint(0, 12))) for _ in range(3))
        assert edit_distance(x, y) == edit_distance(y, x)
        assert (edit_distance(x, y) == 0) == (code_tokens(x) == code_tokens(y))
        assert edit_distance(x, z) <= edit_distance(x, y) + edit_distance(y, z)
        assert edit_distance(x, y) == dp_edit_distance(code_tokens(x), code_tokens(y))


def test_evaluation_report_sections():
    rep = evaluation_report(outcomes=[RepairOutcome.checked("p", ["module m (input a, output y);\n assign y = a;\nendmodule\n"])])
    assert rep["pass_rate"] == 1.0 and rep["retrieval"] is None
    rep = evaluation_report(retrieval=(perfect(3, 3), [1, 3]))
    assert rep["retrieval"]["MRR"]["3"] == pytest.approx(0.6111, abs=1e-4)
