import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twe.alignment import apply_alignment, common_vocab, procrustes_fit
from twe.errors import EmptyList, InvalidPersistence, OOVQuery
from twe.lexical import RankedList, avg_rbo, nearest_neighbors, neighbor_lists, rbo, rbo_table
from twe.synthetic import related_pair

from conftest import make_set
from rbo_oracle import rbo_ext_oracle


def brute_neighbors(emb, query, k):
    q = emb.vector(query)
    scored = []
    for rank, tok in enumerate(emb.tokens):
        if tok == query:
            continue
        v = emb.matrix[rank]
        c = float(q @ v) / (np.linalg.norm(q) * np.linalg.norm(v))
        scored.append((-c, rank, tok))
    scored.sort()
    return [tok for _, _, tok in scored[:k]]


def test_nearest_neighbor_small():
    emb = make_set("abc", [[1, 0], [0.9, 0.1], [0, 1]])
    assert nearest_neighbors(emb, "a", 1).items == ("b",)
    assert nearest_neighbors(emb, "a", 1).items == tuple(brute_neighbors(emb, "a", 1))


def test_nearest_neighbor_oov():
    with pytest.raises(OOVQuery):
        nearest_neighbors(make_set("ab", np.eye(2)), "z", 1)


def test_k_beyond_vocabulary_returns_all_others():
    emb = make_set("abcd", [[1, 0], [0, 1], [1, 1], [-1, 0.2]])
    got = nearest_neighbors(emb, "c", 10)
    assert sorted(got.items) == ["a", "b", "d"]
    assert list(got.items) == brute_neighbors(emb, "c", 10)


def test_ties_follow_token_rank():
    emb = make_set("qxyz", [[1, 0], [0, 1], [0, 1], [0, 1]])
    assert nearest_neighbors(emb, "q", 3).items == ("x", "y", "z")


def test_neighbors_match_brute_force(rng):
    emb = make_set([f"w{i}" for i in range(60)], rng.standard_normal((60, 5)))
    lists = neighbor_lists(emb, 7)
    for ranked in lists[:20]:
        assert list(ranked.items) == brute_neighbors(emb, ranked.query, 7)
        assert ranked == nearest_neighbors(emb, ranked.query, 7)


def test_ranked_list_invariants():
    with pytest.raises(ValueError):
        RankedList("a", ("b", "b"), 3)
    with pytest.raises(ValueError):
        RankedList("a", ("a",), 3)
    with pytest.raises(ValueError):
        RankedList("a", ("b", "c"), 1)


def test_rbo_examples():
    assert rbo(list("abcdef"), list("abcdef"), 0.9) == 1.0
    assert rbo(list("abc"), list("xyz"), 0.5) == 0.0
    # A = (0, 1, 1): 1 * 0.9**3 + (0.1/0.9) * (0 + 0.81 + 0.729)
    assert rbo(list("abc"), list("bac"), 0.9) == pytest.approx(0.9, abs=1e-12)


def test_rbo_uses_common_depth():
    s = RankedList("q", tuple("abcde"), 5)
    t = RankedList("q", tuple("abc"), 3)
    assert rbo(s, t) == 1.0
    assert rbo(RankedList("q", tuple("ba"), 2), t) == pytest.approx(rbo_ext_oracle("ba", "ab", 0.9))


def test_rbo_errors():
    with pytest.raises(InvalidPersistence):
        rbo("ab", "ab", 1.0)
    with pytest.raises(InvalidPersistence):
        rbo("ab", "ab", 0.0)
    with pytest.raises(EmptyList):
        rbo([], ["a"], 0.9)


def test_rbo_min_is_lower_bound():
    for s, t in [("abcd", "bacd"), ("abcd", "wxyz"), ("abcd", "abcd"), ("abcd", "dcba")]:
        assert rbo(s, t, 0.9, "min") <= rbo(s, t, 0.9, "ext") + 1e-12


def test_rbo_exhaustive_short_lists():
    lists = [p for n in range(1, 4) for p in itertools.permutations("abcd", n)]
    for s in lists:
        for t in lists:
            assert abs(rbo(s, t, 0.8) - rbo_ext_oracle(s, t, 0.8)) <= 1e-12


rankings = st.lists(st.integers(0, 30), min_size=1, max_size=25, unique=True)


@settings(max_examples=300, deadline=None)
@given(s=rankings, t=rankings, p=st.floats(0.01, 0.99))
def test_rbo_bounds_symmetry_and_oracle(s, t, p):
    v = rbo(s, t, p)
    assert 0.0 <= v <= 1.0
    assert v == rbo(t, s, p)
    assert abs(v - rbo_ext_oracle(s, t, p)) <= 1e-12


def test_avg_rbo_single_token_with_pool():
    emb = make_set("abcd", [[1, 0], [0.9, 0.2], [0.5, 0.5], [0, 1]])
    assert avg_rbo(emb, emb, ["a"], 0.9, 2, pool="abcd") == 1.0


def test_avg_rbo_two_token_mean():
    src = make_set("abxy", [[1, 0], [0, 1], [1, 0.01], [0.01, 1]])
    # a keeps its neighbour x; b's only pool neighbour flips from y to x
    tgt = make_set("abxy", [[1, 0], [1, 0.02], [1, 0.01], [-1, -1]])
    scores = rbo_table(src, tgt, ["a", "b"], 0.9, 1, pool=["x", "y"])
    assert scores == [1.0, 0.0]
    assert avg_rbo(src, tgt, ["a", "b"], 0.9, 1, pool=["x", "y"]) == 0.5


def test_avg_rbo_equals_loop_and_average(rng):
    tokens = [f"w{i}" for i in range(50)]
    a = make_set(tokens, rng.standard_normal((50, 6)))
    b = make_set(tokens, a.matrix + rng.normal(0, 0.5, (50, 6)))
    per_token = []
    for tok in tokens:  # independent loop over the brute-force neighbour search
        per_token.append(rbo_ext_oracle(brute_neighbors(a, tok, 10), brute_neighbors(b, tok, 10), 0.9))
    expected = sum(per_token) / len(per_token)
    assert abs(avg_rbo(a, b, tokens, 0.9, 10) - expected) <= 1e-12


def test_avg_rbo_oov():
    a = make_set("ab", np.eye(2))
    with pytest.raises(OOVQuery):
        avg_rbo(a, a, ["a", "q"])


def test_alignment_improves_rbo():
    src, tgt, _ = related_pair(500, 10, noise=0.01, seed=3, n_clusters=8)
    tokens = list(common_vocab(src, tgt).tokens)
    before = avg_rbo(src, tgt, tokens, 0.9, 100)
    moved = apply_alignment(procrustes_fit(common_vocab(src, tgt)), src)
    after = avg_rbo(moved, tgt, tokens, 0.9, 100)
    assert after >= before
    assert math.isfinite(after) and after <= 1.0
