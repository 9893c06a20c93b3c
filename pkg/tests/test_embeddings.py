import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twe.embeddings import (
    Collection,
    EmbeddingSet,
    format_embeddings,
    load_embeddings,
    lookup,
    parse_embeddings,
    save_embeddings,
)
from twe.errors import DimensionMismatch, DuplicateToken, EmptyInput, NonFiniteValue

from conftest import make_set


def test_load_small_file(write):
    emb = load_embeddings(write("a.vec", "a 1.0 0.0\nb 0.0 1.0"), "en", "tweet")
    assert emb.tokens == ("a", "b")
    assert len(emb) == 2 and emb.dim == 2
    assert emb.collection is Collection.TWEET
    np.testing.assert_array_equal(emb.matrix, [[1, 0], [0, 1]])


def test_empty_file(write):
    with pytest.raises(EmptyInput):
        load_embeddings(write("e.vec", ""))
    with pytest.raises(EmptyInput):
        load_embeddings(write("e2.vec", "\n  \n"))


def test_dimension_mismatch_names_line(write):
    with pytest.raises(DimensionMismatch, match=":2:"):
        load_embeddings(write("bad.vec", "a 1.0\nb 1.0 2.0"))


def test_duplicate_token_reported(write):
    with pytest.raises(DuplicateToken, match="'a'"):
        load_embeddings(write("dup.vec", "a 1 2\nb 3 4\na 5 6\n"))


@pytest.mark.parametrize("value", ["nan", "inf", "-inf"])
def test_non_finite_rejected(write, value):
    with pytest.raises(NonFiniteValue):
        load_embeddings(write("nf.vec", f"a 1 {value}\n"))


def test_header_line_is_skipped(write):
    emb = load_embeddings(write("h.vec", "2 3\nx 1 2 3\ny 4 5 6\n"))
    assert emb.tokens == ("x", "y") and emb.dim == 3


def test_multiple_spaces_and_unicode_tokens(write):
    emb = load_embeddings(write("u.vec", "grüße   1.5  2\nstraße 3 4\n"))
    assert emb.tokens == ("grüße", "straße")
    np.testing.assert_array_equal(emb.vector("grüße"), [1.5, 2.0])


def test_counts_sidecar_overrides_line_order(write):
    vec = write("c.vec", "a 1 0\nb 0 1\nc 1 1\n")
    counts = write("c.counts", "a\t3\nb\t10\nc\t7\n")
    emb = load_embeddings(vec, counts_path=counts)
    assert emb.tokens == ("b", "c", "a")
    np.testing.assert_array_equal(emb.vector("a"), [1, 0])


def test_roundtrip_small(tmp_path):
    emb = make_set(["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
    save_embeddings(emb, tmp_path / "r.vec")
    back = load_embeddings(tmp_path / "r.vec", "en", "tweet")
    assert back.tokens == emb.tokens
    assert np.max(np.abs(back.matrix - emb.matrix)) <= 1e-6


def test_roundtrip_random_500x25(tmp_path, rng):
    emb = make_set([f"t{i}" for i in range(500)], rng.standard_normal((500, 25)) * 3)
    save_embeddings(emb, tmp_path / "r.vec")
    back = load_embeddings(tmp_path / "r.vec", "en", "tweet")
    diff = np.abs(back.matrix - emb.matrix)  # elementwise diff oracle
    assert diff.max() <= 1e-6


def test_save_load_save_is_byte_stable(tmp_path, rng):
    emb = make_set([f"t{i}" for i in range(50)], rng.standard_normal((50, 7)) * 1e3)
    save_embeddings(emb, tmp_path / "1.vec")
    once = (tmp_path / "1.vec").read_bytes()
    save_embeddings(load_embeddings(tmp_path / "1.vec"), tmp_path / "2.vec")
    assert (tmp_path / "2.vec").read_bytes() == once


def test_unwritable_path(tmp_path):
    emb = make_set(["a"], [[1.0]])
    with pytest.raises(OSError, match="missing"):
        save_embeddings(emb, tmp_path / "missing" / "dir" / "x.vec")


def test_lookup_present_and_absent():
    emb = make_set(["a"], [[1.0, 0.0]])
    np.testing.assert_array_equal(lookup(emb, "a"), [1.0, 0.0])
    assert lookup(emb, "z") is None


def test_lookup_matches_linear_scan(rng):
    tokens = [f"w{i}" for i in range(5000)]
    emb = make_set(tokens, rng.standard_normal((5000, 4)))
    probes = [f"w{i}" for i in rng.integers(0, 7000, size=100)]
    for tok in probes:
        expected = None
        for i, t in enumerate(tokens):  # linear-scan oracle
            if t == tok:
                expected = emb.matrix[i]
                break
        got = lookup(emb, tok)
        if expected is None:
            assert got is None
        else:
            np.testing.assert_array_equal(got, expected)


def test_set_is_immutable():
    emb = make_set(["a"], [[1.0]])
    with pytest.raises(ValueError):
        emb.matrix[0, 0] = 2.0


def test_constructor_invariants():
    with pytest.raises(DimensionMismatch):
        EmbeddingSet(("a", "b"), np.zeros((1, 2)))
    with pytest.raises(DuplicateToken):
        EmbeddingSet(("a", "a"), np.zeros((2, 2)))
    with pytest.raises(NonFiniteValue):
        EmbeddingSet(("a",), np.array([[np.nan]]))


_token = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Zs", "Zl", "Zp", "Cc")), min_size=1, max_size=8
).filter(lambda s: not s.split() == [] and len(s.split()) == 1)


@settings(max_examples=60, deadline=None)
@given(
    tokens=st.lists(_token, min_size=1, max_size=10, unique=True),
    dim=st.integers(1, 5),
    data=st.data(),
)
def test_load_is_deterministic(tokens, dim, data):
    values = data.draw(
        st.lists(
            st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
            min_size=len(tokens) * dim,
            max_size=len(tokens) * dim,
        )
    )
    emb = make_set(tokens, np.array(values).reshape(len(tokens), dim))
    text = format_embeddings(emb)
    a = parse_embeddings(text.splitlines())
    b = parse_embeddings(text.splitlines())
    assert a == b
    assert format_embeddings(a) == format_embeddings(parse_embeddings(format_embeddings(a).splitlines()))
