"""Embedding store: file format, vocabulary, neighbor search."""

import io

import numpy as np
import pytest

from wordbench.embeddings import EmbeddingSpace, Vocabulary, cosine
from wordbench.errors import FormatError, NotFoundError, PreconditionError


def space_from(text: str, lang: str = "en") -> EmbeddingSpace:
    space = EmbeddingSpace()
    space.load_text(io.StringIO(text), lang)
    return space


def test_load_text_basic():
    space = space_from("2 3\napple 1.0 0.0 0.5\nbanana 0.5 1.0 0.0\n")
    assert len(space.vocab) == 2
    assert space.dim == 3
    assert space.vocab.id_of("apple", "en") == 0
    np.testing.assert_array_equal(space.vector(1), [0.5, 1.0, 0.0])
    assert np.array_equal(space.current, space.original)


def test_two_languages_share_one_id_space():
    space = space_from("1 2\nword 1.0 0.0\n")
    space.load_text(io.StringIO("2 2\nword 0.0 1.0\nother 1.0 1.0\n"), "fr")
    assert len(space.vocab) == 3
    assert space.vocab.id_of("word", "en") == 0
    assert space.vocab.id_of("word", "fr") == 1
    assert sorted(space.vocab.ids_for_lang("fr").tolist()) == [1, 2]


def test_format_errors():
    with pytest.raises(FormatError):
        space_from("not a header\n")
    with pytest.raises(FormatError):
        space_from("2 3\nonly 1.0 0.0 0.5\n")  # truncated
    with pytest.raises(FormatError):
        space_from("1 3\nshort 1.0 0.0\n")  # wrong width
    with pytest.raises(FormatError):
        space_from("1 2\nbad 1.0 oops\n")
    with pytest.raises(FormatError):
        space_from("1 2\nbad 1.0 inf\n")
    with pytest.raises(FormatError):
        space_from("2 2\ndup 1.0 0.0\ndup 0.0 1.0\n")
    space = space_from("1 2\nw 1.0 0.0\n")
    with pytest.raises(FormatError):
        space.load_text(io.StringIO("1 3\nx 1.0 0.0 0.0\n"), "fr")  # dim mismatch


def test_save_text_round_trips_at_fixed_precision():
    rng = np.random.default_rng(3)
    space = EmbeddingSpace()
    header = "5 4\n" + "".join(
        f"w{i} " + " ".join(f"{x:.6f}" for x in rng.normal(size=4)) + "\n"
        for i in range(5)
    )
    space.load_text(io.StringIO(header), "en")
    buf = io.StringIO()
    space.save_text(buf, "current", lang="en")
    again = space_from(buf.getvalue())
    assert again.current.tobytes() == space.current.tobytes()
    # Second round trip is a fixpoint even for full-precision inputs.
    space.set_current(space.current + rng.normal(scale=1e-9, size=space.current.shape))
    first = io.StringIO()
    space.save_text(first, "current", lang="en")
    reloaded = space_from(first.getvalue())
    second = io.StringIO()
    reloaded.save_text(second, "current", lang="en")
    assert first.getvalue() == second.getvalue()


def test_save_text_per_language_selection():
    space = space_from("1 2\na 1.0 0.0\n")
    space.load_text(io.StringIO("1 2\nb 0.0 1.0\n"), "fr")
    buf = io.StringIO()
    space.save_text(buf, "current", lang="fr")
    assert buf.getvalue().splitlines()[0] == "1 2"
    assert buf.getvalue().splitlines()[1].startswith("b ")
    with pytest.raises(PreconditionError):
        space.save_text(io.StringIO(), "neither")


def test_set_current_validation_and_original_immutability():
    space = space_from("2 2\na 1.0 0.0\nb 0.0 1.0\n")
    with pytest.raises(PreconditionError):
        space.set_current(np.zeros((3, 2)))
    with pytest.raises(PreconditionError):
        space.set_current(np.full((2, 2), np.nan))
    space.set_current(np.ones((2, 2)))
    np.testing.assert_array_equal(space.original, [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        space.original[0, 0] = 9.0  # frozen matrix is read-only


def test_cosine():
    assert cosine([1.0, 0.0], [0.0, 2.0]) == 0.0
    assert cosine([1.0, 1.0], [2.0, 2.0]) == pytest.approx(1.0)
    with pytest.raises(PreconditionError):
        cosine([0.0, 0.0], [1.0, 0.0])


def test_nearest_neighbors_ordering_and_exclusion():
    space = space_from(
        "4 2\nq 1.0 0.0\nnear 0.9 0.1\nmid 0.5 0.5\nfar -1.0 0.0\n"
    )
    got = space.nearest_neighbors(0, 3)
    assert [space.vocab.surfaces[i] for i, _ in got] == ["near", "mid", "far"]
    assert got[0][1] > got[1][1] > got[2][1]
    # Query never returns itself; explicit exclusion also honored.
    assert all(i != 0 for i, _ in got)
    got = space.nearest_neighbors(0, 3, exclude=[1])
    assert [i for i, _ in got] == [2, 3]


def test_nearest_neighbors_tie_breaks_by_ascending_id():
    space = space_from(
        "4 2\nq 1.0 0.0\ntwin2 2.0 0.0\ntwin1 3.0 0.0\nother 0.0 1.0\n"
    )
    got = space.nearest_neighbors(0, 3)
    # Both twins have cosine exactly 1; the lower id wins the tie.
    assert [i for i, _ in got] == [1, 2, 3]


def test_nearest_neighbors_language_restriction_and_zero_rows():
    space = space_from("2 2\nq 1.0 0.0\nzero 0.0 0.0\n")
    space.load_text(io.StringIO("1 2\nfr1 1.0 0.1\n"), "fr")
    got = space.nearest_neighbors(0, 5)
    assert [i for i, _ in got] == [2]  # zero row never qualifies
    assert space.nearest_neighbors(0, 5, lang="fr") == got
    with pytest.raises(PreconditionError):
        space.nearest_neighbors(1, 3)  # zero-norm query
    with pytest.raises(PreconditionError):
        space.nearest_neighbors(0, 0)
    with pytest.raises(NotFoundError):
        space.nearest_neighbors(99, 3)


def test_vocabulary_errors():
    vocab = Vocabulary()
    vocab.add("a", "en")
    with pytest.raises(FormatError):
        vocab.add("a", "en")
    with pytest.raises(NotFoundError):
        vocab.id_of("missing", "en")
    assert vocab.get("missing", "en") is None
    with pytest.raises(NotFoundError):
        vocab.ref(5)
