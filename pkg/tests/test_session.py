"""Session event log: transition function, store, views, concordance."""

import json

import pytest

from wordbench.corpus import Document
from wordbench.errors import (
    FormatError,
    NotFoundError,
    PreconditionError,
    SessionClosedError,
)
from wordbench.session import (
    SessionStore,
    apply_event,
    card_view,
    concordance,
    session_view,
)


@pytest.fixture
def store(corrupted_copy):
    return SessionStore(corrupted_copy)


@pytest.fixture
def live(corrupted_copy):
    """A small live session plus everything needed to drive it."""
    store = SessionStore(corrupted_copy)
    space = corrupted_copy.load_space()
    session = store.create(s=3, k=4, space=space)
    return store, space, session


def test_create_freezes_ranking_and_cards(live):
    store, space, session = live
    assert session.id == "s1"
    assert session.state == "open"
    assert len(session.cards) == 3
    for card in session.cards:
        assert set(card.columns) == {"src", "tgt"}
        for lang, entries in card.columns.items():
            assert len(entries) == 4
            assert all(e.lang == lang for e in entries)
            cosines = [e.cosine for e in entries]
            assert cosines == sorted(cosines, reverse=True)
    # The log's create event carries the whole card structure.
    create = store.events(session.id)[0]
    assert create["kind"] == "create"
    assert [c["keyword"]["id"] for c in create["payload"]["cards"]] == [
        c.keyword_id for c in session.cards
    ]
    assert create["payload"]["embeddings"] == session.embedding_files


def test_create_requires_trained_model(corrupted_copy):
    corrupted_copy.manifest["params"] = None
    with pytest.raises(PreconditionError):
        SessionStore(corrupted_copy).create(s=2, k=2)
    with pytest.raises(PreconditionError):
        SessionStore(corrupted_copy).create(s=0, k=2)


def test_mark_flow_last_write_wins(live):
    store, space, session = live
    card = session.cards[0]
    wid = card.columns["tgt"][0].word_id
    kid = card.keyword_id

    store.submit_mark(session, space.vocab, kid, wid, "accept")
    assert session.mark_of(kid, wid) == "accepted"
    store.submit_mark(session, space.vocab, kid, wid, "reject")
    assert session.mark_of(kid, wid) == "rejected"
    assert session.feedback.n_marks() == 1
    store.submit_mark(session, space.vocab, kid, wid, "clear")
    assert session.mark_of(kid, wid) == "unmarked"
    assert session.feedback.is_empty()

    # Reload from disk reproduces the fold exactly.
    again = store.load(session.id)
    assert again.feedback.positives == session.feedback.positives
    assert again.feedback.negatives == session.feedback.negatives
    kinds = [r["kind"] for r in store.events(session.id)]
    assert kinds == ["create", "mark", "mark", "unmark"]


def test_mark_validation(live):
    store, space, session = live
    card = session.cards[0]
    kid = card.keyword_id
    onboard = card.columns["tgt"][0].word_id
    with pytest.raises(PreconditionError):
        store.submit_mark(session, space.vocab, kid, kid, "accept")
    stranger = next(
        i for i in range(len(space.vocab)) if i not in card.word_ids() and i != kid
    )
    with pytest.raises(PreconditionError):
        store.submit_mark(session, space.vocab, kid, stranger, "accept")
    with pytest.raises(PreconditionError):
        store.submit_mark(session, space.vocab, kid, onboard, "maybe")
    with pytest.raises(NotFoundError):
        store.submit_mark(session, space.vocab, 10**6, onboard, "accept")
    # Failed attempts must not be logged.
    assert [r["kind"] for r in store.events(session.id)] == ["create"]


def test_add_word_flow(live):
    store, space, session = live
    card = session.cards[0]
    kid = card.keyword_id
    fresh = next(
        i for i in range(len(space.vocab)) if i not in card.word_ids() and i != kid
    )
    ref = space.vocab.ref(fresh)
    store.add_word(session, space, kid, ref.surface, ref.lang, "accept")
    entry = card.columns[ref.lang][-1]
    assert entry.added and entry.word_id == fresh
    assert session.mark_of(kid, fresh) == "accepted"
    assert session.added_words[0]["surface"] == ref.surface

    with pytest.raises(PreconditionError):
        store.add_word(session, space, kid, ref.surface, ref.lang, "accept")
    with pytest.raises(PreconditionError):
        store.add_word(session, space, kid, "no-such-word", ref.lang, "accept")
    kref = space.vocab.ref(kid)
    with pytest.raises(PreconditionError):
        store.add_word(session, space, kid, kref.surface, kref.lang, "accept")

    again = store.load(session.id)
    assert again.cards[0].columns[ref.lang][-1].added
    assert again.mark_of(kid, fresh) == "accepted"


def test_closed_session_rejects_mutation(live):
    store, space, session = live
    card = session.cards[0]
    wid = card.columns["tgt"][0].word_id
    store.submit_mark(session, space.vocab, card.keyword_id, wid, "accept")
    store.log_finalize(session, {"refine": {}, "eval": {}})
    assert session.state == "finalizing"
    with pytest.raises(SessionClosedError):
        store.submit_mark(session, space.vocab, card.keyword_id, wid, "reject")
    store.log_refine_done(session, {"round": 1})
    store.log_retrain_done(session, {})
    assert session.state == "closed"
    with pytest.raises(SessionClosedError):
        store.submit_mark(session, space.vocab, card.keyword_id, wid, "clear")


def test_finalize_requires_marks(live):
    store, _, session = live
    with pytest.raises(PreconditionError):
        store.log_finalize(session, {})
    assert session.state == "open"


def test_event_log_structural_errors(live):
    store, _, session = live
    with pytest.raises(FormatError):
        apply_event(session, "create", {})
    with pytest.raises(FormatError):
        apply_event(None, "mark", {})
    with pytest.raises(FormatError):
        apply_event(session, "bogus_kind", {})
    with pytest.raises(FormatError):
        apply_event(session, "refine_done", {})  # only legal while finalizing

    log = store._log_path(session.id)
    log.write_text(log.read_text() + "not json\n")
    with pytest.raises(FormatError):
        store.load(session.id)
    with pytest.raises(NotFoundError):
        store.load("s99")


def test_session_ids_count_up(live):
    store, space, _ = live
    second = store.create(s=2, k=2, space=space)
    assert second.id == "s2"
    assert store.list_ids() == ["s1", "s2"]


def test_views(live):
    store, space, session = live
    card = session.cards[1]
    wid = card.columns["src"][0].word_id
    store.submit_mark(session, space.vocab, card.keyword_id, wid, "reject")

    view = card_view(session, 1)
    assert view["index"] == 1 and view["total"] == 3
    assert view["keyword"]["surface"] == card.surface
    assert view["columns"]["src"][0]["mark"] == "rejected"
    assert view["columns"]["src"][1]["mark"] == "unmarked"
    with pytest.raises(NotFoundError):
        card_view(session, 9)

    sview = session_view(session, space.vocab)
    assert sview["n_marks"] == 1
    assert sview["n_cards"] == 3
    assert sview["state"] == "open"
    json.dumps(sview)  # JSON-safe end to end


def test_concordance_orders_limits_and_validates(corrupted_copy):
    docs = [
        Document(id="b", lang="en", text="zz target zz", label=0, tokens=[0]),
        Document(id="a", lang="en", text="target here", label=0, tokens=[0]),
        Document(id="c", lang="en", text="no hit", label=0, tokens=[1]),
        Document(id="d", lang="fr", text="target fr", label=0, tokens=[0]),
    ]
    from wordbench.embeddings import Vocabulary

    vocab = Vocabulary()
    vocab.add("target", "en")
    vocab.add("other", "en")
    vocab.add("target", "fr")

    hits = concordance(vocab, docs, "target", "en")
    assert [h["doc_id"] for h in hits] == ["a", "b"]
    assert hits[0]["text"] == "target here"
    assert len(concordance(vocab, docs, "target", "en", limit=1)) == 1
    with pytest.raises(NotFoundError):
        concordance(vocab, docs, "missing", "en")
    with pytest.raises(PreconditionError):
        concordance(vocab, docs, "target", "en", limit=0)
