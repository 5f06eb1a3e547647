"""Annotation sessions as an append-only event log.

A session is created by ranking keywords and freezing each keyword's
nearest-neighbor card; every later interaction (mark, unmark, add word,
finalize, refine/retrain completion) is appended to a JSON-lines log.
The in-memory session is always the fold of its log: live mutations and
replay from disk run the exact same transition function, which is what
makes replay reconstruction exact.

Because cards and neighbor cosines are frozen into the create event, a
log replays identically even after later rounds have replaced the
workspace's current embeddings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .classifier import ConvTextClassifier
from .corpus import Document
from .embeddings import EmbeddingSpace, Vocabulary, cosine
from .errors import (
    FormatError,
    NotFoundError,
    PreconditionError,
    SessionClosedError,
)
from .refine import FeedbackSet
from .salience import KeywordRanking, global_salience, select_keywords
from .workspace import Workspace

DEFAULT_KEYWORDS = 50
DEFAULT_NEIGHBORS = 5

STATE_OPEN = "open"
STATE_FINALIZING = "finalizing"
STATE_CLOSED = "closed"

ACTION_ACCEPT = "accept"
ACTION_REJECT = "reject"
ACTION_CLEAR = "clear"

EVENT_KINDS = (
    "create",
    "mark",
    "unmark",
    "add_word",
    "finalize",
    "refine_done",
    "retrain_done",
)


@dataclass
class CardEntry:
    word_id: int
    surface: str
    lang: str
    cosine: float
    added: bool = False


@dataclass
class NeighborCard:
    keyword_id: int
    surface: str
    lang: str
    columns: dict[str, list[CardEntry]]

    def entries(self) -> list[CardEntry]:
        return [e for col in self.columns.values() for e in col]

    def word_ids(self) -> set[int]:
        return {e.word_id for e in self.entries()}


@dataclass
class Session:
    id: str
    session_index: int
    s: int
    k: int
    src_lang: str
    tgt_lang: str
    embedding_files: dict[str, str]
    ranking: KeywordRanking
    cards: list[NeighborCard]
    feedback: FeedbackSet = field(default_factory=FeedbackSet)
    added_words: list[dict] = field(default_factory=list)
    state: str = STATE_OPEN

    def card_for(self, keyword_id: int) -> NeighborCard:
        for card in self.cards:
            if card.keyword_id == keyword_id:
                return card
        raise NotFoundError(f"no card for keyword id {keyword_id}")

    def mark_of(self, keyword_id: int, word_id: int) -> str:
        if word_id in self.feedback.positives.get(keyword_id, ()):
            return "accepted"
        if word_id in self.feedback.negatives.get(keyword_id, ()):
            return "rejected"
        return "unmarked"


# -- card construction ----------------------------------------------------


def build_cards(
    space: EmbeddingSpace, ranking: KeywordRanking, k: int, langs: tuple[str, str]
) -> list[NeighborCard]:
    cards = []
    for wid, _ in ranking.items:
        ref = space.vocab.ref(wid)
        columns: dict[str, list[CardEntry]] = {}
        for lang in langs:
            entries = [
                CardEntry(nid, space.vocab.surfaces[nid], lang, sim)
                for nid, sim in space.nearest_neighbors(wid, k, lang=lang)
            ]
            columns[lang] = entries
        cards.append(NeighborCard(wid, ref.surface, ref.lang, columns))
    return cards


# -- event transition function --------------------------------------------


def _require_open(session: Session) -> None:
    if session.state != STATE_OPEN:
        raise SessionClosedError(f"session {session.id} is {session.state}")


def _card_and_word(session: Session, payload: dict) -> tuple[NeighborCard, int]:
    kid = payload["keyword"]["id"]
    wid = payload["word"]["id"]
    card = session.card_for(kid)
    if wid == kid:
        raise PreconditionError("a keyword cannot be marked against itself")
    if wid not in card.word_ids():
        raise PreconditionError(
            f"word {payload['word']['surface']!r} is not on the card for "
            f"{payload['keyword']['surface']!r}"
        )
    return card, wid


def _session_from_create(payload: dict) -> Session:
    ranking = KeywordRanking(
        items=[(item["id"], item["score"]) for item in payload["ranking"]],
        s=payload["s"],
    )
    cards = []
    for rec in payload["cards"]:
        columns = {
            lang: [
                CardEntry(e["id"], e["surface"], e["lang"], e["cosine"])
                for e in entries
            ]
            for lang, entries in rec["columns"].items()
        }
        cards.append(
            NeighborCard(
                rec["keyword"]["id"], rec["keyword"]["surface"], rec["keyword"]["lang"], columns
            )
        )
    return Session(
        id=payload["id"],
        session_index=payload["session_index"],
        s=payload["s"],
        k=payload["k"],
        src_lang=payload["src_lang"],
        tgt_lang=payload["tgt_lang"],
        embedding_files=dict(payload["embeddings"]),
        ranking=ranking,
        cards=cards,
    )


def apply_event(session: Session | None, kind: str, payload: dict) -> Session:
    """Validate and apply one event; mutates only after all checks pass."""
    if kind not in EVENT_KINDS:
        raise FormatError(f"unknown event kind {kind!r}")
    if kind == "create":
        if session is not None:
            raise FormatError("create must be the first event")
        return _session_from_create(payload)
    if session is None:
        raise FormatError("event log does not start with create")

    if kind == "mark":
        _require_open(session)
        card, wid = _card_and_word(session, payload)
        action = payload["action"]
        if action == ACTION_ACCEPT:
            session.feedback.add_positive(card.keyword_id, wid)
        elif action == ACTION_REJECT:
            session.feedback.add_negative(card.keyword_id, wid)
        else:
            raise PreconditionError(f"unknown mark action {action!r}")
    elif kind == "unmark":
        _require_open(session)
        card, wid = _card_and_word(session, payload)
        session.feedback.positives.get(card.keyword_id, set()).discard(wid)
        session.feedback.negatives.get(card.keyword_id, set()).discard(wid)
    elif kind == "add_word":
        _require_open(session)
        kid = payload["keyword"]["id"]
        card = session.card_for(kid)
        word = payload["word"]
        wid = word["id"]
        if wid == kid:
            raise PreconditionError("cannot add the keyword to its own card")
        if wid in card.word_ids():
            raise PreconditionError(f"duplicate neighbor {word['surface']!r}")
        action = payload["action"]
        if action not in (ACTION_ACCEPT, ACTION_REJECT, ACTION_CLEAR):
            raise PreconditionError(f"unknown mark action {action!r}")
        entry = CardEntry(wid, word["surface"], word["lang"], payload["cosine"], added=True)
        card.columns.setdefault(word["lang"], []).append(entry)
        session.added_words.append(
            {
                "keyword_id": kid,
                "word_id": wid,
                "surface": word["surface"],
                "lang": word["lang"],
                "action": action,
            }
        )
        if action == ACTION_ACCEPT:
            session.feedback.add_positive(kid, wid)
        elif action == ACTION_REJECT:
            session.feedback.add_negative(kid, wid)
    elif kind == "finalize":
        _require_open(session)
        if session.feedback.is_empty():
            raise PreconditionError("cannot finalize a session with no marks")
        session.state = STATE_FINALIZING
    elif kind == "refine_done":
        if session.state != STATE_FINALIZING:
            raise FormatError("refine_done outside finalize")
    elif kind == "retrain_done":
        if session.state != STATE_FINALIZING:
            raise FormatError("retrain_done outside finalize")
        session.state = STATE_CLOSED
    return session


# -- store ----------------------------------------------------------------


class SessionStore:
    """Creates, mutates, and replays sessions for one workspace."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace

    def _log_path(self, session_id: str) -> Path:
        return self.workspace.sessions_dir / f"{session_id}.events.jsonl"

    def list_ids(self) -> list[str]:
        paths = sorted(self.workspace.sessions_dir.glob("*.events.jsonl"))
        return [p.name.removesuffix(".events.jsonl") for p in paths]

    def _append(self, session_id: str, kind: str, payload: dict) -> None:
        record = {
            "t": datetime.now(timezone.utc).isoformat(),
            "session": session_id,
            "kind": kind,
            "payload": payload,
        }
        with open(self._log_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")

    def events(self, session_id: str) -> list[dict]:
        path = self._log_path(session_id)
        if not path.exists():
            raise NotFoundError(f"unknown session {session_id!r}")
        out = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError:
                    raise FormatError(f"{path}:{lineno}: invalid event") from None
        return out

    def load(self, session_id: str) -> Session:
        """Rebuild a session by folding its event log."""
        session: Session | None = None
        for record in self.events(session_id):
            session = apply_event(session, record["kind"], record["payload"])
        if session is None:
            raise FormatError(f"session {session_id!r} has an empty event log")
        return session

    # -- operations -------------------------------------------------------

    def create(
        self,
        s: int = DEFAULT_KEYWORDS,
        k: int = DEFAULT_NEIGHBORS,
        space: EmbeddingSpace | None = None,
        clf: ConvTextClassifier | None = None,
    ) -> Session:
        """Rank keywords on the current embeddings and freeze the cards."""
        if s < 1 or k < 1:
            raise PreconditionError("s and k must be >= 1")
        ws = self.workspace
        if not ws.has_classifier():
            raise PreconditionError("workspace has no trained model")
        if space is None:
            space = ws.load_space()
        if clf is None:
            clf = ws.load_classifier(space)
        train_docs = ws.load_docs("train", space.vocab)
        table = global_salience(clf, train_docs)
        ranking = select_keywords(table, s, ws.src_lang, space.vocab)
        if len(ranking) == 0:
            raise PreconditionError("no qualifying keywords to rank")
        cards = build_cards(space, ranking, k, (ws.src_lang, ws.tgt_lang))

        session_id = f"s{len(self.list_ids()) + 1}"
        payload = {
            "id": session_id,
            "session_index": len(self.list_ids()) + 1,
            "s": s,
            "k": k,
            "src_lang": ws.src_lang,
            "tgt_lang": ws.tgt_lang,
            "embeddings": dict(ws.manifest["embeddings"]["current"]),
            "ranking": [
                {
                    "id": wid,
                    "surface": space.vocab.surfaces[wid],
                    "lang": space.vocab.langs[wid],
                    "score": score,
                }
                for wid, score in ranking.items
            ],
            "cards": [
                {
                    "keyword": {
                        "id": c.keyword_id,
                        "surface": c.surface,
                        "lang": c.lang,
                    },
                    "columns": {
                        lang: [
                            {
                                "id": e.word_id,
                                "surface": e.surface,
                                "lang": e.lang,
                                "cosine": e.cosine,
                            }
                            for e in entries
                        ]
                        for lang, entries in c.columns.items()
                    },
                }
                for c in cards
            ],
        }
        session = apply_event(None, "create", payload)
        self._append(session_id, "create", payload)
        return session

    def _word_payload(self, vocab: Vocabulary, word_id: int) -> dict:
        ref = vocab.ref(word_id)
        return {"id": word_id, "surface": ref.surface, "lang": ref.lang}

    def submit_mark(
        self,
        session: Session,
        vocab: Vocabulary,
        keyword_id: int,
        word_id: int,
        action: str,
    ) -> None:
        """accept/reject/clear a word on a card; the event is always logged."""
        kind = "unmark" if action == ACTION_CLEAR else "mark"
        payload = {
            "keyword": self._word_payload(vocab, keyword_id),
            "word": self._word_payload(vocab, word_id),
            "action": action,
        }
        apply_event(session, kind, payload)
        self._append(session.id, kind, payload)

    def add_word(
        self,
        session: Session,
        space: EmbeddingSpace,
        keyword_id: int,
        surface: str,
        lang: str,
        action: str,
    ) -> None:
        """Append an in-vocabulary word to a card, with its frozen cosine."""
        wid = space.vocab.get(surface, lang)
        if wid is None:
            raise PreconditionError(f"{surface!r} ({lang}) is not in vocabulary")
        if wid == keyword_id:
            raise PreconditionError("cannot add the keyword to its own card")
        session.card_for(keyword_id)
        sim = cosine(space.current[keyword_id], space.current[wid])
        payload = {
            "keyword": self._word_payload(space.vocab, keyword_id),
            "word": {"id": wid, "surface": surface, "lang": lang},
            "cosine": sim,
            "action": action,
        }
        apply_event(session, "add_word", payload)
        self._append(session.id, "add_word", payload)

    def log_finalize(self, session: Session, payload: dict) -> None:
        apply_event(session, "finalize", payload)
        self._append(session.id, "finalize", payload)

    def log_refine_done(self, session: Session, payload: dict) -> None:
        apply_event(session, "refine_done", payload)
        self._append(session.id, "refine_done", payload)

    def log_retrain_done(self, session: Session, payload: dict) -> None:
        apply_event(session, "retrain_done", payload)
        self._append(session.id, "retrain_done", payload)


# -- views ----------------------------------------------------------------


def card_view(session: Session, index: int) -> dict:
    if not 0 <= index < len(session.cards):
        raise NotFoundError(f"no card {index} in session {session.id}")
    card = session.cards[index]
    return {
        "index": index,
        "total": len(session.cards),
        "state": session.state,
        "keyword": {"surface": card.surface, "lang": card.lang},
        "columns": {
            lang: [
                {
                    "surface": e.surface,
                    "lang": e.lang,
                    "cosine": e.cosine,
                    "added": e.added,
                    "mark": session.mark_of(card.keyword_id, e.word_id),
                }
                for e in entries
            ]
            for lang, entries in card.columns.items()
        },
    }


def session_view(session: Session, vocab: Vocabulary) -> dict:
    return {
        "id": session.id,
        "state": session.state,
        "s": session.s,
        "k": session.k,
        "session_index": session.session_index,
        "n_cards": len(session.cards),
        "n_marks": session.feedback.n_marks(),
        "src_lang": session.src_lang,
        "tgt_lang": session.tgt_lang,
        "feedback": session.feedback.to_json(vocab),
    }


def concordance(
    vocab: Vocabulary, docs: list[Document], word: str, lang: str, limit: int = 10
) -> list[dict]:
    """Raw-text snippets containing the word, ordered by document id."""
    if limit < 1:
        raise PreconditionError("limit must be >= 1")
    wid = vocab.id_of(word, lang)
    hits = []
    for doc in sorted(docs, key=lambda d: d.id):
        if doc.lang == lang and wid in doc.tokens:
            hits.append({"doc_id": doc.id, "text": doc.text})
            if len(hits) == limit:
                break
    return hits
