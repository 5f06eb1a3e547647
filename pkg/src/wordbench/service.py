"""HTTP service exposing annotation sessions.

Thin FastAPI layer over the workspace/session/evaluation modules: every
route resolves surfaces to word ids, calls the corresponding operation,
and returns its JSON view.  Finalize jobs run inline in the request (the
workloads here are desk-scale), so a job is already finished when its id
comes back; the job endpoint exists so clients can treat it uniformly.

Error mapping: precondition failures 400, unknown ids 404, mutations on
a non-open session 409.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .classifier import ConvTextClassifier
from .corpus import Document
from .embeddings import EmbeddingSpace
from .errors import (
    NotFoundError,
    PreconditionError,
    SessionClosedError,
    WordbenchError,
)
from .evaluation import finalize_session, report_signature
from .refine import RefineConfig
from .session import Session, SessionStore, card_view, concordance, session_view
from .workspace import MANIFEST_NAME, Workspace


@dataclass
class WorkspaceHandle:
    name: str
    workspace: Workspace
    space: EmbeddingSpace | None = None
    clf: ConvTextClassifier | None = None
    store: SessionStore | None = None
    sessions: dict[str, Session] = field(default_factory=dict)

    def ensure_loaded(self) -> None:
        if self.space is None:
            self.space = self.workspace.load_space()
            self.store = SessionStore(self.workspace)
        if self.clf is None and self.workspace.has_classifier():
            self.clf = self.workspace.load_classifier(self.space)

    def concordance_docs(self) -> list[Document]:
        docs = self.workspace.load_docs("train", self.space.vocab)
        try:
            docs += self.workspace.load_docs("unlabeled", self.space.vocab)
        except NotFoundError:
            pass
        return docs


class ServiceState:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.handles: dict[str, WorkspaceHandle] = {}
        self.jobs: dict[str, dict] = {}
        self._scan()

    def _scan(self) -> None:
        if not self.data_dir.exists():
            return
        for child in sorted(self.data_dir.iterdir()):
            if (child / MANIFEST_NAME).exists():
                self.register(child.name, Workspace.load(child))

    def register(self, name: str, ws: Workspace) -> WorkspaceHandle:
        handle = WorkspaceHandle(name=name, workspace=ws)
        self.handles[name] = handle
        return handle

    def handle(self, name: str) -> WorkspaceHandle:
        if name not in self.handles:
            raise NotFoundError(f"unknown workspace {name!r}")
        h = self.handles[name]
        h.ensure_loaded()
        return h

    def find_session(
        self, session_id: str, workspace: str | None = None
    ) -> tuple[WorkspaceHandle, Session]:
        if workspace is not None:
            hits = [self.handle(workspace)]
        else:
            hits = []
            for h in self.handles.values():
                h.ensure_loaded()
                if session_id in h.sessions or session_id in h.store.list_ids():
                    hits.append(h)
            # Session ids count per workspace, so a bare id can collide
            # across workspaces; refuse to guess.
            if len(hits) > 1:
                names = ", ".join(sorted(h.name for h in hits))
                raise PreconditionError(
                    f"session {session_id!r} exists in several workspaces "
                    f"({names}); pass ?workspace="
                )
        for h in hits:
            if session_id in h.sessions:
                return h, h.sessions[session_id]
            # Fall back to disk so a restarted server still serves old
            # sessions.
            if session_id in h.store.list_ids():
                session = h.store.load(session_id)
                h.sessions[session_id] = session
                return h, session
        raise NotFoundError(f"unknown session {session_id!r}")

    def sole_handle(self) -> WorkspaceHandle:
        if len(self.handles) != 1:
            raise PreconditionError(
                "workspace query parameter required when serving several workspaces"
            )
        return self.handle(next(iter(self.handles)))


def _require(payload: dict, *fields: str) -> list:
    missing = [f for f in fields if f not in payload]
    if missing:
        raise PreconditionError(f"missing fields: {', '.join(missing)}")
    return [payload[f] for f in fields]


def _card_payload(session: Session, keyword_id: int) -> dict:
    for i, card in enumerate(session.cards):
        if card.keyword_id == keyword_id:
            return card_view(session, i)
    raise NotFoundError(f"no card for keyword id {keyword_id}")


def create_app(data_dir: str | Path) -> FastAPI:
    app = FastAPI(title="wordbench", docs_url=None, redoc_url=None)
    state = ServiceState(data_dir)
    app.state.wordbench = state

    @app.exception_handler(WordbenchError)
    def _on_error(request: Request, exc: WordbenchError):
        if isinstance(exc, SessionClosedError):
            code = 409
        elif isinstance(exc, NotFoundError):
            code = 404
        else:
            code = 400
        return JSONResponse(status_code=code, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "workspaces": sorted(state.handles)}

    # -- workspaces -------------------------------------------------------

    @app.post("/workspaces")
    def create_workspace(payload: dict):
        src_emb, tgt_emb, src_lang, tgt_lang, train = _require(
            payload, "src_emb", "tgt_emb", "src_lang", "tgt_lang", "train"
        )
        name = payload.get("name") or f"ws{len(state.handles) + 1}"
        if name in state.handles:
            raise PreconditionError(f"workspace {name!r} already exists")
        ws = Workspace.create(
            state.data_dir / name,
            src_emb=src_emb,
            tgt_emb=tgt_emb,
            src_lang=src_lang,
            tgt_lang=tgt_lang,
            train=train,
            test=payload.get("test"),
            unlabeled=payload.get("unlabeled"),
            lexicon=payload.get("lexicon"),
        )
        state.register(name, ws)
        return {"workspace": name, "round": ws.round, "has_model": ws.has_classifier()}

    @app.get("/workspaces/{name}")
    def get_workspace(name: str):
        h = state.handle(name)
        ws = h.workspace
        return {
            "workspace": name,
            "round": ws.round,
            "has_model": ws.has_classifier(),
            "src_lang": ws.src_lang,
            "tgt_lang": ws.tgt_lang,
            "sessions": h.store.list_ids(),
        }

    # -- sessions ---------------------------------------------------------

    @app.post("/workspaces/{name}/sessions")
    def create_session(name: str, payload: dict | None = None):
        payload = payload or {}
        h = state.handle(name)
        s = int(payload.get("s", 50))
        k = int(payload.get("k", 5))
        session = h.store.create(s=s, k=k, space=h.space, clf=h.clf)
        h.sessions[session.id] = session
        view = session_view(session, h.space.vocab)
        view["first_card"] = card_view(session, 0)
        return view

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str, workspace: str | None = None):
        h, session = state.find_session(session_id, workspace)
        return session_view(session, h.space.vocab)

    @app.get("/sessions/{session_id}/cards/{index}")
    def get_card(session_id: str, index: int, workspace: str | None = None):
        _, session = state.find_session(session_id, workspace)
        return card_view(session, index)

    @app.post("/sessions/{session_id}/marks")
    def post_mark(session_id: str, payload: dict, workspace: str | None = None):
        keyword, word, lang, mark = _require(payload, "keyword", "word", "lang", "mark")
        h, session = state.find_session(session_id, workspace)
        kid = h.space.vocab.id_of(keyword, session.src_lang)
        wid = h.space.vocab.id_of(word, lang)
        h.store.submit_mark(session, h.space.vocab, kid, wid, mark)
        return _card_payload(session, kid)

    @app.post("/sessions/{session_id}/words")
    def post_word(session_id: str, payload: dict, workspace: str | None = None):
        keyword, surface, lang, mark = _require(
            payload, "keyword", "surface", "lang", "mark"
        )
        h, session = state.find_session(session_id, workspace)
        kid = h.space.vocab.id_of(keyword, session.src_lang)
        h.store.add_word(session, h.space, kid, surface, lang, mark)
        return _card_payload(session, kid)

    # -- concordance ------------------------------------------------------

    @app.get("/concordance")
    def get_concordance(
        word: str, lang: str, limit: int = 10, workspace: str | None = None
    ):
        h = state.handle(workspace) if workspace else state.sole_handle()
        snippets = concordance(h.space.vocab, h.concordance_docs(), word, lang, limit)
        return {"word": word, "lang": lang, "snippets": snippets}

    # -- finalize / jobs / report -----------------------------------------

    @app.post("/sessions/{session_id}/finalize")
    def post_finalize(
        session_id: str, payload: dict | None = None, workspace: str | None = None
    ):
        payload = payload or {}
        h, session = state.find_session(session_id, workspace)
        if session.state != "open":
            raise SessionClosedError(f"session {session_id} is {session.state}")
        if session.feedback.is_empty():
            raise PreconditionError("cannot finalize a session with no marks")

        cfg_fields = payload.get("refine") or {}
        config = RefineConfig(
            lam=float(cfg_fields.get("lam", 1.0)),
            steps=int(cfg_fields.get("steps", 100)),
            learning_rate=float(cfg_fields.get("learning_rate", 1e-3)),
        )
        seeds = [int(x) for x in payload.get("seeds", range(10))]

        job_id = f"job{len(state.jobs) + 1}"
        job = {"id": job_id, "session": session_id, "state": "running"}
        state.jobs[job_id] = job
        try:
            report = finalize_session(
                h.store, session, space=h.space, refine_config=config, seeds=seeds
            )
        except WordbenchError as exc:
            job["state"] = "failed"
            job["error"] = str(exc)
        else:
            job["state"] = "done"
            job["report"] = report_signature(report)
            h.clf = h.workspace.load_classifier(h.space)
        return {"job": job_id, "state": job["state"]}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        if job_id not in state.jobs:
            raise NotFoundError(f"unknown job {job_id!r}")
        return state.jobs[job_id]

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str, workspace: str | None = None):
        h, session = state.find_session(session_id, workspace)
        path = h.workspace.reports_dir / f"session_{session.id}.json"
        if not path.exists():
            raise NotFoundError(f"session {session_id} has no report")
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    return app
