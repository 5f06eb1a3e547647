"""Experiment harness: oracle annotator, condition comparison, reports.

Four conditions, each retrained over several seeds and reported as mean
test accuracy:

  base      original embeddings, original training set
  active    original embeddings, training set plus oracle-labeled
            uncertainty-sampled pool documents
  refined   embeddings refined from a full oracle keyword session
  combined  half keyword budget plus half document budget

The oracle stands in for a bilingual annotator: it accepts a neighbor
when the planted lexicon puts it in the keyword's group, rejects it
otherwise, and leaves unknown words alone.  t-tests compare each
condition's per-seed accuracies against the base mean.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .classifier import ConvTextClassifier
from .corpus import Document, training_arrays
from .embeddings import EmbeddingSpace
from .errors import NotFoundError, PreconditionError, SessionClosedError
from .refine import EmbeddingRefiner, FeedbackSet, RefineConfig, refine
from .salience import global_salience, select_keywords
from .sampling import augment_training_set, uncertainty_sample
from .session import (
    ACTION_ACCEPT,
    ACTION_REJECT,
    STATE_OPEN,
    NeighborCard,
    Session,
    SessionStore,
    apply_event,
    build_cards,
)
from .stats import single_sample_ttest
from .synth import OracleLexicon
from .workspace import Workspace

REPORT_FORMAT_VERSION = 1
DEFAULT_SEEDS = tuple(range(10))


# -- oracle ----------------------------------------------------------------


def oracle_feedback(card: NeighborCard, lexicon: OracleLexicon) -> list[tuple[int, str]]:
    """Marks for one card: accept same-group words, reject the rest.

    Words outside the lexicon (and every card of a keyword outside it)
    stay unmarked.
    """
    kg = lexicon.group_of(card.surface, card.lang)
    if kg is None:
        return []
    marks = []
    for entry in card.entries():
        g = lexicon.group_of(entry.surface, entry.lang)
        if g is None:
            continue
        marks.append((entry.word_id, ACTION_ACCEPT if g == kg else ACTION_REJECT))
    return marks


def oracle_feedback_set(cards: list[NeighborCard], lexicon: OracleLexicon) -> FeedbackSet:
    """Fold oracle marks over all cards without going through a session."""
    fs = FeedbackSet()
    for card in cards:
        for wid, action in oracle_feedback(card, lexicon):
            if action == ACTION_ACCEPT:
                fs.add_positive(card.keyword_id, wid)
            else:
                fs.add_negative(card.keyword_id, wid)
    return fs


def run_oracle_session(
    store: SessionStore,
    lexicon: OracleLexicon,
    s: int = 50,
    k: int = 5,
    space: EmbeddingSpace | None = None,
    clf: ConvTextClassifier | None = None,
) -> Session:
    """Create a session and submit every oracle mark through the log."""
    ws = store.workspace
    if space is None:
        space = ws.load_space()
    if clf is None:
        clf = ws.load_classifier(space)
    session = store.create(s=s, k=k, space=space, clf=clf)
    for card in session.cards:
        for wid, action in oracle_feedback(card, lexicon):
            store.submit_mark(session, space.vocab, card.keyword_id, wid, action)
    return session


def select_docs(pool: list[Document], ids: list[str]) -> list[Document]:
    """Pool documents by id, with their ground-truth labels revealed."""
    by_id = {doc.id: doc for doc in pool}
    out = []
    for doc_id in ids:
        if doc_id not in by_id:
            raise NotFoundError(f"document {doc_id!r} not in pool")
        doc = by_id[doc_id]
        if doc.label is None:
            raise PreconditionError(f"document {doc_id!r} has no ground-truth label")
        out.append(doc)
    return out


# -- retraining ------------------------------------------------------------


def train_and_score(
    matrix: np.ndarray,
    X_train: list[list[int]],
    y_train: list[int],
    X_test: list[list[int]],
    y_test: list[int],
    seed: int,
    **clf_kwargs,
) -> float:
    clf = ConvTextClassifier(embeddings=matrix, seed=seed, **clf_kwargs)
    clf.fit(X_train, y_train)
    return clf.score(X_test, y_test)


def _mean(xs: list[float]) -> float:
    return float(np.mean(xs))


def build_report(
    conditions: dict[str, list[float]],
    seeds: list[int],
    timing_seconds: float,
    base_name: str = "base",
) -> dict:
    """Assemble accuracies into the report format; t-tests are vs base mean.

    A zero-variance sample has no t statistic; such entries are null.
    """
    if base_name not in conditions:
        raise PreconditionError(f"report needs a {base_name!r} condition")
    base_mean = _mean(conditions[base_name])
    out_conditions = {}
    deltas = {}
    ttests: dict[str, dict | None] = {}
    for name, accs in conditions.items():
        out_conditions[name] = {"accuracies": [float(a) for a in accs], "mean": _mean(accs)}
        deltas[name] = _mean(accs) - base_mean
        if name == base_name:
            continue
        try:
            res = single_sample_ttest(accs, base_mean)
            ttests[name] = {"t": res.t, "p": res.p, "df": res.df}
        except PreconditionError:
            ttests[name] = None
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "seeds": [int(s) for s in seeds],
        "base_condition": base_name,
        "conditions": out_conditions,
        "deltas_vs_base": deltas,
        "ttests": ttests,
        "timing_seconds": timing_seconds,
    }


def report_signature(report: dict) -> dict:
    """The report minus wall-clock timing; equal signatures mean equal runs."""
    return {k: v for k, v in report.items() if k != "timing_seconds"}


def save_report(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def report_tsv(report: dict) -> str:
    """One line per condition: name, mean, delta vs base, t, p, df."""
    lines = ["condition\tmean\tdelta_vs_base\tt\tp\tdf"]
    for name in report["conditions"]:
        mean = report["conditions"][name]["mean"]
        delta = report["deltas_vs_base"][name]
        tt = report["ttests"].get(name)
        if tt is None:
            t = p = df = "-"
        else:
            t, p, df = f"{tt['t']:.4f}", f"{tt['p']:.6f}", str(tt["df"])
        lines.append(f"{name}\t{mean:.4f}\t{delta:+.4f}\t{t}\t{p}\t{df}")
    return "\n".join(lines) + "\n"


# -- condition experiment --------------------------------------------------


def _load_eval_inputs(ws: Workspace, space: EmbeddingSpace):
    train = ws.load_docs("train", space.vocab)
    test = ws.load_docs("test", space.vocab)
    pool = ws.load_docs("unlabeled", space.vocab)
    lex_path = ws.lexicon_path()
    if lex_path is None:
        raise PreconditionError("workspace has no oracle lexicon")
    return train, test, pool, OracleLexicon.load(lex_path)


def run_conditions(
    ws: Workspace,
    s: int = 50,
    k: int = 5,
    n_docs: int = 50,
    combined_s: int = 25,
    combined_docs: int = 25,
    seeds=DEFAULT_SEEDS,
    refine_config: RefineConfig | None = None,
    **clf_kwargs,
) -> dict:
    """Retrain all four conditions over the seeds and report mean accuracy.

    Never mutates the workspace: refined matrices live only in the report
    run, and `current` stays whatever it was.
    """
    t0 = time.perf_counter()
    refine_config = refine_config or RefineConfig()
    seeds = [int(x) for x in seeds]
    space = ws.load_space()
    train, test, pool, lexicon = _load_eval_inputs(ws, space)
    X_test, y_test = training_arrays(test)
    X_base, y_base = training_arrays(train)
    base_matrix = space.original

    # Ranking, cards, and document sampling all use one reference model.
    clf0 = ws.load_classifier(space)
    table = global_salience(clf0, train)
    ranking = select_keywords(table, s, ws.src_lang, space.vocab)
    cards = build_cards(space, ranking, k, (ws.src_lang, ws.tgt_lang))
    feedback = oracle_feedback_set(cards, lexicon)
    if feedback.is_empty():
        raise PreconditionError("oracle produced no marks; lexicon may not match")

    picked = uncertainty_sample(clf0, pool, n_docs)
    active_docs = select_docs(pool, picked)
    X_active, y_active = training_arrays(augment_training_set(train, active_docs))

    cfg = {
        "lam": refine_config.lam,
        "steps": refine_config.steps,
        "learning_rate": refine_config.learning_rate,
        "beta1": refine_config.beta1,
        "beta2": refine_config.beta2,
        "eps": refine_config.eps,
    }
    refined_full = EmbeddingRefiner(**cfg).fit(base_matrix, feedback).embedding_

    kw25 = ranking.word_ids()[:combined_s]
    feedback25 = feedback.truncated(kw25)
    if feedback25.is_empty():
        raise PreconditionError("combined condition has no marks after truncation")
    refined_half = EmbeddingRefiner(**cfg).fit(base_matrix, feedback25).embedding_
    picked25 = uncertainty_sample(clf0, pool, combined_docs)
    combined_docs_list = select_docs(pool, picked25)
    X_comb, y_comb = training_arrays(augment_training_set(train, combined_docs_list))

    runs = {
        "base": (base_matrix, X_base, y_base),
        "active": (base_matrix, X_active, y_active),
        "refined": (refined_full, X_base, y_base),
        "combined": (refined_half, X_comb, y_comb),
    }
    accs = {
        name: [
            train_and_score(m, X, y, X_test, y_test, seed, **clf_kwargs)
            for seed in seeds
        ]
        for name, (m, X, y) in runs.items()
    }
    return build_report(accs, seeds, time.perf_counter() - t0)


def keyword_curve(
    ws: Workspace,
    feedback: FeedbackSet,
    ranking_ids: list[int],
    s_values,
    seeds=DEFAULT_SEEDS,
    refine_config: RefineConfig | None = None,
    **clf_kwargs,
) -> dict:
    """Mean accuracy per keyword budget; every point refines from scratch.

    s=0 skips refinement entirely, so that point is the base condition.
    """
    t0 = time.perf_counter()
    refine_config = refine_config or RefineConfig()
    seeds = [int(x) for x in seeds]
    space = ws.load_space()
    train = ws.load_docs("train", space.vocab)
    test = ws.load_docs("test", space.vocab)
    X_train, y_train = training_arrays(train)
    X_test, y_test = training_arrays(test)
    base_matrix = space.original

    cfg = {
        "lam": refine_config.lam,
        "steps": refine_config.steps,
        "learning_rate": refine_config.learning_rate,
        "beta1": refine_config.beta1,
        "beta2": refine_config.beta2,
        "eps": refine_config.eps,
    }
    points = []
    for s in sorted(int(v) for v in set(s_values)):
        if s < 0 or s > len(ranking_ids):
            raise PreconditionError(f"s={s} exceeds the {len(ranking_ids)} ranked keywords")
        if s == 0:
            matrix = base_matrix
        else:
            fs = feedback.truncated(ranking_ids[:s])
            if fs.is_empty():
                matrix = base_matrix
            else:
                matrix = EmbeddingRefiner(**cfg).fit(base_matrix, fs).embedding_
        accs = [
            train_and_score(matrix, X_train, y_train, X_test, y_test, seed, **clf_kwargs)
            for seed in seeds
        ]
        points.append({"s": s, "accuracies": accs, "mean": _mean(accs)})
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "seeds": seeds,
        "points": points,
        "timing_seconds": time.perf_counter() - t0,
    }


def neighbor_shift_report(
    space: EmbeddingSpace,
    before: np.ndarray,
    after: np.ndarray,
    feedback: FeedbackSet,
    k: int = 5,
) -> dict:
    """Per-keyword neighbor lists before and after, with per-mark deltas.

    A positive mark is satisfied when its cosine increased, a negative one
    when it decreased.  The space's current matrix is restored on exit.
    """
    saved = space.current.copy()
    out = []
    try:
        for kid in feedback.keywords():
            ref = space.vocab.ref(kid)
            space.set_current(before)
            nb_before = space.nearest_neighbors(kid, k)
            cos_before = {
                wid: _safe_cosine(before, kid, wid)
                for wid in sorted(feedback.positives[kid] | feedback.negatives[kid])
            }
            space.set_current(after)
            nb_after = space.nearest_neighbors(kid, k)
            marks = []
            for wid, cb in cos_before.items():
                ca = _safe_cosine(after, kid, wid)
                positive = wid in feedback.positives[kid]
                delta = ca - cb
                wref = space.vocab.ref(wid)
                marks.append(
                    {
                        "surface": wref.surface,
                        "lang": wref.lang,
                        "mark": "positive" if positive else "negative",
                        "cosine_before": cb,
                        "cosine_after": ca,
                        "delta": delta,
                        "satisfied": delta > 0 if positive else delta < 0,
                    }
                )
            out.append(
                {
                    "keyword": {"surface": ref.surface, "lang": ref.lang},
                    "before": _neighbor_dicts(space, nb_before),
                    "after": _neighbor_dicts(space, nb_after),
                    "marks": marks,
                }
            )
    finally:
        space.set_current(saved)
    return {"format_version": REPORT_FORMAT_VERSION, "k": k, "keywords": out}


def _safe_cosine(matrix: np.ndarray, a: int, b: int) -> float:
    u, v = matrix[a], matrix[b]
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def _neighbor_dicts(space: EmbeddingSpace, neighbors: list[tuple[int, float]]) -> list[dict]:
    return [
        {
            "surface": space.vocab.surfaces[wid],
            "lang": space.vocab.langs[wid],
            "cosine": sim,
        }
        for wid, sim in neighbors
    ]


# -- session finalize ------------------------------------------------------


def finalize_session(
    store: SessionStore,
    session: Session,
    space: EmbeddingSpace | None = None,
    refine_config: RefineConfig | None = None,
    seeds=DEFAULT_SEEDS,
) -> dict:
    """Refine, install, retrain, and report; closes the session.

    The refinement runs before anything is logged or installed, so a
    refine failure leaves both the workspace and the session untouched
    (and the session open).
    """
    ws = store.workspace
    if session.state != STATE_OPEN:
        raise SessionClosedError(f"session {session.id} is {session.state}")
    if session.feedback.is_empty():
        raise PreconditionError("cannot finalize a session with no marks")
    refine_config = refine_config or RefineConfig()
    seeds = [int(x) for x in seeds]
    if space is None:
        space = ws.load_space()

    t0 = time.perf_counter()
    trace = refine(space, session.feedback, refine_config)

    store.log_finalize(
        session,
        {"refine": asdict(refine_config), "eval": {"seeds": seeds}},
    )
    new_round = ws.install_refined(space)
    store.log_refine_done(
        session,
        {
            "round": new_round,
            "initial_cost": trace[0],
            "final_cost": trace[-1],
            "updated_rows": len(session.feedback.constrained_rows()),
        },
    )

    # Canonical model for the next session's ranking.
    ws.train_classifier(space=space, seed=0)

    report = _session_report(
        ws, space, seeds, session.id, new_round, time.perf_counter() - t0
    )
    rel = f"reports/session_{session.id}.json"
    save_report(report, ws.path(rel))
    store.log_retrain_done(
        session, {"params": ws.manifest["params"], "report": rel}
    )
    return report


def _session_report(
    ws: Workspace,
    space: EmbeddingSpace,
    seeds: list[int],
    session_id: str,
    refined_round: int,
    timing_seconds: float,
) -> dict:
    """Base-versus-refined retraining report for one finalized session."""
    train = ws.load_docs("train", space.vocab)
    test = ws.load_docs("test", space.vocab)
    X_train, y_train = training_arrays(train)
    X_test, y_test = training_arrays(test)
    accs = {
        "base": [
            train_and_score(space.original, X_train, y_train, X_test, y_test, seed)
            for seed in seeds
        ],
        "refined": [
            train_and_score(space.current, X_train, y_train, X_test, y_test, seed)
            for seed in seeds
        ],
    }
    report = build_report(accs, seeds, timing_seconds)
    report["session"] = session_id
    report["refined_from"] = {"round": refined_round - 1}
    return report


def _replay_fold(store: SessionStore, session_id: str) -> tuple[Session, dict, dict]:
    """Fold the log and pull out the finalize/refine_done payloads."""
    session: Session | None = None
    finalize_payload = None
    refine_done_payload = None
    for record in store.events(session_id):
        session = apply_event(session, record["kind"], record["payload"])
        if record["kind"] == "finalize":
            finalize_payload = record["payload"]
        elif record["kind"] == "refine_done":
            refine_done_payload = record["payload"]
    if session is None:
        raise PreconditionError(f"session {session_id!r} has an empty event log")
    if finalize_payload is None or refine_done_payload is None:
        raise PreconditionError(f"session {session_id!r} was never finalized")
    return session, finalize_payload, refine_done_payload


def replay_refined_matrix(store: SessionStore, session_id: str) -> np.ndarray:
    """Recompute the refined matrix a finalized session's log describes.

    Uses only logged inputs: the embedding files recorded at create time,
    the folded feedback, and the refine config from the finalize event.
    The result is round-tripped through the text serialization, exactly as
    `install_refined` does, so it compares bit-for-bit against the
    installed round's files.
    """
    import io

    session, finalize_payload, _ = _replay_fold(store, session_id)
    ws = store.workspace
    base = EmbeddingSpace()
    for lang in (session.src_lang, session.tgt_lang):
        base.load_text(ws.path(session.embedding_files[lang]), lang)
    config = RefineConfig(**finalize_payload["refine"])
    refined = EmbeddingRefiner(
        lam=config.lam,
        steps=config.steps,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
    ).fit(base.current, session.feedback)
    base.set_current(refined.embedding_)
    rt = EmbeddingSpace()
    for lang in (session.src_lang, session.tgt_lang):
        buf = io.StringIO()
        base.save_text(buf, "current", lang=lang)
        rt.load_text(io.StringIO(buf.getvalue()), lang)
    return rt.current


def replay_session_report(store: SessionStore, session_id: str) -> dict:
    """Rebuild a finalized session's report from logged inputs only."""
    _, finalize_payload, refine_done = _replay_fold(store, session_id)
    ws = store.workspace
    space = ws.space_at_round(refine_done["round"])
    return _session_report(
        ws,
        space,
        [int(s) for s in finalize_payload["eval"]["seeds"]],
        session_id,
        refine_done["round"],
        0.0,
    )
