"""Command-line entry points.

Every pipeline the HTTP service can run is also reachable here without a
browser: the `session` subcommand drives a whole annotation round with
the synthetic oracle.  Exit codes: 0 success, 1 precondition or runtime
failure, 2 usage errors (from argparse).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .embeddings import EmbeddingSpace
from .errors import PreconditionError, WordbenchError
from .evaluation import (
    finalize_session,
    keyword_curve,
    oracle_feedback_set,
    report_tsv,
    run_conditions,
    run_oracle_session,
    save_report,
    select_docs,
)
from .corpus import load_corpus, save_corpus
from .refine import FeedbackSet, RefineConfig, refine
from .salience import global_salience, select_keywords
from .sampling import uncertainty_sample
from .session import DEFAULT_KEYWORDS, DEFAULT_NEIGHBORS, SessionStore, build_cards
from .synth import OracleLexicon, SyntheticTaskSpec, generate_task
from .workspace import MANIFEST_NAME, Workspace

DATA_ENV = "WORDBENCH_DATA"


# -- helpers ---------------------------------------------------------------


def _load_workspace(path: str) -> Workspace:
    return Workspace.load(path)


def _workspace_lexicon(ws: Workspace) -> OracleLexicon:
    lex = ws.lexicon_path()
    if lex is None:
        raise PreconditionError("workspace has no oracle lexicon")
    return OracleLexicon.load(lex)


def _refine_config(args) -> RefineConfig:
    return RefineConfig(lam=args.lam, steps=args.steps)


# -- subcommands -----------------------------------------------------------


def cmd_synth(args) -> int:
    spec = SyntheticTaskSpec(
        dim=args.dim,
        corruption=args.corruption,
        n_train=args.train_docs,
        n_test=args.test_docs,
        n_unlabeled=args.pool_docs,
        seed=args.seed,
    )
    paths = generate_task(spec, args.out)
    print(f"synthetic task written to {args.out}")
    for name in ("src_emb", "tgt_emb", "train", "test", "unlabeled", "lexicon", "task"):
        print(f"  {getattr(paths, name)}")
    return 0


def cmd_train(args) -> int:
    root = Path(args.workspace)
    if (root / MANIFEST_NAME).exists():
        ws = Workspace.load(root)
    else:
        needed = {
            "--src-emb": args.src_emb,
            "--tgt-emb": args.tgt_emb,
            "--src-lang": args.src_lang,
            "--tgt-lang": args.tgt_lang,
            "--train": args.train,
        }
        missing = [flag for flag, val in needed.items() if val is None]
        if missing:
            raise PreconditionError(
                f"new workspace needs {' '.join(missing)} (or point --workspace at an existing one)"
            )
        ws = Workspace.create(
            root,
            src_emb=args.src_emb,
            tgt_emb=args.tgt_emb,
            src_lang=args.src_lang,
            tgt_lang=args.tgt_lang,
            train=args.train,
            test=args.test,
            unlabeled=args.unlabeled,
            lexicon=args.lexicon,
        )
    space = ws.load_space()
    clf = ws.train_classifier(space=space, seed=args.seed, epochs=args.epochs)
    train_docs = ws.load_docs("train", space.vocab)
    acc = clf.score([d.tokens for d in train_docs], [d.label for d in train_docs])
    print(f"train accuracy {acc:.4f} over {len(train_docs)} documents")
    if ws.manifest["corpora"].get("test"):
        test_docs = ws.load_docs("test", space.vocab)
        acc = clf.score([d.tokens for d in test_docs], [d.label for d in test_docs])
        print(f"test accuracy {acc:.4f} over {len(test_docs)} documents")
    print(f"model saved to {ws.path(ws.manifest['params'])}")
    return 0


def cmd_rank(args) -> int:
    ws = _load_workspace(args.workspace)
    space = ws.load_space()
    clf = ws.load_classifier(space)
    docs = ws.load_docs("train", space.vocab)
    table = global_salience(clf, docs)
    ranking = select_keywords(table, args.top, ws.src_lang, space.vocab)
    lines = [
        f"{space.vocab.surfaces[wid]}\t{space.vocab.langs[wid]}\t{score:.6f}"
        for wid, score in ranking.items
    ]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{len(lines)} keywords -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_session(args) -> int:
    ws = _load_workspace(args.workspace)
    space = ws.load_space()
    clf = ws.load_classifier(space)
    store = SessionStore(ws)
    lexicon = _workspace_lexicon(ws)
    session = run_oracle_session(
        store, lexicon, s=args.s, k=args.k, space=space, clf=clf
    )
    print(
        f"session {session.id}: {session.feedback.n_marks()} oracle marks "
        f"on {len(session.cards)} cards"
    )
    if args.skip_finalize:
        return 0
    report = finalize_session(
        store,
        session,
        space=space,
        refine_config=_refine_config(args),
        seeds=range(args.n_seeds),
    )
    sys.stdout.write(report_tsv(report))
    return 0


def cmd_refine(args) -> int:
    if args.workspace:
        ws = _load_workspace(args.workspace)
        space = ws.load_space()
        src_lang, tgt_lang = ws.src_lang, ws.tgt_lang
    else:
        needed = {
            "--src-emb": args.src_emb,
            "--tgt-emb": args.tgt_emb,
            "--src-lang": args.src_lang,
            "--tgt-lang": args.tgt_lang,
        }
        missing = [flag for flag, val in needed.items() if val is None]
        if missing:
            raise PreconditionError(f"refine needs {' '.join(missing)} (or --workspace)")
        space = EmbeddingSpace()
        space.load_text(args.src_emb, args.src_lang)
        space.load_text(args.tgt_emb, args.tgt_lang)
        src_lang, tgt_lang = args.src_lang, args.tgt_lang
    feedback = FeedbackSet.load(args.feedback, space.vocab)
    trace = refine(space, feedback, _refine_config(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for lang in (src_lang, tgt_lang):
        path = out / f"refined.{lang}.vec"
        space.save_text(path, "current", lang=lang)
        print(f"wrote {path}")
    print(f"cost {trace[0]:.6f} -> {trace[-1]:.6f} over {len(trace) - 1} steps")
    return 0


def cmd_active(args) -> int:
    ws = _load_workspace(args.workspace)
    space = ws.load_space()
    clf = ws.load_classifier(space)
    if args.pool:
        pool = load_corpus(args.pool, space.vocab)
    else:
        pool = ws.load_docs("unlabeled", space.vocab)
    ids = uncertainty_sample(clf, pool, args.n)
    docs = select_docs(pool, ids)
    save_corpus(docs, args.out)
    print(f"{len(docs)} documents -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    ws = _load_workspace(args.workspace)
    seeds = range(args.n_seeds)
    report = run_conditions(
        ws,
        s=args.s,
        k=args.k,
        n_docs=args.docs,
        combined_s=args.combined_s,
        combined_docs=args.combined_docs,
        seeds=seeds,
    )
    if args.out:
        save_report(report, args.out)
        print(f"report -> {args.out}")
    tsv = report_tsv(report)
    sys.stdout.write(tsv)
    if args.tsv:
        Path(args.tsv).write_text(tsv, encoding="utf-8")

    if args.curve:
        s_values = [int(x) for x in args.curve.split(",")]
        space = ws.load_space()
        clf = ws.load_classifier(space)
        docs = ws.load_docs("train", space.vocab)
        table = global_salience(clf, docs)
        ranking = select_keywords(
            table, max([args.s] + s_values), ws.src_lang, space.vocab
        )
        cards = build_cards(space, ranking, args.k, (ws.src_lang, ws.tgt_lang))
        feedback = oracle_feedback_set(cards, _workspace_lexicon(ws))
        curve = keyword_curve(
            ws, feedback, ranking.word_ids(), s_values, seeds=seeds
        )
        for point in curve["points"]:
            print(f"s={point['s']}\tmean={point['mean']:.4f}")
        if args.curve_out:
            save_report(curve, args.curve_out)
            print(f"curve -> {args.curve_out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data = args.data or os.environ.get(DATA_ENV) or "."
    app = create_app(data)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: server failed to start ({exc})", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    ws = _load_workspace(args.workspace)
    store = SessionStore(ws)
    if args.session:
        sid = args.session
    else:
        done = [
            s
            for s in store.list_ids()
            if (ws.reports_dir / f"session_{s}.json").exists()
        ]
        if not done:
            raise PreconditionError("workspace has no session reports")
        sid = sorted(done, key=lambda s: (len(s), s))[-1]
    path = ws.reports_dir / f"session_{sid}.json"
    if not path.exists():
        raise PreconditionError(f"no report for session {sid}")
    text = path.read_text(encoding="utf-8")
    if args.json:
        sys.stdout.write(text)
    else:
        import json

        sys.stdout.write(report_tsv(json.loads(text)))
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordbench",
        description="Specialize cross-lingual word embeddings with keyword feedback.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic bilingual task")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--corruption", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--train-docs", type=int, default=120)
    p.add_argument("--test-docs", type=int, default=80)
    p.add_argument("--pool-docs", type=int, default=160)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="create/load a workspace and train the classifier")
    p.add_argument("--workspace", required=True)
    p.add_argument("--src-emb")
    p.add_argument("--tgt-emb")
    p.add_argument("--src-lang")
    p.add_argument("--tgt-lang")
    p.add_argument("--train", help="labeled source-language corpus (JSONL)")
    p.add_argument("--test", help="labeled target-language corpus (JSONL)")
    p.add_argument("--unlabeled", help="target-language pool (JSONL)")
    p.add_argument("--lexicon", help="oracle lexicon JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=30)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", help="rank keywords by salience (TSV)")
    p.add_argument("--workspace", required=True)
    p.add_argument("--top", type=int, default=DEFAULT_KEYWORDS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("session", help="run an oracle annotation session end to end")
    p.add_argument("--workspace", required=True)
    p.add_argument("--s", type=int, default=DEFAULT_KEYWORDS, help="keyword budget")
    p.add_argument("--k", type=int, default=DEFAULT_NEIGHBORS, help="neighbors per language")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument(
        "--skip-finalize", action="store_true", help="collect marks but do not refine"
    )
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("refine", help="refine embeddings against a feedback file")
    p.add_argument("--workspace")
    p.add_argument("--src-emb")
    p.add_argument("--tgt-emb")
    p.add_argument("--src-lang")
    p.add_argument("--tgt-lang")
    p.add_argument("--feedback", required=True, help="feedback JSON")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", required=True, help="output directory for refined files")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("active", help="select pool documents by uncertainty")
    p.add_argument("--workspace", required=True)
    p.add_argument("--pool", help="pool JSONL (default: workspace unlabeled corpus)")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_active)

    p = sub.add_parser("eval", help="run the four-condition comparison")
    p.add_argument("--workspace", required=True)
    p.add_argument("--s", type=int, default=50)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--docs", type=int, default=50)
    p.add_argument("--combined-s", type=int, default=25)
    p.add_argument("--combined-docs", type=int, default=25)
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--tsv", help="TSV summary path")
    p.add_argument("--curve", help="comma-separated keyword budgets, e.g. 0,10,20")
    p.add_argument("--curve-out", help="JSON path for the curve")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--data", help=f"data directory (default ${DATA_ENV} or .)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8764)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="print a stored session report")
    p.add_argument("--workspace", required=True)
    p.add_argument("--session", help="session id (default: latest with a report)")
    p.add_argument("--json", action="store_true", help="raw JSON instead of TSV")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WordbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
