"""Self-contained project directory: embeddings, corpora, model, sessions.

A workspace copies its input files at creation time, so later refinement
rounds and replays never depend on paths outside the directory.  The
manifest records every referenced file; `original` embedding files are
written once and never touched again, while each refinement round adds a
new pair of `current` files and bumps the round counter.

Layout under the root:
  workspace.json            manifest
  embeddings/original.<lang>.vec
  embeddings/current_r<r>.<lang>.vec
  corpus/{train,test,unlabeled}.jsonl
  lexicon.json              optional oracle ground truth
  models/params_r<r>.npz
  sessions/                 per-session event logs
  reports/                  evaluation reports
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from .classifier import ConvTextClassifier
from .corpus import Document, load_corpus, training_arrays
from .embeddings import EmbeddingSpace, Vocabulary
from .errors import FormatError, NotFoundError, PreconditionError

MANIFEST_VERSION = 1
MANIFEST_NAME = "workspace.json"


class Workspace:
    def __init__(self, root: Path, manifest: dict):
        self.root = Path(root)
        self.manifest = manifest

    # -- creation / loading ----------------------------------------------

    @classmethod
    def create(
        cls,
        root: str | Path,
        src_emb: str | Path,
        tgt_emb: str | Path,
        src_lang: str,
        tgt_lang: str,
        train: str | Path,
        test: str | Path | None = None,
        unlabeled: str | Path | None = None,
        lexicon: str | Path | None = None,
    ) -> "Workspace":
        root = Path(root)
        if (root / MANIFEST_NAME).exists():
            raise PreconditionError(f"workspace already exists at {root}")
        if src_lang == tgt_lang:
            raise PreconditionError("languages must differ")
        (root / "embeddings").mkdir(parents=True, exist_ok=True)
        (root / "corpus").mkdir(exist_ok=True)
        (root / "models").mkdir(exist_ok=True)
        (root / "sessions").mkdir(exist_ok=True)
        (root / "reports").mkdir(exist_ok=True)

        emb_rel = {}
        for lang, src_path in ((src_lang, src_emb), (tgt_lang, tgt_emb)):
            rel = f"embeddings/original.{lang}.vec"
            shutil.copyfile(src_path, root / rel)
            emb_rel[lang] = rel
        corpora = {}
        for name, path in (("train", train), ("test", test), ("unlabeled", unlabeled)):
            if path is None:
                corpora[name] = None
            else:
                rel = f"corpus/{name}.jsonl"
                shutil.copyfile(path, root / rel)
                corpora[name] = rel
        lex_rel = None
        if lexicon is not None:
            lex_rel = "lexicon.json"
            shutil.copyfile(lexicon, root / lex_rel)

        manifest = {
            "version": MANIFEST_VERSION,
            "src_lang": src_lang,
            "tgt_lang": tgt_lang,
            "round": 0,
            "embeddings": {"original": emb_rel, "current": dict(emb_rel)},
            "corpora": corpora,
            "lexicon": lex_rel,
            "params": None,
            "config": {
                "src_emb": Path(src_emb).name,
                "tgt_emb": Path(tgt_emb).name,
            },
        }
        ws = cls(root, manifest)
        ws._save_manifest()
        # Fail fast on malformed inputs.
        ws.load_space()
        return ws

    @classmethod
    def load(cls, root: str | Path) -> "Workspace":
        root = Path(root)
        manifest_path = root / MANIFEST_NAME
        if not manifest_path.exists():
            raise NotFoundError(f"no workspace at {root}")
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("version") != MANIFEST_VERSION:
            raise FormatError(f"unsupported workspace version in {manifest_path}")
        ws = cls(root, manifest)
        for rel in ws._referenced_files():
            if not (root / rel).exists():
                raise FormatError(f"workspace file missing: {rel}")
        return ws

    def _referenced_files(self) -> list[str]:
        m = self.manifest
        rels = list(m["embeddings"]["original"].values())
        rels += list(m["embeddings"]["current"].values())
        rels += [p for p in m["corpora"].values() if p]
        if m.get("lexicon"):
            rels.append(m["lexicon"])
        if m.get("params"):
            rels.append(m["params"])
        return rels

    def _save_manifest(self) -> None:
        with open(self.root / MANIFEST_NAME, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    # -- accessors --------------------------------------------------------

    @property
    def src_lang(self) -> str:
        return self.manifest["src_lang"]

    @property
    def tgt_lang(self) -> str:
        return self.manifest["tgt_lang"]

    @property
    def round(self) -> int:
        return self.manifest["round"]

    @property
    def sessions_dir(self) -> Path:
        return self.root / "sessions"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    def path(self, rel: str) -> Path:
        return self.root / rel

    def has_classifier(self) -> bool:
        return self.manifest.get("params") is not None

    def lexicon_path(self) -> Path | None:
        rel = self.manifest.get("lexicon")
        return self.root / rel if rel else None

    # -- embeddings -------------------------------------------------------

    def _current_files(self, r: int) -> dict[str, str]:
        if r == 0:
            return dict(self.manifest["embeddings"]["original"])
        return {
            lang: f"embeddings/current_r{r}.{lang}.vec"
            for lang in (self.src_lang, self.tgt_lang)
        }

    def space_at_round(self, r: int) -> EmbeddingSpace:
        """Vocab and `original` from the original files, `current` from round r."""
        m = self.manifest["embeddings"]
        space = EmbeddingSpace()
        for lang in (self.src_lang, self.tgt_lang):
            space.load_text(self.path(m["original"][lang]), lang)
        files = self._current_files(r)
        for rel in files.values():
            if not self.path(rel).exists():
                raise NotFoundError(f"no embeddings stored for round {r}")
        if files != m["original"]:
            cur = EmbeddingSpace()
            for lang in (self.src_lang, self.tgt_lang):
                cur.load_text(self.path(files[lang]), lang)
            if (
                cur.vocab.surfaces != space.vocab.surfaces
                or cur.vocab.langs != space.vocab.langs
            ):
                raise FormatError("current embedding files disagree with original vocabulary")
            space.set_current(cur.current)
        return space

    def load_space(self) -> EmbeddingSpace:
        return self.space_at_round(self.round)

    def install_refined(self, space: EmbeddingSpace) -> int:
        """Persist `space.current` as the next round's embeddings.

        The matrix is re-read from the written files so that the in-memory
        space matches the serialized (6-decimal) state exactly; everything
        downstream of a refinement then behaves the same whether the
        process kept running or restarted.  The original files are never
        rewritten.  The trained model becomes stale and is cleared until
        the next retrain.
        """
        r = self.round + 1
        current = {}
        for lang in (self.src_lang, self.tgt_lang):
            rel = f"embeddings/current_r{r}.{lang}.vec"
            space.save_text(self.path(rel), "current", lang=lang)
            current[lang] = rel
        reloaded = EmbeddingSpace()
        for lang in (self.src_lang, self.tgt_lang):
            reloaded.load_text(self.path(current[lang]), lang)
        space.set_current(reloaded.current)
        self.manifest["round"] = r
        self.manifest["embeddings"]["current"] = current
        self.manifest["params"] = None
        self._save_manifest()
        return r

    # -- corpora ----------------------------------------------------------

    def load_docs(self, which: str, vocab: Vocabulary | None = None) -> list[Document]:
        rel = self.manifest["corpora"].get(which)
        if rel is None:
            raise NotFoundError(f"workspace has no {which!r} corpus")
        return load_corpus(self.path(rel), vocab)

    # -- model ------------------------------------------------------------

    def train_classifier(
        self, space: EmbeddingSpace | None = None, seed: int = 0, **clf_kwargs
    ) -> ConvTextClassifier:
        """Train on the train corpus against `current` and persist the params."""
        if space is None:
            space = self.load_space()
        docs = self.load_docs("train", space.vocab)
        X, y = training_arrays(docs)
        clf = ConvTextClassifier(embeddings=space, seed=seed, **clf_kwargs)
        clf.fit(X, y)
        rel = f"models/params_r{self.round}.npz"
        clf.save(self.path(rel))
        self.manifest["params"] = rel
        self._save_manifest()
        return clf

    def load_classifier(self, space: EmbeddingSpace | None = None) -> ConvTextClassifier:
        rel = self.manifest.get("params")
        if rel is None:
            raise PreconditionError("workspace has no trained model")
        if space is None:
            space = self.load_space()
        return ConvTextClassifier.load(self.path(rel), embeddings=space)
