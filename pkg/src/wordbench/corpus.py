"""Tokenized documents and the JSON-lines corpus format.

One document per line: {"id": str, "lang": str, "text": str, "label": 0|1|null}.
Tokenization is deliberately simple: lowercase, split on whitespace, strip
surrounding punctuation, drop anything outside the vocabulary.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .embeddings import Vocabulary
from .errors import FormatError, PreconditionError

_STRIP = string.punctuation


@dataclass
class Document:
    id: str
    lang: str
    text: str
    label: int | None
    tokens: list[int] = field(default_factory=list)
    oov_count: int = 0

    @property
    def labeled(self) -> bool:
        return self.label is not None


def tokenize(text: str, vocab: Vocabulary, lang: str) -> tuple[list[int], int]:
    """Map raw text to vocab ids; returns (ids, count of dropped OOV tokens)."""
    ids: list[int] = []
    oov = 0
    for raw in text.lower().split():
        tok = raw.strip(_STRIP)
        if not tok:
            continue
        idx = vocab.get(tok, lang)
        if idx is None:
            oov += 1
        else:
            ids.append(idx)
    return ids, oov


def load_corpus(path: str | Path, vocab: Vocabulary | None = None) -> list[Document]:
    """Read a JSONL corpus; tokenizes against `vocab` when given."""
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            for key in ("id", "lang", "text"):
                if key not in rec:
                    raise FormatError(f"{path}:{lineno}: missing field {key!r}")
            label = rec.get("label")
            if label not in (0, 1, None):
                raise FormatError(f"{path}:{lineno}: label must be 0, 1 or null")
            if rec["id"] in seen:
                raise FormatError(f"{path}:{lineno}: duplicate document id {rec['id']!r}")
            seen.add(rec["id"])
            doc = Document(id=rec["id"], lang=rec["lang"], text=rec["text"], label=label)
            if vocab is not None:
                doc.tokens, doc.oov_count = tokenize(doc.text, vocab, doc.lang)
            docs.append(doc)
    return docs


def save_corpus(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            rec = {"id": doc.id, "lang": doc.lang, "text": doc.text, "label": doc.label}
            fh.write(json.dumps(rec) + "\n")


def training_arrays(docs: list[Document]) -> tuple[list[list[int]], list[int]]:
    """Split labeled docs into (token sequences, labels) for the classifier.

    Rejects unlabeled or fully-OOV documents rather than silently dropping
    them; callers filter first if that is what they want.
    """
    X: list[list[int]] = []
    y: list[int] = []
    for doc in docs:
        if doc.label is None:
            raise PreconditionError(f"document {doc.id!r} has no label")
        if not doc.tokens:
            raise PreconditionError(f"document {doc.id!r} has no in-vocabulary tokens")
        X.append(doc.tokens)
        y.append(doc.label)
    return X, y
