"""Gradient-based keyword salience.

A token occurrence scores the Euclidean norm of the loss gradient with
respect to its embedding slot.  A word type's global score sums those
occurrence scores over the labeled corpus and multiplies by inverse document
frequency, ln(corpus size / document frequency), which zeroes out words that
appear in every document.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import ConvTextClassifier
from .corpus import Document
from .embeddings import Vocabulary
from .errors import PreconditionError


@dataclass
class SalienceTable:
    """Per-word global scores over one training corpus."""

    scores: dict[int, float]
    doc_freq: dict[int, int]
    corpus_size: int


@dataclass
class KeywordRanking:
    """Top keywords by global salience, highest first."""

    items: list[tuple[int, float]]  # (word id, score)
    s: int

    def word_ids(self) -> list[int]:
        return [w for w, _ in self.items]

    def truncated(self, s: int) -> "KeywordRanking":
        return KeywordRanking(self.items[:s], s)

    def __len__(self) -> int:
        return len(self.items)


def example_salience(
    clf: ConvTextClassifier, tokens: list[int], label: int
) -> np.ndarray:
    """Per-occurrence scores for one document: gradient norms per slot."""
    _, _, token_grads = clf.loss_and_gradients(tokens, label)
    return np.linalg.norm(token_grads, axis=1)


def global_salience(clf: ConvTextClassifier, docs: list[Document]) -> SalienceTable:
    """Aggregate occurrence scores into idf-weighted word-type scores.

    Documents are processed in ascending id order so the floating-point
    reduction is reproducible.
    """
    if not docs:
        raise PreconditionError("cannot rank keywords over an empty corpus")
    sums: dict[int, float] = {}
    doc_freq: dict[int, int] = {}
    for doc in sorted(docs, key=lambda d: d.id):
        if doc.label is None:
            raise PreconditionError(f"document {doc.id!r} has no label")
        occ = example_salience(clf, doc.tokens, doc.label)
        for tok, s in zip(doc.tokens, occ):
            sums[tok] = sums.get(tok, 0.0) + float(s)
        for tok in set(doc.tokens):
            doc_freq[tok] = doc_freq.get(tok, 0) + 1

    n = len(docs)
    scores = {
        tok: math.log(n / doc_freq[tok]) * total for tok, total in sums.items()
    }
    return SalienceTable(scores=scores, doc_freq=doc_freq, corpus_size=n)


def select_keywords(
    table: SalienceTable, s: int, lang: str, vocab: Vocabulary
) -> KeywordRanking:
    """Top-s strictly-positive scores restricted to `lang`.

    Equal scores order by ascending surface string; fewer than s words may
    qualify.
    """
    if s < 1:
        raise PreconditionError("keyword count must be >= 1")
    candidates = [
        (wid, score)
        for wid, score in table.scores.items()
        if score > 0.0 and vocab.langs[wid] == lang
    ]
    candidates.sort(key=lambda ws: (-ws[1], vocab.surfaces[ws[0]]))
    return KeywordRanking(items=candidates[:s], s=s)
