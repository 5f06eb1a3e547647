"""Fit embeddings to accept/reject feedback.

Each keyword carries a positive and a negative word set.  The objective
rewards dot-product similarity with positives, penalizes it with negatives,
and adds a drift penalty that anchors every row to its pre-refinement value:

    cost(E) = sum_k ( sum_neg E_k.E_n  -  sum_pos E_k.E_p )
              + lam * sum_w ||E0_w - E_w||^2

Minimized with full-batch Adam.  Only rows that appear in some constraint are
ever updated; unconstrained rows start at their anchor where their gradient
is exactly zero, so restricting the update set changes nothing and keeps
untouched rows bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .embeddings import EmbeddingSpace, Vocabulary, WordRef
from .errors import FormatError, PreconditionError
from .optim import Adam
from .validation import as_matrix, check_same_shape


@dataclass
class FeedbackSet:
    """Positive and negative word-id sets per keyword, in keyword order."""

    positives: dict[int, set[int]] = field(default_factory=dict)
    negatives: dict[int, set[int]] = field(default_factory=dict)

    def add_keyword(self, keyword: int) -> None:
        self.positives.setdefault(keyword, set())
        self.negatives.setdefault(keyword, set())

    def add_positive(self, keyword: int, word: int) -> None:
        self._add(keyword, word, positive=True)

    def add_negative(self, keyword: int, word: int) -> None:
        self._add(keyword, word, positive=False)

    def _add(self, keyword: int, word: int, positive: bool) -> None:
        if word == keyword:
            raise PreconditionError("a keyword cannot be marked against itself")
        self.add_keyword(keyword)
        target = self.positives if positive else self.negatives
        other = self.negatives if positive else self.positives
        other[keyword].discard(word)
        target[keyword].add(word)

    def keywords(self) -> list[int]:
        return list(self.positives)

    def constrained_rows(self) -> list[int]:
        rows: set[int] = set()
        for k in self.positives:
            rows.add(k)
            rows.update(self.positives[k])
            rows.update(self.negatives[k])
        return sorted(rows)

    def n_marks(self) -> int:
        return sum(len(p) for p in self.positives.values()) + sum(
            len(n) for n in self.negatives.values()
        )

    def is_empty(self) -> bool:
        return self.n_marks() == 0

    def truncated(self, keywords: list[int]) -> "FeedbackSet":
        """Keep only the given keywords, preserving their order."""
        fs = FeedbackSet()
        for k in keywords:
            if k in self.positives:
                fs.positives[k] = set(self.positives[k])
                fs.negatives[k] = set(self.negatives[k])
        return fs

    def validate(self, n_words: int) -> None:
        for k in self.positives:
            if not 0 <= k < n_words:
                raise PreconditionError(f"keyword id {k} outside vocabulary")
            overlap = self.positives[k] & self.negatives[k]
            if overlap:
                raise PreconditionError(
                    f"words {sorted(overlap)} are both positive and negative for keyword {k}"
                )
            for w in self.positives[k] | self.negatives[k]:
                if not 0 <= w < n_words:
                    raise PreconditionError(f"word id {w} outside vocabulary")
                if w == k:
                    raise PreconditionError("a keyword cannot be marked against itself")

    # -- JSON interchange ------------------------------------------------

    def to_json(self, vocab: Vocabulary) -> dict:
        entries = []
        for k in self.positives:
            ref = vocab.ref(k)
            entries.append(
                {
                    "keyword": {"word": ref.surface, "lang": ref.lang},
                    "positive": [_ref_dict(vocab.ref(w)) for w in sorted(self.positives[k])],
                    "negative": [_ref_dict(vocab.ref(w)) for w in sorted(self.negatives[k])],
                }
            )
        return {"keywords": entries}

    @classmethod
    def from_json(cls, payload: dict, vocab: Vocabulary) -> "FeedbackSet":
        if "keywords" not in payload:
            raise FormatError("feedback JSON must have a 'keywords' list")
        fs = cls()
        for entry in payload["keywords"]:
            try:
                kw = entry["keyword"]
                k = vocab.id_of(kw["word"], kw["lang"])
                fs.add_keyword(k)
                for item in entry.get("positive", []):
                    fs.add_positive(k, vocab.id_of(item["word"], item["lang"]))
                for item in entry.get("negative", []):
                    fs.add_negative(k, vocab.id_of(item["word"], item["lang"]))
            except (KeyError, TypeError) as exc:
                raise FormatError(f"malformed feedback entry: {exc}") from None
        return fs

    @classmethod
    def load(cls, path: str | Path, vocab: Vocabulary) -> "FeedbackSet":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh), vocab)

    def save(self, path: str | Path, vocab: Vocabulary) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(vocab), fh, indent=2)


def _ref_dict(ref: WordRef) -> dict:
    return {"word": ref.surface, "lang": ref.lang}


@dataclass
class RefineConfig:
    lam: float = 1.0
    steps: int = 100
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise PreconditionError("lambda must be >= 0")
        if self.steps < 1:
            raise PreconditionError("steps must be >= 1")


# -- objective ---------------------------------------------------------------


def feedback_cost(E: np.ndarray, feedback: FeedbackSet) -> float:
    """Negative-pair dot products minus positive-pair dot products."""
    E = as_matrix(E, "E")
    total = 0.0
    for k in feedback.positives:
        ek = E[k]
        for n in sorted(feedback.negatives[k]):
            total += float(ek @ E[n])
        for p in sorted(feedback.positives[k]):
            total -= float(ek @ E[p])
    return total


def regularizer(E: np.ndarray, E0: np.ndarray) -> float:
    """Total squared drift of every row from its anchor."""
    E = as_matrix(E, "E")
    E0 = as_matrix(E0, "E0")
    check_same_shape(E, E0)
    diff = E0 - E
    return float(np.sum(diff * diff))


def total_cost(E: np.ndarray, E0: np.ndarray, feedback: FeedbackSet, lam: float) -> float:
    return feedback_cost(E, feedback) + lam * regularizer(E, E0)


def cost_gradient(
    E: np.ndarray, E0: np.ndarray, feedback: FeedbackSet, lam: float
) -> np.ndarray:
    """Full-matrix analytic gradient of `total_cost` with respect to E."""
    E = as_matrix(E, "E")
    E0 = as_matrix(E0, "E0")
    check_same_shape(E, E0)
    grad = 2.0 * lam * (E - E0)
    for k in feedback.positives:
        for n in sorted(feedback.negatives[k]):
            grad[k] += E[n]
            grad[n] += E[k]
        for p in sorted(feedback.positives[k]):
            grad[k] -= E[p]
            grad[p] -= E[k]
    return grad


# -- optimization ------------------------------------------------------------


def _optimize(
    E0: np.ndarray, feedback: FeedbackSet, config: RefineConfig
) -> tuple[np.ndarray, list[float], list[int]]:
    """Run Adam on the constrained rows; returns (refined, cost trace, rows)."""
    if feedback.is_empty():
        raise PreconditionError("refinement needs at least one marked word")
    feedback.validate(E0.shape[0])
    rows = feedback.constrained_rows()

    E = E0.copy()
    adam = Adam(config.learning_rate, config.beta1, config.beta2, config.eps)
    trace = [total_cost(E, E0, feedback, config.lam)]
    sub = {"rows": E[rows].copy()}
    for _ in range(config.steps):
        grad = cost_gradient(E, E0, feedback, config.lam)
        adam.step(sub, {"rows": grad[rows]})
        E[rows] = sub["rows"]
        c = total_cost(E, E0, feedback, config.lam)
        if not np.isfinite(c):
            raise PreconditionError("refinement diverged to a non-finite cost")
        trace.append(c)
    return E, trace, rows


class EmbeddingRefiner(TransformerMixin, BaseEstimator):
    """Transformer that reshapes an embedding matrix around feedback.

    `fit(E, feedback)` optimizes a copy of E against the feedback set and
    stores the result; `transform` returns it.  The refined matrix is
    specific to the matrix seen at fit time, so `transform` only accepts a
    same-shaped input.
    """

    def __init__(
        self,
        lam: float = 1.0,
        steps: int = 100,
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lam = lam
        self.steps = steps
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def _config(self) -> RefineConfig:
        return RefineConfig(
            lam=self.lam,
            steps=self.steps,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
        )

    def fit(self, X, y=None):
        """X is the anchor matrix; y is the FeedbackSet."""
        if not isinstance(y, FeedbackSet):
            raise PreconditionError("fit requires a FeedbackSet as y")
        E0 = as_matrix(X, "X")
        refined, trace, rows = _optimize(E0, y, self._config())
        self.embedding_ = refined
        self.cost_trace_ = trace
        self.updated_rows_ = rows
        self.n_features_in_ = E0.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "embedding_"):
            raise NotFittedError("this EmbeddingRefiner instance is not fitted yet")
        X = as_matrix(X, "X")
        check_same_shape(X, self.embedding_, "input and fitted matrix")
        return self.embedding_.copy()


def refine(
    space: EmbeddingSpace, feedback: FeedbackSet, config: RefineConfig | None = None
) -> list[float]:
    """Refine `space.current` in place (atomically); returns the cost trace.

    On any failure the space is left untouched.
    """
    config = config or RefineConfig()
    refined, trace, _ = _optimize(space.current, feedback, config)
    space.set_current(refined)
    return trace
