"""Uncertainty sampling over an unlabeled document pool."""

from __future__ import annotations

import math

import numpy as np

from .classifier import ConvTextClassifier
from .corpus import Document
from .errors import PreconditionError
from .validation import check_probability_pair


def entropy(p) -> float:
    """Shannon entropy in nats of a normalized probability pair."""
    arr = check_probability_pair(p)
    total = 0.0
    for x in arr:
        if x > 0.0:
            total -= float(x) * math.log(float(x))
    return total


def uncertainty_sample(
    clf: ConvTextClassifier, pool: list[Document], n: int
) -> list[str]:
    """Ids of the n pool documents with the highest predictive entropy.

    Ties break by ascending document id; asking for more documents than the
    pool holds returns the whole pool.
    """
    if not pool:
        raise PreconditionError("unlabeled pool is empty")
    if n < 0:
        raise PreconditionError("selection size must be >= 0")
    probs = clf.predict_proba([doc.tokens for doc in pool])
    scored = [(entropy(probs[i]), doc.id) for i, doc in enumerate(pool)]
    scored.sort(key=lambda hd: (-hd[0], hd[1]))
    return [doc_id for _, doc_id in scored[:n]]


def augment_training_set(
    train: list[Document], extra: list[Document]
) -> list[Document]:
    """Concatenate newly labeled documents onto the training set.

    Every extra document must be labeled; duplicate ids are an error.
    """
    seen = {doc.id for doc in train}
    out = list(train)
    for doc in extra:
        if doc.label is None:
            raise PreconditionError(f"document {doc.id!r} has no label")
        if doc.id in seen:
            raise PreconditionError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
        out.append(doc)
    return out
