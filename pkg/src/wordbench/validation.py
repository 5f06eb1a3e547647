"""Small input-validation helpers used by the estimators and numeric code."""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError

PROB_ATOL = 1e-9


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array and require finite entries."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise PreconditionError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} contains non-finite values")
    return arr


def as_vector(v, name: str = "v") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise PreconditionError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "matrices") -> None:
    if a.shape != b.shape:
        raise PreconditionError(f"shape mismatch between {what}: {a.shape} vs {b.shape}")


def check_probability_pair(p) -> np.ndarray:
    """Require a normalized two-class probability vector."""
    arr = as_vector(p, "probability pair")
    if arr.shape != (2,):
        raise PreconditionError(f"expected a probability pair, got shape {arr.shape}")
    if np.any(arr < 0):
        raise PreconditionError("probabilities must be non-negative")
    if abs(arr.sum() - 1.0) > PROB_ATOL:
        raise PreconditionError(f"probabilities must sum to 1, got {arr.sum()!r}")
    return arr


def check_token_sequences(X, allow_empty: bool = False) -> list[list[int]]:
    """Normalize a collection of token-id sequences to lists of ints."""
    seqs = []
    for i, seq in enumerate(X):
        toks = [int(t) for t in seq]
        if not toks and not allow_empty:
            raise PreconditionError(f"document at position {i} has no tokens")
        if toks and min(toks) < 0:
            raise PreconditionError(f"document at position {i} has a negative token id")
        seqs.append(toks)
    return seqs


def check_binary_labels(y, n: int | None = None) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise PreconditionError("labels must be 1-dimensional")
    if n is not None and arr.shape[0] != n:
        raise PreconditionError(f"got {arr.shape[0]} labels for {n} documents")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise PreconditionError("labels must be 0 or 1")
    return arr.astype(np.int64)
