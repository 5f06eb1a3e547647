"""Convolutional text classifier over frozen word embeddings.

A Kim-style CNN: each document is the concatenation of its token embeddings,
run through parallel banks of width-2 and width-3 filters, ReLU, max-over-time
pooling, and a softmax output layer.  Embeddings are never updated here; the
model only learns filters and output weights, which keeps the cross-lingual
geometry of the embedding space intact.

Implemented directly in numpy because downstream code needs exact per-example
loss gradients with respect to both the parameters and each token's embedding
slot.  Everything is deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .embeddings import EmbeddingSpace
from .errors import PreconditionError
from .optim import Adam
from .validation import as_matrix, check_binary_labels, check_token_sequences

PARAMS_FORMAT_VERSION = 1


@dataclass
class CnnParams:
    """All trainable arrays, keyed by filter width where applicable."""

    conv_w: dict[int, np.ndarray]  # width -> (n_filters, width * dim)
    conv_b: dict[int, np.ndarray]  # width -> (n_filters,)
    out_w: np.ndarray  # (total_filters, 2)
    out_b: np.ndarray  # (2,)

    def as_dict(self) -> dict[str, np.ndarray]:
        """Live views for the optimizer; mutating them mutates the params."""
        d: dict[str, np.ndarray] = {}
        for w in sorted(self.conv_w):
            d[f"conv_w{w}"] = self.conv_w[w]
            d[f"conv_b{w}"] = self.conv_b[w]
        d["out_w"] = self.out_w
        d["out_b"] = self.out_b
        return d

    def zeros_like(self) -> "CnnParams":
        return CnnParams(
            conv_w={w: np.zeros_like(a) for w, a in self.conv_w.items()},
            conv_b={w: np.zeros_like(a) for w, a in self.conv_b.items()},
            out_w=np.zeros_like(self.out_w),
            out_b=np.zeros_like(self.out_b),
        )

    def copy(self) -> "CnnParams":
        return CnnParams(
            conv_w={w: a.copy() for w, a in self.conv_w.items()},
            conv_b={w: a.copy() for w, a in self.conv_b.items()},
            out_w=self.out_w.copy(),
            out_b=self.out_b.copy(),
        )


def _resolve_matrix(embeddings) -> np.ndarray:
    if isinstance(embeddings, EmbeddingSpace):
        return embeddings.current
    if embeddings is None:
        raise PreconditionError("classifier needs an embedding matrix")
    return as_matrix(embeddings, "embeddings")


def _windows(X: np.ndarray, width: int) -> np.ndarray:
    """All contiguous row windows of `width`, flattened to (n_win, width*dim)."""
    m, d = X.shape
    idx = np.arange(m - width + 1)[:, None] + np.arange(width)[None, :]
    return X[idx].reshape(m - width + 1, width * d)


class ConvTextClassifier(ClassifierMixin, BaseEstimator):
    """Binary CNN text classifier with frozen embeddings.

    Parameters
    ----------
    embeddings : EmbeddingSpace or array of shape (n_words, dim)
        The (frozen) embedding table; token ids index into it.
    filter_widths, n_filters : convolution bank layout.
    epochs, batch_size, learning_rate, beta1, beta2, eps : Adam training
        schedule; full determinism given `seed`.
    """

    def __init__(
        self,
        embeddings=None,
        filter_widths=(2, 3),
        n_filters=25,
        epochs=30,
        batch_size=16,
        learning_rate=1e-3,
        beta1=0.9,
        beta2=0.999,
        eps=1e-8,
        seed=0,
    ):
        self.embeddings = embeddings
        self.filter_widths = filter_widths
        self.n_filters = n_filters
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed

    # -- setup -----------------------------------------------------------

    def _matrix(self) -> np.ndarray:
        return _resolve_matrix(self.embeddings)

    def _widths(self) -> tuple[int, ...]:
        widths = tuple(sorted(int(w) for w in self.filter_widths))
        if not widths or min(widths) < 1:
            raise PreconditionError("filter widths must be positive")
        return widths

    def _init_params(self, dim: int, rng: np.random.Generator) -> CnnParams:
        widths = self._widths()
        conv_w = {}
        conv_b = {}
        for w in widths:
            conv_w[w] = rng.uniform(-0.1, 0.1, size=(self.n_filters, w * dim))
            conv_b[w] = rng.uniform(-0.1, 0.1, size=self.n_filters)
        total = self.n_filters * len(widths)
        out_w = rng.uniform(-0.1, 0.1, size=(total, 2))
        out_b = rng.uniform(-0.1, 0.1, size=2)
        return CnnParams(conv_w, conv_b, out_w, out_b)

    def _doc_windows(self, tokens: list[int], E: np.ndarray) -> dict[int, np.ndarray]:
        """Embed one document, zero-padding up to the widest filter."""
        widths = self._widths()
        max_w = max(widths)
        X = E[tokens]
        if X.shape[0] < max_w:
            pad = np.zeros((max_w - X.shape[0], X.shape[1]))
            X = np.vstack([X, pad])
        return {w: _windows(X, w) for w in widths}

    # -- forward / backward ----------------------------------------------

    def _forward(self, windows: dict[int, np.ndarray], params: CnnParams):
        pooled_parts = []
        pool_info = []
        for w in self._widths():
            pre = windows[w] @ params.conv_w[w].T + params.conv_b[w]
            act = np.maximum(pre, 0.0)
            arg = np.argmax(act, axis=0)
            cols = np.arange(act.shape[1])
            pooled_parts.append(act[arg, cols])
            pool_info.append((w, pre[arg, cols], arg))
        pooled = np.concatenate(pooled_parts)
        logits = pooled @ params.out_w + params.out_b
        return pooled, pool_info, logits

    @staticmethod
    def _loss_probs(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
        m = logits.max()
        lse = m + np.log(np.exp(logits - m).sum())
        probs = np.exp(logits - lse)
        return float(lse - logits[label]), probs

    def _backward(
        self,
        windows: dict[int, np.ndarray],
        label: int,
        params: CnnParams,
        grads: CnnParams | None = None,
        token_grads: np.ndarray | None = None,
    ) -> float:
        """Accumulate per-example gradients into `grads` / `token_grads`."""
        pooled, pool_info, logits = self._forward(windows, params)
        loss, probs = self._loss_probs(logits, label)
        if grads is None and token_grads is None:
            return loss

        dz = probs.copy()
        dz[label] -= 1.0
        if grads is not None:
            grads.out_w += np.outer(pooled, dz)
            grads.out_b += dz
        dpooled = params.out_w @ dz
        F = self.n_filters
        offset = 0
        for w, sel_pre, arg in pool_info:
            dp = dpooled[offset : offset + F]
            r = dp * (sel_pre > 0.0)
            if grads is not None:
                grads.conv_b[w] += r
                grads.conv_w[w] += r[:, None] * windows[w][arg]
            if token_grads is not None:
                d = token_grads.shape[1]
                for f in range(F):
                    if r[f] != 0.0:
                        lo = int(arg[f])
                        contrib = (r[f] * params.conv_w[w][f]).reshape(w, d)
                        hi = min(lo + w, token_grads.shape[0])
                        token_grads[lo:hi] += contrib[: hi - lo]
            offset += F
        return loss

    # -- estimator API ---------------------------------------------------

    def fit(self, X, y):
        """Train on token-id sequences X with binary labels y."""
        E = self._matrix()
        seqs = check_token_sequences(X)
        if not seqs:
            raise PreconditionError("training corpus is empty")
        labels = check_binary_labels(y, n=len(seqs))
        for seq in seqs:
            if max(seq) >= E.shape[0]:
                raise PreconditionError("token id outside embedding table")

        rng = np.random.default_rng(self.seed)
        params = self._init_params(E.shape[1], rng)
        adam = Adam(self.learning_rate, self.beta1, self.beta2, self.eps)
        caches = [self._doc_windows(seq, E) for seq in seqs]

        n = len(seqs)
        curve = []
        for _ in range(self.epochs):
            perm = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, self.batch_size):
                batch = perm[start : start + self.batch_size]
                grads = params.zeros_like()
                for i in batch:
                    epoch_loss += self._backward(caches[i], labels[i], params, grads)
                gdict = grads.as_dict()
                for g in gdict.values():
                    g /= len(batch)
                adam.step(params.as_dict(), gdict)
            curve.append(epoch_loss / n)

        self.params_ = params
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = E.shape[1]
        self.loss_curve_ = curve
        return self

    def _check_fitted(self) -> CnnParams:
        if not hasattr(self, "params_"):
            raise NotFittedError(
                "this ConvTextClassifier instance is not fitted yet"
            )
        return self.params_

    def predict_proba(self, X) -> np.ndarray:
        params = self._check_fitted()
        E = self._matrix()
        seqs = check_token_sequences(X)
        out = np.empty((len(seqs), 2))
        for i, seq in enumerate(seqs):
            _, _, logits = self._forward(self._doc_windows(seq, E), params)
            _, out[i] = self._loss_probs(logits, 0)
        return out

    def predict(self, X) -> np.ndarray:
        # np.argmax takes the first maximum, so an exact 0.5/0.5 tie
        # predicts class 0.
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y, sample_weight=None) -> float:
        seqs = check_token_sequences(X)
        if not seqs:
            raise PreconditionError("evaluation set is empty")
        labels = check_binary_labels(y, n=len(seqs))
        return float(np.mean(self.predict(seqs) == labels))

    # -- gradients for interpretation ------------------------------------

    def loss_and_gradients(
        self, tokens, label: int
    ) -> tuple[float, CnnParams, np.ndarray]:
        """Per-example loss plus gradients wrt parameters and token slots.

        The returned token gradient has one row per token occurrence, in
        document order; repeated words get one row per occurrence.
        """
        params = self._check_fitted()
        E = self._matrix()
        seq = [int(t) for t in tokens]
        if not seq:
            raise PreconditionError("empty document")
        if label not in (0, 1):
            raise PreconditionError("label must be 0 or 1")
        windows = self._doc_windows(seq, E)
        grads = params.zeros_like()
        padded = max(len(seq), max(self._widths()))
        dX = np.zeros((padded, E.shape[1]))
        loss = self._backward(windows, label, params, grads, dX)
        return loss, grads, dX[: len(seq)]

    # -- persistence -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        params = self._check_fitted()
        arrays: dict[str, np.ndarray] = {}
        for w in self._widths():
            arrays[f"conv_w{w}"] = params.conv_w[w]
            arrays[f"conv_b{w}"] = params.conv_b[w]
        arrays["out_w"] = params.out_w
        arrays["out_b"] = params.out_b
        config = {
            "format_version": PARAMS_FORMAT_VERSION,
            "filter_widths": list(self._widths()),
            "n_filters": self.n_filters,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "seed": self.seed,
        }
        np.savez(path, config=np.array(json.dumps(config)), **arrays)

    @classmethod
    def load(cls, path: str | Path, embeddings) -> "ConvTextClassifier":
        with np.load(path, allow_pickle=False) as data:
            config = json.loads(str(data["config"]))
            if config.get("format_version") != PARAMS_FORMAT_VERSION:
                raise PreconditionError(
                    f"unsupported checkpoint version {config.get('format_version')!r}"
                )
            widths = tuple(config["filter_widths"])
            clf = cls(
                embeddings=embeddings,
                filter_widths=widths,
                n_filters=config["n_filters"],
                epochs=config["epochs"],
                batch_size=config["batch_size"],
                learning_rate=config["learning_rate"],
                beta1=config["beta1"],
                beta2=config["beta2"],
                eps=config["eps"],
                seed=config["seed"],
            )
            clf.params_ = CnnParams(
                conv_w={w: data[f"conv_w{w}"].copy() for w in widths},
                conv_b={w: data[f"conv_b{w}"].copy() for w in widths},
                out_w=data["out_w"].copy(),
                out_b=data["out_b"].copy(),
            )
        clf.classes_ = np.array([0, 1])
        clf.n_features_in_ = clf._matrix().shape[1]
        return clf
