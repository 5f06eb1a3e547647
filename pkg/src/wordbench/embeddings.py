"""Bilingual word embedding store.

Words from two languages share one dense id space and one embedding matrix.
Each word is keyed by (surface, lang), so the same surface string may exist
in both languages as distinct entries.  The store keeps two matrices: the
frozen one loaded from disk and the current one, which refinement replaces.
Neighbor queries run an exhaustive cosine scan, which is exact and fast at
the vocabulary sizes this tool targets.

File format is word2vec text: a "count dim" header line followed by one
"word v1 ... vd" line per word.  One file per language.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import FormatError, NotFoundError, PreconditionError

SAVE_PRECISION = 6  # decimal digits in text output


@dataclass(frozen=True)
class WordRef:
    """A word addressed by surface form and language tag."""

    surface: str
    lang: str


class Vocabulary:
    """Ordered (surface, lang) entries with dense, stable ids."""

    def __init__(self) -> None:
        self.surfaces: list[str] = []
        self.langs: list[str] = []
        self._index: dict[tuple[str, str], int] = {}

    def __len__(self) -> int:
        return len(self.surfaces)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return tuple(key) in self._index

    def add(self, surface: str, lang: str) -> int:
        key = (surface, lang)
        if key in self._index:
            raise FormatError(f"duplicate entry {surface!r} ({lang})")
        idx = len(self.surfaces)
        self.surfaces.append(surface)
        self.langs.append(lang)
        self._index[key] = idx
        return idx

    def id_of(self, surface: str, lang: str) -> int:
        try:
            return self._index[(surface, lang)]
        except KeyError:
            raise NotFoundError(f"word {surface!r} ({lang}) not in vocabulary") from None

    def get(self, surface: str, lang: str) -> int | None:
        return self._index.get((surface, lang))

    def ref(self, word_id: int) -> WordRef:
        self._check_id(word_id)
        return WordRef(self.surfaces[word_id], self.langs[word_id])

    def ids_for_lang(self, lang: str) -> np.ndarray:
        return np.array(
            [i for i, l in enumerate(self.langs) if l == lang], dtype=np.int64
        )

    def _check_id(self, word_id: int) -> None:
        if not 0 <= word_id < len(self.surfaces):
            raise NotFoundError(f"invalid word id {word_id}")


def cosine(u, v) -> float:
    """Cosine similarity of two vectors; rejects zero-norm input."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise PreconditionError("zero vector has no cosine similarity")
    return float(np.dot(u, v) / (nu * nv))


class EmbeddingSpace:
    """Joint vocabulary plus current and frozen embedding matrices."""

    def __init__(self) -> None:
        self.vocab = Vocabulary()
        self.dim: int | None = None
        self._current = np.zeros((0, 0), dtype=np.float64)
        self._original = np.zeros((0, 0), dtype=np.float64)
        self._norms: np.ndarray | None = None

    # -- loading / saving ------------------------------------------------

    def load_text(self, source: str | Path | TextIO, lang: str) -> int:
        """Append one word2vec-text file for `lang`; returns rows added.

        The appended rows are written to both matrices, so `original`
        equals `current` at load time.
        """
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                return self._load_stream(fh, lang)
        return self._load_stream(source, lang)

    def _load_stream(self, fh: TextIO, lang: str) -> int:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise FormatError(f"malformed header {header.strip()!r}")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"malformed header {header.strip()!r}") from None
        if count < 0 or dim <= 0 and count > 0:
            raise FormatError(f"malformed header {header.strip()!r}")
        if self.dim is not None and count > 0 and dim != self.dim:
            raise FormatError(
                f"dim mismatch: file declares {dim}, space has {self.dim}"
            )

        rows = np.empty((count, dim), dtype=np.float64)
        new_entries: list[tuple[str, str]] = []
        seen: set[tuple[str, str]] = set()
        for k in range(count):
            line = fh.readline()
            if not line:
                raise FormatError(f"truncated file: expected {count} rows, got {k}")
            fields = line.rstrip("\n").split(" ")
            fields = [f for f in fields if f != ""]
            if len(fields) != dim + 1:
                raise FormatError(f"dim mismatch at line {k + 2}")
            surface = fields[0]
            key = (surface, lang)
            if key in seen or key in self.vocab:
                raise FormatError(f"duplicate entry {surface!r} ({lang})")
            seen.add(key)
            try:
                rows[k] = [float(x) for x in fields[1:]]
            except ValueError:
                raise FormatError(f"bad value at line {k + 2}") from None
            if not np.all(np.isfinite(rows[k])):
                raise FormatError(f"non-finite value at line {k + 2}")
            new_entries.append(key)

        # All rows parsed cleanly; commit.
        for surface, l in new_entries:
            self.vocab.add(surface, l)
        if self.dim is None and count > 0:
            self.dim = dim
        d = self.dim if self.dim is not None else dim
        if self._current.size == 0:
            self._current = rows.copy()
            self._original = rows.copy()
        else:
            self._current = np.vstack([self._current, rows])
            self._original = np.vstack([self._original, rows])
        if self._current.shape[1] == 0 and d:
            self._current = self._current.reshape(0, d)
            self._original = self._original.reshape(0, d)
        self._original.setflags(write=False)
        self._norms = None
        return count

    def save_text(
        self,
        sink: str | Path | TextIO,
        which: str = "current",
        lang: str | None = None,
        precision: int = SAVE_PRECISION,
    ) -> int:
        """Write rows in word2vec text format; returns bytes written.

        With `lang` set, only that language's rows are written and the
        output round-trips through `load_text(..., lang)`.  Without it,
        every row is written in id order.
        """
        if which not in ("current", "original"):
            raise PreconditionError(f"unknown matrix {which!r}")
        matrix = self._current if which == "current" else self._original
        if lang is None:
            ids: Sequence[int] = range(len(self.vocab))
        else:
            ids = self.vocab.ids_for_lang(lang).tolist()
        d = self.dim if self.dim is not None else 0
        buf = io.StringIO()
        buf.write(f"{len(ids)} {d}\n")
        fmt = f"%.{precision}f"
        for i in ids:
            vals = " ".join(fmt % x for x in matrix[i])
            buf.write(f"{self.vocab.surfaces[i]} {vals}\n")
        data = buf.getvalue()
        if isinstance(sink, (str, Path)):
            with open(sink, "w", encoding="utf-8") as fh:
                fh.write(data)
        else:
            sink.write(data)
        return len(data.encode("utf-8"))

    # -- matrices --------------------------------------------------------

    @property
    def current(self) -> np.ndarray:
        return self._current

    @property
    def original(self) -> np.ndarray:
        return self._original

    def set_current(self, matrix: np.ndarray) -> None:
        """Install a refined matrix; shape must match and values be finite."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != self._current.shape:
            raise PreconditionError(
                f"shape mismatch: {matrix.shape} vs {self._current.shape}"
            )
        if not np.all(np.isfinite(matrix)):
            raise PreconditionError("refined matrix contains non-finite values")
        self._current = matrix.copy()
        self._norms = None

    def vector(self, word_id: int, which: str = "current") -> np.ndarray:
        self.vocab._check_id(word_id)
        matrix = self._current if which == "current" else self._original
        return matrix[word_id]

    # -- neighbor search -------------------------------------------------

    def _row_norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = np.linalg.norm(self._current, axis=1)
        return self._norms

    def nearest_neighbors(
        self,
        query_id: int,
        k: int,
        lang: str | None = None,
        exclude: Iterable[int] = (),
    ) -> list[tuple[int, float]]:
        """Top-k rows by cosine to the query, sorted descending.

        Ties break by ascending id.  Zero-norm rows never qualify as
        candidates; a zero-norm query is an error.
        """
        self.vocab._check_id(query_id)
        if k < 1:
            raise PreconditionError("k must be >= 1")
        norms = self._row_norms()
        qnorm = norms[query_id]
        if qnorm == 0.0:
            raise PreconditionError("zero vector has no cosine similarity")

        if lang is None:
            cand = np.arange(len(self.vocab), dtype=np.int64)
        else:
            cand = self.vocab.ids_for_lang(lang)
        drop = set(int(e) for e in exclude)
        drop.add(int(query_id))
        mask = norms[cand] > 0.0
        mask &= ~np.isin(cand, np.fromiter(drop, dtype=np.int64))
        cand = cand[mask]
        if cand.size == 0:
            return []
        sims = self._current[cand] @ self._current[query_id]
        sims /= norms[cand] * qnorm
        order = np.lexsort((cand, -sims))[: min(k, cand.size)]
        return [(int(cand[i]), float(sims[i])) for i in order]
